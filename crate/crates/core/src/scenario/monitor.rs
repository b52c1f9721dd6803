//! Monitor photodiode + digital low-pass chain. The controller sees optical
//! power only through [`monitor_sample`], never the fine-grained fields.

use crate::error::{Error, Result};
use crate::field::CORES;

use super::config::MonitorModel;

/// Block-averages per-core powers sampled at the fine timestep down to one
/// reading per control sample. `oversample` fine samples form one control
/// window; models the photodiode plus the digital low-pass filter that
/// averages fast transitions.
pub fn monitor_sample(
    fine_powers: &[[f64; CORES]],
    m: &MonitorModel,
    oversample: usize,
) -> Result<Vec<[f64; CORES]>> {
    m.validate()?;
    if oversample < 10 {
        return Err(Error::Contract(
            "monitor requires >= 10 fine samples per control window".into(),
        ));
    }
    if fine_powers.len() % oversample != 0 {
        return Err(Error::Contract(
            "fine trace length must be a whole number of control windows".into(),
        ));
    }
    let gain = m.responsivity * 10f64.powf(-m.tap_loss_db / 10.0);
    Ok(fine_powers
        .chunks_exact(oversample)
        .map(|window| {
            let mut acc = [0.0; CORES];
            for row in window {
                for (a, p) in acc.iter_mut().zip(row.iter()) {
                    *a += p;
                }
            }
            acc.map(|a| a / oversample as f64 * gain)
        })
        .collect())
}
