//! Figures of merit computed from simulated power traces: fringe visibility,
//! inter-core crosstalk, extinction ratio, insertion loss and rise time.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::CORES;

/// Uniformly sampled per-core output powers.
#[derive(Debug, Clone, Default)]
pub struct PowerTrace {
    pub t0: f64,
    pub dt: f64,
    pub powers: Vec<[f64; CORES]>,
    /// Commanded target core per sample, when a controller was running.
    pub target: Vec<u8>,
    /// Control sample index per row.
    pub control_index: Vec<u64>,
}

impl PowerTrace {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            t0: 0.0,
            dt,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    pub fn core(&self, core: usize) -> impl Iterator<Item = f64> + '_ {
        self.powers.iter().map(move |p| p[core])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Contract("trace dt must be > 0".into()));
        }
        if self
            .powers
            .iter()
            .any(|row| row.iter().any(|p| !p.is_finite() || *p < 0.0))
        {
            return Err(Error::Contract("trace powers must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Everything the device characterization reports. Serializes flat.
#[derive(Debug, Clone, Default, Serialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    /// `ic_xt[j]` is the crosstalk of adjacent core j against the selected
    /// core, dB (negative when the selected core dominates).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic_xt_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic_xt_mean_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic_xt_min_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic_xt_max_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extinction_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub insertion_loss_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rise_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwell_s: Option<f64>,
}

/// Fringe visibility `(P_max - P_min) / (P_max + P_min)` over a sampled
/// fringe. Errors on a constant trace (visibility undefined, not zero).
pub fn visibility(fringe: &[f64]) -> Result<f64> {
    extrema_visibility(fringe, |s| {
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for &v in s {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    })
}

/// Percentile-based visibility (P1/P99 extrema) for noisy fringes.
pub fn visibility_robust(fringe: &[f64]) -> Result<f64> {
    extrema_visibility(fringe, |s| {
        let mut sorted: Vec<f64> = s.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        let idx = |q: f64| ((n as f64 - 1.0) * q).round() as usize;
        (sorted[idx(0.01)], sorted[idx(0.99)])
    })
}

fn extrema_visibility(fringe: &[f64], extrema: impl Fn(&[f64]) -> (f64, f64)) -> Result<f64> {
    if fringe.len() < 2 {
        return Err(Error::Metric("fringe needs at least two samples".into()));
    }
    if fringe.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Metric("fringe powers must be finite and >= 0".into()));
    }
    let (lo, hi) = extrema(fringe);
    if hi - lo < f64::EPSILON * hi.max(1.0) {
        return Err(Error::Metric("constant trace: visibility undefined".into()));
    }
    Ok((hi - lo) / (hi + lo))
}

/// Inter-core crosstalk `10*log10(p_adjacent / p_selected)` in dB; negative
/// when the selected core dominates.
pub fn ic_xt(p_selected: f64, p_adjacent: f64) -> Result<f64> {
    if !(p_selected > 0.0) || !(p_adjacent > 0.0) {
        return Err(Error::Metric("ic_xt requires positive powers".into()));
    }
    Ok(10.0 * (p_adjacent / p_selected).log10())
}

/// Extinction ratio `10*log10(p_high / p_low)` in dB.
pub fn extinction_ratio(p_high: f64, p_low: f64) -> Result<f64> {
    if !(p_low > 0.0) || p_high < p_low {
        return Err(Error::Metric("extinction requires p_high >= p_low > 0".into()));
    }
    Ok(10.0 * (p_high / p_low).log10())
}

/// Insertion loss `10*log10(p_in / p_out)` in dB.
pub fn insertion_loss(p_in: f64, p_out: f64) -> Result<f64> {
    if !(p_in > 0.0) || !(p_out > 0.0) {
        return Err(Error::Metric("insertion loss requires positive powers".into()));
    }
    Ok(10.0 * (p_in / p_out).log10())
}

/// 10-90% rise time of a rising step in `values` sampled every `dt`.
///
/// The step amplitude is taken between the initial low plateau and the final
/// high plateau; crossings are linearly interpolated. The 10% time is the
/// last crossing before the first 90% crossing, so a slow approach out of
/// the low plateau is measured, not an early transient.
pub fn rise_time_10_90(values: &[f64], dt: f64) -> Result<f64> {
    if values.len() < 4 || !(dt > 0.0) {
        return Err(Error::Metric("rise time needs a sampled step".into()));
    }
    let head = values.len().max(10) / 10;
    let low: f64 = values[..head].iter().sum::<f64>() / head as f64;
    let high: f64 = values[values.len() - head..].iter().sum::<f64>() / head as f64;
    let amp = high - low;
    if amp <= f64::EPSILON * high.abs().max(1.0) {
        return Err(Error::Metric("no rising step found".into()));
    }
    let l90 = low + 0.9 * amp;
    let l10 = low + 0.1 * amp;
    let cross = |i: usize, level: f64| -> f64 {
        let frac = (level - values[i - 1]) / (values[i] - values[i - 1]);
        (i as f64 - 1.0 + frac) * dt
    };
    let mut i90 = None;
    for i in 1..values.len() {
        if values[i - 1] < l90 && values[i] >= l90 {
            i90 = Some(i);
            break;
        }
    }
    let i90 = i90.ok_or_else(|| Error::Metric("no 90% crossing found".into()))?;
    let mut i10 = None;
    for i in (1..=i90).rev() {
        if values[i - 1] < l10 && values[i] >= l10 {
            i10 = Some(i);
            break;
        }
    }
    let i10 = i10.ok_or_else(|| Error::Metric("no 10% crossing found".into()))?;
    Ok(cross(i90, l90) - cross(i10, l10))
}

/// Dwell times between changes of the commanded target core.
pub fn dwell_times(trace: &PowerTrace) -> Vec<f64> {
    let mut dwells = Vec::new();
    if trace.target.len() != trace.powers.len() || trace.target.is_empty() {
        return dwells;
    }
    let mut last_change: Option<usize> = None;
    for i in 1..trace.target.len() {
        if trace.target[i] != trace.target[i - 1] {
            if let Some(prev) = last_change {
                dwells.push((i - prev) as f64 * trace.dt);
            }
            last_change = Some(i);
        }
    }
    dwells
}
