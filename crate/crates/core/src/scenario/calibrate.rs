//! Calibrated default parameters.
//!
//! These values are fitted, not measured: each one is derived in closed form
//! from a target figure of merit of the reference device (insertion loss
//! 7.7 dB, extinction 19.5 dB, adjacent-core crosstalk pattern
//! (-17, -19.5, -17) dB, WDM visibility window, 0.6 dB average sensitivity
//! penalty). The `calibrate` CLI subcommand re-derives and prints them.

use serde::Serialize;

use crate::field::CORES;

/// Target adjacent-core crosstalk, dB, for core offsets 1, 2 and 3 from the
/// selected core. The pattern is offset-symmetric (|U_1| = |U_3| for a real
/// amplitude imbalance through the DFT fabric), so offsets 1 and 3 share a
/// value.
pub const XT_TARGET_DB: [f64; 3] = [-17.0, -19.5, -17.0];

/// Target end-to-end insertion loss of the routed path, dB.
pub const INSERTION_LOSS_TARGET_DB: f64 = 7.7;

/// Target average crosstalk-induced sensitivity penalty, dB.
pub const PENALTY_TARGET_DB: f64 = 0.6;

/// Calibrated per-path field-amplitude weights (path 1 = 1 by convention).
///
/// Routed through the DFT fabric, the output amplitudes are the 4-point DFT
/// of the weight vector `t`, so with `t = (1, v1, 1, v3)`:
///   `U_0 = 2 + v1 + v3` (selected), `|U_1| = |U_3| = v1 - v3`,
///   `|U_2| = |2 - v1 - v3|`.
/// Solving the crosstalk targets gives `U_0 = 4 / (1 - g2)` with
/// `g2 = 10^(xt2/20)`, then `v1,v3` from sum and difference.
pub fn calibrated_amplitudes() -> [f64; CORES] {
    let g1 = 10f64.powf(XT_TARGET_DB[0] / 20.0);
    let g2 = 10f64.powf(XT_TARGET_DB[1] / 20.0);
    let s = 4.0 / (1.0 - g2);
    let diff = s * g1;
    let sum = s - 2.0;
    [1.0, (sum + diff) / 2.0, 1.0, (sum - diff) / 2.0]
}

/// Calibrated per-path power losses, dB, realizing the amplitude weights on
/// top of a common base loss chosen so the routed insertion loss is 7.7 dB.
pub fn calibrated_losses_db() -> [f64; CORES] {
    let t = calibrated_amplitudes();
    let s: f64 = t.iter().sum();
    let base = INSERTION_LOSS_TARGET_DB + 20.0 * (s / 4.0).log10();
    core::array::from_fn(|i| base - 20.0 * t[i].log10())
}

/// Calibrated residual path-length mismatch, meters. Fitted so the
/// four-state routing visibility stays >= 0.99 over 1540-1560 nm and falls
/// off quadratically toward 1527 nm (group index 1.468, reference 1550 nm).
pub fn calibrated_delta_lengths_m() -> [f64; CORES] {
    [0.0, 14.0e-6, -5.6e-6, 12.6e-6]
}

/// Total residual crosstalk into a selected core: the power sum of the three
/// adjacent-core contributions, dB.
pub fn total_residual_xt_db() -> f64 {
    let total: f64 = XT_TARGET_DB
        .iter()
        .map(|xt| 10f64.powf(xt / 10.0))
        .sum();
    10.0 * total.log10()
}

/// Calibrated in-band coherent coupling factor, dB: the fraction of the
/// residual crosstalk that beats coherently within the receiver band. Chosen
/// so the eye-closure penalty of the total residual crosstalk equals the
/// 0.6 dB target: invert `penalty = -10*log10(1 - 2*10^(eff/20))` for the
/// effective in-band crosstalk and subtract the total.
pub fn calibrated_coupling_db() -> f64 {
    let amp = (1.0 - 10f64.powf(-PENALTY_TARGET_DB / 10.0)) / 2.0;
    let eff_db = 20.0 * amp.log10();
    eff_db - total_residual_xt_db()
}

/// Calibrated phase-drift diffusion, rad^2/s: seconds-scale wander of the
/// free-running interferometer.
pub const DRIFT_DIFFUSION_RAD2_PER_S: f64 = 5.0;

/// Snapshot of every calibrated parameter, embedded in scenario reports.
#[derive(Debug, Clone, Serialize)]
pub struct CalibratedParams {
    pub amplitude_weights: [f64; CORES],
    pub path_loss_db: [f64; CORES],
    pub delta_length_m: [f64; CORES],
    pub coupling_db: f64,
    pub total_residual_xt_db: f64,
    pub drift_diffusion_rad2_per_s: f64,
    pub xt_target_db: [f64; 3],
    pub insertion_loss_target_db: f64,
    pub penalty_target_db: f64,
}

impl CalibratedParams {
    pub fn derive() -> Self {
        Self {
            amplitude_weights: calibrated_amplitudes(),
            path_loss_db: calibrated_losses_db(),
            delta_length_m: calibrated_delta_lengths_m(),
            coupling_db: calibrated_coupling_db(),
            total_residual_xt_db: total_residual_xt_db(),
            drift_diffusion_rad2_per_s: DRIFT_DIFFUSION_RAD2_PER_S,
            xt_target_db: XT_TARGET_DB,
            insertion_loss_target_db: INSERTION_LOSS_TARGET_DB,
            penalty_target_db: PENALTY_TARGET_DB,
        }
    }
}
