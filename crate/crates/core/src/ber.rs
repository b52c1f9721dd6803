//! OOK transceiver model: Gaussian-noise analytic BER, coherent-crosstalk
//! sensitivity penalty, and a Monte-Carlo bit-level check of the same model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Q factor anchoring BER 1e-9 at the configured receiver sensitivity.
pub const Q_REF: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TransceiverConfig {
    /// Line rate, bits per second.
    pub bit_rate: f64,
    /// PRBS order (the field measurement uses 2^37; desk default 15).
    pub prbs_order: u32,
    /// Received power for BER 1e-9 back-to-back, dBm.
    pub sensitivity_dbm: f64,
    /// Transmitter 1/0 extinction, dB.
    pub extinction_tx_db: f64,
}

impl Default for TransceiverConfig {
    fn default() -> Self {
        Self {
            bit_rate: 1e9,
            prbs_order: 15,
            sensitivity_dbm: -24.0,
            extinction_tx_db: 9.0,
        }
    }
}

impl TransceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bit_rate > 0.0) {
            return Err(Error::Config("bit_rate must be > 0".into()));
        }
        if !(7..=37).contains(&self.prbs_order) {
            return Err(Error::Config("prbs_order must be in [7, 37]".into()));
        }
        if !self.sensitivity_dbm.is_finite() || !(self.extinction_tx_db >= 0.0) {
            return Err(Error::Config("invalid transceiver parameters".into()));
        }
        Ok(())
    }

    /// Normalized 1/0 optical power levels with unit mean power.
    pub fn ook_levels(&self) -> (f64, f64) {
        let r = 10f64.powf(-self.extinction_tx_db / 10.0);
        let p1 = 2.0 / (1.0 + r);
        (p1, p1 * r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BerPoint {
    pub received_power_dbm: f64,
    pub ber: f64,
}

/// Q factor at a received power: `Q = Q_REF * 10^((P - P_sens)/20)`.
pub fn q_factor(received_dbm: f64, cfg: &TransceiverConfig) -> f64 {
    Q_REF * 10f64.powf((received_dbm - cfg.sensitivity_dbm) / 20.0)
}

/// Gaussian-noise OOK bit error rate, `BER = erfc(Q/sqrt(2))/2`.
pub fn analytic_ber(received_dbm: f64, cfg: &TransceiverConfig) -> f64 {
    0.5 * erfc(q_factor(received_dbm, cfg) / std::f64::consts::SQRT_2)
}

/// Received power at which the analytic curve hits `ber_target`.
pub fn power_for_ber(ber_target: f64, cfg: &TransceiverConfig) -> f64 {
    let q = std::f64::consts::SQRT_2 * erfc_inv(2.0 * ber_target);
    cfg.sensitivity_dbm + 20.0 * (q / Q_REF).log10()
}

/// Coherent (interferometric) eye-closure sensitivity penalty for in-band
/// crosstalk at `ic_xt_db` (must be negative):
/// `penalty = -10*log10(1 - 2*sqrt(10^(ic_xt/10)))`.
pub fn crosstalk_penalty(ic_xt_db: f64) -> Result<f64> {
    if !(ic_xt_db < 0.0) {
        return Err(Error::Contract("ic_xt_db must be < 0".into()));
    }
    let amp = 10f64.powf(ic_xt_db / 20.0);
    let closure = 1.0 - 2.0 * amp;
    if closure <= 0.0 {
        return Err(Error::Contract(
            "crosstalk too strong for the eye-closure model (needs ic_xt < -6.02 dB)".into(),
        ));
    }
    Ok(-10.0 * closure.log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McBerResult {
    pub errors: u64,
    pub ber: f64,
    /// False when fewer than ~10 errors are expected, i.e. the estimate is
    /// not statistically resolvable at this power.
    pub resolved: bool,
}

/// Per-bit Gaussian decision model consistent with [`analytic_ber`]:
/// a bit errors when a unit-variance noise draw exceeds the Q factor.
/// Deterministic per seed.
pub fn monte_carlo_ber(
    bits: &[u8],
    received_dbm: f64,
    cfg: &TransceiverConfig,
    seed: u64,
) -> McBerResult {
    let q = q_factor(received_dbm, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = 0u64;
    for _bit in bits {
        // symmetric threshold: same error probability for marks and spaces
        let n: f64 = StandardNormal.sample(&mut rng);
        if n > q {
            errors += 1;
        }
    }
    let ber = errors as f64 / bits.len().max(1) as f64;
    let expected = analytic_ber(received_dbm, cfg) * bits.len() as f64;
    McBerResult {
        errors,
        ber,
        resolved: expected >= 10.0,
    }
}
