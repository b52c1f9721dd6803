//! Environmental phase drift and static path impairments.
//!
//! Each interferometer path accumulates a Wiener-process phase: increments
//! are independent Gaussians with variance `diffusion * dt`. Static
//! impairments cover per-path loss imbalance and residual path-length
//! mismatch, which turns into a wavelength-dependent phase offset.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::field::{wrap_phase, PhaseSet, CORES};

/// Per-path environmental phase with its stochastic parameters. Evolution is
/// deterministic given the seed.
#[derive(Debug, Clone)]
pub struct DriftState {
    theta_n: PhaseSet,
    diffusion: [f64; CORES],
    rng: ChaCha8Rng,
    seed: u64,
}

impl DriftState {
    pub fn new(seed: u64, diffusion: [f64; CORES]) -> Result<Self> {
        if diffusion.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Contract("diffusion must be >= 0".into()));
        }
        Ok(Self {
            theta_n: PhaseSet::zero(),
            diffusion,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        })
    }

    pub fn uniform(seed: u64, diffusion: f64) -> Result<Self> {
        Self::new(seed, [diffusion; CORES])
    }

    /// Starts each path at an independent uniform random phase instead of 0.
    pub fn randomize_phases(&mut self) {
        use rand::Rng;
        let mut phases = [0.0; CORES];
        for p in phases.iter_mut() {
            *p = self.rng.gen_range(0.0..std::f64::consts::TAU);
        }
        self.theta_n = PhaseSet::new(phases).expect("finite");
    }

    pub fn theta_n(&self) -> &PhaseSet {
        &self.theta_n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Advances every path by an independent `N(0, diffusion*dt)` increment,
    /// wrapping into `[0, 2*pi)`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Contract("drift step requires dt > 0".into()));
        }
        let mut phases = *self.theta_n.phases();
        for (p, d) in phases.iter_mut().zip(self.diffusion.iter()) {
            if *d > 0.0 {
                let sigma = (d * dt).sqrt();
                let n = Normal::new(0.0, sigma).expect("valid sigma");
                *p = wrap_phase(*p + n.sample(&mut self.rng));
            }
        }
        self.theta_n = PhaseSet::new(phases).expect("finite");
        Ok(())
    }
}

/// Static per-path impairments of the fabric.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathImpairments {
    /// Per-path power loss between the splitters, dB.
    pub loss_db: [f64; CORES],
    /// Residual path-length mismatch after the delay lines, meters.
    pub delta_length_m: [f64; CORES],
    /// Fiber group index.
    pub group_index: f64,
}

impl PathImpairments {
    pub fn validate(&self) -> Result<()> {
        if self.loss_db.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Config("loss_db entries must be >= 0".into()));
        }
        if self.delta_length_m.iter().any(|d| !d.is_finite()) {
            return Err(Error::Config("delta_length_m entries must be finite".into()));
        }
        if !(1.0..=2.0).contains(&self.group_index) {
            return Err(Error::Config("group_index must be in [1.0, 2.0]".into()));
        }
        Ok(())
    }
}

const BAND_MIN_M: f64 = 1.2e-6;
const BAND_MAX_M: f64 = 1.7e-6;

/// Phase offset each path acquires when operating away from the reference
/// wavelength: `phi_i = 2*pi*n_g*dL_i*(1/lambda - 1/lambda_ref)`.
pub fn wavelength_phase_offsets(
    imp: &PathImpairments,
    lambda_m: f64,
    lambda_ref_m: f64,
) -> Result<PhaseSet> {
    imp.validate()?;
    for l in [lambda_m, lambda_ref_m] {
        if !(BAND_MIN_M..=BAND_MAX_M).contains(&l) {
            return Err(Error::Contract(format!(
                "wavelength {l:e} m outside supported band [{BAND_MIN_M:e}, {BAND_MAX_M:e}]"
            )));
        }
    }
    let k = std::f64::consts::TAU * imp.group_index * (1.0 / lambda_m - 1.0 / lambda_ref_m);
    let mut phases = [0.0; CORES];
    for (p, dl) in phases.iter_mut().zip(imp.delta_length_m.iter()) {
        *p = k * dl;
    }
    PhaseSet::new(phases)
}

/// Same quantity before wrapping, for tests that check antisymmetry.
pub fn wavelength_phase_offsets_raw(
    imp: &PathImpairments,
    lambda_m: f64,
    lambda_ref_m: f64,
) -> Result<[f64; CORES]> {
    imp.validate()?;
    for l in [lambda_m, lambda_ref_m] {
        if !(BAND_MIN_M..=BAND_MAX_M).contains(&l) {
            return Err(Error::Contract("wavelength outside supported band".into()));
        }
    }
    let k = std::f64::consts::TAU * imp.group_index * (1.0 / lambda_m - 1.0 / lambda_ref_m);
    let mut phases = [0.0; CORES];
    for (p, dl) in phases.iter_mut().zip(imp.delta_length_m.iter()) {
        *p = k * dl;
    }
    Ok(phases)
}
