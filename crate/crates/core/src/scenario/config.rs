//! Declarative scenario configuration: flat TOML sections per module, all
//! defaults overridable, hashed for report provenance.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::calibrate;
use crate::ber::TransceiverConfig;
use crate::controller::ActuatorConfig;
use crate::drift::PathImpairments;
use crate::error::{Error, Result};
use crate::field::{make_dft_splitter, make_hadamard_splitter, TransferMatrix, CORES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitterKind {
    Dft,
    Hadamard,
}

impl SplitterKind {
    pub fn matrix(&self) -> TransferMatrix {
        match self {
            SplitterKind::Dft => make_dft_splitter(),
            SplitterKind::Hadamard => make_hadamard_splitter(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    /// Wiener diffusion per path, rad^2/s.
    pub diffusion_rad2_per_s: [f64; CORES],
    /// Start each path at an independent random phase instead of 0.
    pub randomize_start: bool,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            diffusion_rad2_per_s: [calibrate::DRIFT_DIFFUSION_RAD2_PER_S; CORES],
            randomize_start: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Perturb-and-observe step, radians.
    pub po_step_rad: f64,
    /// Control samples spent on each path before moving round-robin.
    pub po_dwell_samples: u32,
    /// Free-running segment before stabilization engages, seconds.
    pub free_run_s: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            po_step_rad: 0.05,
            po_dwell_samples: 2,
            free_run_s: 0.01,
        }
    }
}

/// Photodiode + digital low-pass monitor chain. The controller sees optical
/// power only through this model, block-averaged per control sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorModel {
    pub bandwidth_hz: f64,
    pub control_rate: f64,
    pub responsivity: f64,
    /// Optional monitor tap loss, dB (0 = non-invasive tap).
    pub tap_loss_db: f64,
}

impl Default for MonitorModel {
    fn default() -> Self {
        Self {
            bandwidth_hz: 150e6,
            control_rate: 0.8e6,
            responsivity: 1.0,
            tap_loss_db: 0.0,
        }
    }
}

impl MonitorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.control_rate > 0.0) {
            return Err(Error::Config("monitor control_rate must be > 0".into()));
        }
        if self.bandwidth_hz < self.control_rate {
            return Err(Error::Config(
                "monitor bandwidth must be >= control rate".into(),
            ));
        }
        if !(self.responsivity > 0.0) || !(self.tap_loss_db >= 0.0) {
            return Err(Error::Config("invalid monitor parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLink {
    pub name: String,
    pub length_m: f64,
    #[serde(default = "default_fiber_loss")]
    pub fiber_loss_db_per_km: f64,
    #[serde(default = "default_connector_loss")]
    pub connector_loss_db: f64,
    #[serde(default)]
    pub loopback: bool,
    /// Output core this link is spliced to.
    pub core: usize,
}

fn default_fiber_loss() -> f64 {
    0.22
}

fn default_connector_loss() -> f64 {
    0.5
}

impl NetworkLink {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_m >= 0.0)
            || !(self.fiber_loss_db_per_km >= 0.0)
            || !(self.connector_loss_db >= 0.0)
        {
            return Err(Error::Config(format!(
                "link {}: lengths and losses must be >= 0",
                self.name
            )));
        }
        if self.core >= CORES {
            return Err(Error::Config(format!("link {}: core must be 0..4", self.name)));
        }
        Ok(())
    }

    /// Total propagation loss of the link, dB. Loopback traverses the fiber
    /// twice.
    pub fn total_loss_db(&self) -> f64 {
        let passes = if self.loopback { 2.0 } else { 1.0 };
        self.fiber_loss_db_per_km * self.length_m / 1000.0 * passes + self.connector_loss_db
    }
}

/// One timed target-core command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub t_s: f64,
    pub target: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WdmConfig {
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub lambda_ref_nm: f64,
    pub points: usize,
}

impl Default for WdmConfig {
    fn default() -> Self {
        Self {
            lambda_min_nm: 1527.0,
            lambda_max_nm: 1569.0,
            lambda_ref_nm: 1550.0,
            points: 43,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Simulated duration, seconds.
    pub duration_s: f64,
    /// Fine optical timesteps per control sample (>= 10).
    pub oversample: u32,
    pub splitter: SplitterKind,
    /// In-band coherent coupling factor applied to residual crosstalk when
    /// converting it into a receiver penalty, dB (calibrated).
    pub coupling_db: f64,
    pub launch_power_dbm: f64,
    /// Round-robin switching period, control samples.
    pub switch_period_samples: u32,
    pub impairments: PathImpairments,
    pub drift: DriftConfig,
    pub controller: ControllerConfig,
    pub actuator: ActuatorConfig,
    pub transceiver: TransceiverConfig,
    pub monitor: MonitorModel,
    pub wdm: WdmConfig,
    pub schedule: Vec<ScheduleEntry>,
    pub links: Vec<NetworkLink>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            duration_s: 0.05,
            oversample: 10,
            splitter: SplitterKind::Dft,
            impairments: PathImpairments {
                loss_db: calibrate::calibrated_losses_db(),
                delta_length_m: calibrate::calibrated_delta_lengths_m(),
                group_index: 1.468,
            },
            drift: DriftConfig::default(),
            controller: ControllerConfig::default(),
            actuator: ActuatorConfig::default(),
            transceiver: TransceiverConfig::default(),
            monitor: MonitorModel::default(),
            wdm: WdmConfig::default(),
            coupling_db: calibrate::calibrated_coupling_db(),
            launch_power_dbm: 0.0,
            switch_period_samples: 2,
            schedule: Vec::new(),
            links: vec![
                NetworkLink {
                    name: "internal".into(),
                    length_m: 170.0,
                    fiber_loss_db_per_km: default_fiber_loss(),
                    connector_loss_db: default_connector_loss(),
                    loopback: true,
                    core: 0,
                },
                NetworkLink {
                    name: "external".into(),
                    length_m: 1305.0,
                    fiber_loss_db_per_km: default_fiber_loss(),
                    connector_loss_db: default_connector_loss(),
                    loopback: true,
                    core: 1,
                },
            ],
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(s).map_err(|e| Error::Parse(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(format!("config serialize: {e}")))
    }

    /// SHA-256 of the resolved configuration, hex. Ties every report to the
    /// exact parameter set that produced it.
    pub fn hash(&self) -> Result<String> {
        let canonical = self.to_toml_string()?;
        let digest = Sha256::digest(canonical.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(Error::Config("duration_s must be > 0".into()));
        }
        // fine timestep must be <= 1/(10 * control_rate)
        if self.oversample < 10 {
            return Err(Error::Config("oversample must be >= 10".into()));
        }
        self.impairments.validate()?;
        if self
            .drift
            .diffusion_rad2_per_s
            .iter()
            .any(|d| !d.is_finite() || *d < 0.0)
        {
            return Err(Error::Config("drift diffusion must be >= 0".into()));
        }
        if !(self.controller.po_step_rad > 0.0) || self.controller.po_dwell_samples == 0 {
            return Err(Error::Config("po_step_rad > 0 and po_dwell_samples >= 1".into()));
        }
        if !(self.controller.free_run_s >= 0.0) {
            return Err(Error::Config("free_run_s must be >= 0".into()));
        }
        self.actuator.validate()?;
        self.transceiver.validate()?;
        self.monitor.validate()?;
        if (self.actuator.sample_rate - self.monitor.control_rate).abs()
            > 1e-9 * self.actuator.sample_rate
        {
            return Err(Error::Config(
                "actuator sample_rate and monitor control_rate must agree".into(),
            ));
        }
        if !(self.wdm.lambda_min_nm < self.wdm.lambda_max_nm) || self.wdm.points < 3 {
            return Err(Error::Config("invalid wdm grid".into()));
        }
        for bound in [self.wdm.lambda_min_nm, self.wdm.lambda_max_nm, self.wdm.lambda_ref_nm] {
            if !(1527.0..=1569.0).contains(&bound) {
                return Err(Error::Config(
                    "wdm wavelengths must lie within 1527-1569 nm".into(),
                ));
            }
        }
        if !(self.coupling_db <= 0.0) {
            return Err(Error::Config("coupling_db must be <= 0".into()));
        }
        if self.switch_period_samples < 2 {
            return Err(Error::Config("switch_period_samples must be >= 2".into()));
        }
        for entry in &self.schedule {
            if !(0.0..=self.duration_s).contains(&entry.t_s) {
                return Err(Error::Config(format!(
                    "schedule time {} outside duration {}",
                    entry.t_s, self.duration_s
                )));
            }
            if entry.target >= CORES {
                return Err(Error::Config("schedule target must be 0..4".into()));
            }
        }
        for link in &self.links {
            link.validate()?;
        }
        Ok(())
    }

    /// Fine optical timestep, seconds.
    pub fn fine_dt(&self) -> f64 {
        self.actuator.control_period() / self.oversample as f64
    }

    pub fn control_samples(&self) -> u64 {
        (self.duration_s * self.actuator.sample_rate).round() as u64
    }
}
