//! Scenario layer: configuration, monitor model, simulation drivers and
//! report/trace serialization.

pub mod calibrate;
pub mod config;
pub mod monitor;
pub mod report;
pub mod runner;

pub use config::{MonitorModel, NetworkLink, ScenarioConfig, ScheduleEntry, SplitterKind};
pub use report::{ScenarioReport, trace_from_csv, trace_to_csv};
pub use runner::{
    four_path_visibility, run_ber_sweep, run_network, run_stabilization, run_switching,
    run_visibility, run_wdm_sweep, two_path_visibility,
};
