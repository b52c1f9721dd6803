//! Report and trace serialization: CSV power traces and a JSON report
//! carrying metrics, calibrated parameters, the seed and the config hash.

use serde::Serialize;

use crate::ber::BerPoint;
use crate::error::{Error, Result};
use crate::field::CORES;
use crate::metrics::{MetricsReport, PowerTrace};

use super::calibrate::CalibratedParams;

pub const CSV_HEADER: &str = "time_s,p_core1,p_core2,p_core3,p_core4,target_core,control_sample_index";

/// Deterministic CSV rendering of a power trace. Fixed-precision scientific
/// notation keeps re-runs byte-identical.
pub fn trace_to_csv(trace: &PowerTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..trace.len() {
        let p = &trace.powers[i];
        let target = trace.target.get(i).copied().unwrap_or(0);
        let idx = trace.control_index.get(i).copied().unwrap_or(i as u64);
        out.push_str(&format!(
            "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{},{}\n",
            trace.time(i),
            p[0],
            p[1],
            p[2],
            p[3],
            target,
            idx
        ));
    }
    out
}

/// Parses a trace back from its CSV rendering. Used for round-trip checks
/// and as a fuzzable decoder entry point; rejects malformed rows instead of
/// panicking.
pub fn trace_from_csv(text: &str) -> Result<PowerTrace> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header: {header}")));
    }
    let mut trace = PowerTrace::default();
    let mut times: Vec<f64> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse(format!(
                "row {}: expected 7 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", lineno + 2)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("row {}: non-finite value", lineno + 2)));
            }
            Ok(v)
        };
        let t = num(fields[0])?;
        let mut p = [0.0; CORES];
        for (k, pk) in p.iter_mut().enumerate() {
            *pk = num(fields[k + 1])?;
            if *pk < 0.0 {
                return Err(Error::Parse(format!("row {}: negative power", lineno + 2)));
            }
        }
        let target: u8 = fields[5]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad target", lineno + 2)))?;
        if target as usize >= CORES {
            return Err(Error::Parse(format!("row {}: target out of range", lineno + 2)));
        }
        let idx: u64 = fields[6]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad sample index", lineno + 2)))?;
        times.push(t);
        trace.powers.push(p);
        trace.target.push(target);
        trace.control_index.push(idx);
    }
    if times.len() >= 2 {
        trace.t0 = times[0];
        trace.dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(trace.dt > 0.0) {
            return Err(Error::Parse("non-increasing time column".into()));
        }
    } else {
        trace.t0 = times.first().copied().unwrap_or(0.0);
        trace.dt = 1.0;
    }
    trace.validate()?;
    Ok(trace)
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizationReport {
    /// Extinction of the selected core against free-running behavior, dB.
    pub free_run_min_power: f64,
    pub free_run_max_power: f64,
    pub stabilized_mean_power: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoreBer {
    pub core: usize,
    pub residual_xt_db: f64,
    pub effective_xt_db: f64,
    pub penalty_db: f64,
    pub curve: Vec<BerPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McCheck {
    pub received_power_dbm: f64,
    pub analytic_ber: f64,
    pub mc_ber: f64,
    pub errors: u64,
    pub bits: u64,
    pub resolved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BerReport {
    pub back_to_back: Vec<BerPoint>,
    pub b2b_sensitivity_dbm: f64,
    pub per_core: Vec<CoreBer>,
    pub average_penalty_db: f64,
    pub mc_checks: Vec<McCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WdmReport {
    pub lambda_nm: Vec<f64>,
    pub visibility: Vec<f64>,
    pub min_inband_visibility: f64,
    pub inband_nm: (f64, f64),
    pub quadratic_coeffs: [f64; 3],
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkReport {
    pub name: String,
    pub core: usize,
    pub link_loss_db: f64,
    pub received_power_dbm: f64,
    pub analytic_ber: f64,
    pub post_transmission_xt_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkReport {
    pub links: Vec<LinkReport>,
    pub switch_command_s: f64,
    /// Command-to-90%-power transfer latency, seconds.
    pub transfer_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VisibilityReport {
    /// Two-path visibility of each modulated path against the reference.
    pub two_path: [f64; 3],
    pub two_path_mean: f64,
    pub four_path: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub config_sha256: String,
    pub calibrated: CalibratedParams,
    pub metrics: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilization: Option<StabilizationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ber: Option<BerReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wdm: Option<WdmReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<VisibilityReport>,
}

impl ScenarioReport {
    pub fn new(scenario: &str, seed: u64, config_sha256: String) -> Self {
        Self {
            scenario: scenario.into(),
            seed,
            config_sha256,
            calibrated: CalibratedParams::derive(),
            metrics: MetricsReport::default(),
            stabilization: None,
            ber: None,
            wdm: None,
            network: None,
            visibility: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(format!("report json: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> PowerTrace {
        let mut trace = PowerTrace::with_dt(1.25e-6);
        for i in 0..50usize {
            trace.powers.push([
                0.1 * (i % 7) as f64,
                0.01,
                1e-18 * i as f64,
                0.5,
            ]);
            trace.target.push((i % 4) as u8);
            trace.control_index.push(i as u64);
        }
        trace
    }

    #[test]
    fn csv_roundtrip() {
        let trace = sample_trace();
        let csv = trace_to_csv(&trace);
        let back = trace_from_csv(&csv).unwrap();
        assert_eq!(back.len(), trace.len());
        assert!((back.dt - trace.dt).abs() < 1e-15);
        for i in 0..trace.len() {
            for k in 0..4 {
                let a = trace.powers[i][k];
                let b = back.powers[i][k];
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "{a} vs {b}");
            }
            assert_eq!(trace.target[i], back.target[i]);
            assert_eq!(trace.control_index[i], back.control_index[i]);
        }
    }

    #[test]
    fn csv_rendering_is_deterministic() {
        let trace = sample_trace();
        assert_eq!(trace_to_csv(&trace), trace_to_csv(&trace));
    }

    #[test]
    fn malformed_csv_rejected() {
        assert!(trace_from_csv("").is_err());
        assert!(trace_from_csv("wrong,header\n").is_err());
        let ok_header = format!("{CSV_HEADER}\n");
        assert!(trace_from_csv(&format!("{ok_header}1,2,3\n")).is_err());
        assert!(trace_from_csv(&format!("{ok_header}0,1,1,1,nan,0,0\n")).is_err());
        assert!(trace_from_csv(&format!("{ok_header}0,-1,1,1,1,0,0\n")).is_err());
        assert!(trace_from_csv(&format!("{ok_header}0,1,1,1,1,9,0\n")).is_err());
        assert!(trace_from_csv(&ok_header).unwrap().is_empty());
    }

    #[test]
    fn report_serializes_to_json() {
        let mut r = ScenarioReport::new("stabilize", 3, "ab".repeat(32));
        r.metrics.extinction_db = Some(19.5);
        let json = r.to_json().unwrap();
        assert!(json.contains("\"scenario\": \"stabilize\""));
        assert!(json.contains("extinction_db"));
        assert!(!json.contains("\"ber\""));
    }
}
