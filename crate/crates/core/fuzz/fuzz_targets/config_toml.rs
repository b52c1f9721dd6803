//! Fuzzes the scenario configuration parser: arbitrary bytes must either
//! parse into a valid config or return an error, never panic. Accepted
//! configs must survive a serialize/reparse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mcf_switch::scenario::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ScenarioConfig::from_toml_str(text) {
        // a config that validated must round-trip
        let rendered = cfg.to_toml_string().expect("valid config must serialize");
        let back = ScenarioConfig::from_toml_str(&rendered).expect("round trip must parse");
        assert_eq!(cfg, back);
        let _ = cfg.hash().expect("valid config must hash");
    }
});
