//! Fuzzes the CSV trace decoder: arbitrary bytes must parse or error, never
//! panic, and accepted traces must survive a render/reparse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mcf_switch::scenario::{trace_from_csv, trace_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(trace) = trace_from_csv(text) {
        let rendered = trace_to_csv(&trace);
        let back = trace_from_csv(&rendered).expect("rendered trace must reparse");
        assert_eq!(trace.len(), back.len());
    }
});
