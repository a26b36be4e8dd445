#![no_main]

use libfuzzer_sys::fuzz_target;
use renyi_core::report::{report_from_json, report_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = report_from_json(text) {
        let emitted = report_to_json(&report);
        let again = report_from_json(&emitted).expect("emitted JSON must parse");
        assert_eq!(report_to_json(&again), emitted);
    }
});
