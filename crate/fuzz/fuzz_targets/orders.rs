#![no_main]

use libfuzzer_sys::fuzz_target;
use renyi_core::sweep::parse_orders;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(groups) = parse_orders(text) {
        for group in groups {
            assert!(group.iter().all(|o| o.value() > 0.0));
        }
    }
});
