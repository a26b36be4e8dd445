#![no_main]

use libfuzzer_sys::fuzz_target;
use renyi_core::sweep::{parse_dims, MAX_TOTAL_DIM};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(dims) = parse_dims(text) {
        assert!(!dims.is_empty());
        for (a, b) in dims {
            assert!(a >= 2 && b >= 2 && a * b <= MAX_TOTAL_DIM);
        }
    }
});
