#![no_main]

use libfuzzer_sys::fuzz_target;
use renyi_core::sweep::SweepConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = SweepConfig::from_kv_text(text) {
        let again = SweepConfig::from_kv_text(&cfg.to_kv_text()).expect("emitted configuration must parse");
        assert_eq!(again, cfg);
    }
});
