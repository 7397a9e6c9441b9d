#![no_main]

use libfuzzer_sys::fuzz_target;
use otfs_outage::config::parse_scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Err(e) = parse_scenario(text) {
        // Errors must render and point inside the input.
        let _ = e.to_string();
        assert!(e.line <= text.lines().count() + 1);
    }
});
