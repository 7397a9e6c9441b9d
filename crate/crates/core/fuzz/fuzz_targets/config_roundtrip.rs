#![no_main]

use libfuzzer_sys::fuzz_target;
use otfs_outage::config::parse_scenario;

// Anything the parser accepts must survive a write/read cycle unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(scenario) = parse_scenario(text) else { return };
    let written = scenario.to_config_string();
    let reparsed = parse_scenario(&written).expect("written config must parse");
    assert_eq!(reparsed, scenario);
    assert_eq!(reparsed.to_config_string(), written);
});
