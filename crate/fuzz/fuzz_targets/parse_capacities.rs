#![no_main]

use libfuzzer_sys::fuzz_target;
use moneyburn::parsing::parse_capacities;

fuzz_target!(|data: &[u8]| {
    let Some((&scale, rest)) = data.split_first() else { return };
    let Ok(s) = std::str::from_utf8(rest) else { return };
    if let Ok(caps) = parse_capacities(s, u64::from(scale)) {
        assert!(!caps.is_empty());
    }
});
