#![no_main]

use libfuzzer_sys::fuzz_target;
use moneyburn::parsing::parse_grid_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok((lo, hi, steps)) = parse_grid_spec(s) {
        assert!(lo < hi && steps >= 1);
    }
});
