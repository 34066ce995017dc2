#![no_main]

use libfuzzer_sys::fuzz_target;
use moneyburn::parsing::parse_f64_list;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(xs) = parse_f64_list(s) {
        assert!(xs.iter().all(|x| x.is_finite()));
    }
});
