#![no_main]

use libfuzzer_sys::fuzz_target;
use moneyburn::parsing::parse_u32_list;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(ks) = parse_u32_list(s) {
        assert!(ks.iter().all(|&k| (1..=1_000_000).contains(&k)));
    }
});
