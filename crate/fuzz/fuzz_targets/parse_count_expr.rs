#![no_main]

use libfuzzer_sys::fuzz_target;
use moneyburn::parsing::parse_count_expr;

// First byte selects the market scale; the rest is the expression.
fuzz_target!(|data: &[u8]| {
    let Some((&scale, rest)) = data.split_first() else { return };
    let Ok(s) = std::str::from_utf8(rest) else { return };
    if let Ok(n) = parse_count_expr(s, u64::from(scale)) {
        assert!(n <= u64::from(u32::MAX));
    }
});
