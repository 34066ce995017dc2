#![no_main]

use libfuzzer_sys::fuzz_target;
use moneyburn::distributions::Marginal;

// The distribution grammar must reject or accept any byte string
// without panicking; accepted specs must print and reparse to the
// same value.
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = s.parse::<Marginal>() {
        let reparsed: Marginal = m.to_string().parse().expect("display must reparse");
        assert_eq!(reparsed, m);
    }
});
