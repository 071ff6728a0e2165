#![no_main]
use forcing_lab::ordinal::parse_ordinal;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(a) = parse_ordinal(s) {
            assert_eq!(parse_ordinal(&a.to_string()), Ok(a));
        }
    }
});
