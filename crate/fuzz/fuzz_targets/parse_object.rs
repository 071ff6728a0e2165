#![no_main]
use forcing_lab::schema::parse_object;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_object(s);
    }
});
