#![no_main]
use lab_cli::corpus::parse_corpus;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_corpus(s);
    }
});
