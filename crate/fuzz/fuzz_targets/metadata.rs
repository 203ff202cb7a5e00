#![no_main]

use surfwave::runner::parse_metadata;

libfuzzer_sys::fuzz_target!(|data: &[u8]| {
    // panics are not acceptable
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_metadata(text);
    }
});
