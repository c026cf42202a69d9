#![no_main]

use libfuzzer_sys::fuzz_target;
use sphere_robin::expr::parse_real;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(x) = parse_real(text) {
            assert!(x.is_finite());
        }
    }
});
