#![no_main]

use libfuzzer_sys::fuzz_target;
use sphere_robin::bodyfile::{parse_body, write_body};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(body) = parse_body(text) {
        // Accepted bodies must survive a write/parse cycle unchanged.
        let again = parse_body(&write_body(&body)).expect("written body parses");
        assert_eq!(again.constraints(), body.constraints());
        let _ = body.boundary_structure();
    }
});
