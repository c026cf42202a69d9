#![no_main]

use libfuzzer_sys::fuzz_target;
use sphere_robin_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json(text) {
        // Validation must reject or accept without panicking; execution is
        // not fuzzed since it touches the file system.
        let _ = cfg.validate();
        let _ = cfg.beta.iter().flatten().map(|r| r.value()).count();
    }
});
