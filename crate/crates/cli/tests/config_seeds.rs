use std::fs;
use std::path::PathBuf;

use sphere_robin_cli::RunConfig;

#[test]
fn run_config_seeds() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/run_config");
    let mut parsed = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        match RunConfig::from_json(&text) {
            Ok(cfg) => {
                let _ = cfg.validate();
                for r in cfg.beta.iter().flatten() {
                    r.value().unwrap();
                }
                parsed += 1;
            }
            Err(_) => assert_eq!(name, "unknown_field"),
        }
    }
    assert_eq!(parsed, 3);
}
