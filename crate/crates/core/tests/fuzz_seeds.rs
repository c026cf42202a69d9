//! Replays the checked-in fuzz seeds through the same invariants the fuzz
//! targets assert.

use std::fs;
use std::path::PathBuf;

use sphere_robin::bodyfile::{parse_body, write_body};
use sphere_robin::discrete::GeodesicMesh;
use sphere_robin::expr::parse_real;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn body_file_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("body_file") {
        if let Ok(body) = parse_body(&text) {
            let again = parse_body(&write_body(&body)).unwrap();
            assert_eq!(again.constraints(), body.constraints(), "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn mesh_text_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("mesh_text") {
        if let Ok(mesh) = GeodesicMesh::parse(&text) {
            let again = GeodesicMesh::parse(&mesh.to_text()).unwrap();
            assert_eq!(again.triangles, mesh.triangles, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn real_expr_seeds() {
    for (name, text) in seeds("real_expr") {
        match parse_real(&text) {
            Ok(x) => assert!(x.is_finite(), "{name}"),
            Err(_) => assert_eq!(name, "infinite"),
        }
    }
}
