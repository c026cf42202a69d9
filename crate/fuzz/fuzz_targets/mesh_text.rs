#![no_main]

use libfuzzer_sys::fuzz_target;
use sphere_robin::discrete::GeodesicMesh;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mesh) = GeodesicMesh::parse(text) {
        let again = GeodesicMesh::parse(&mesh.to_text()).expect("written mesh parses");
        assert_eq!(again.triangles, mesh.triangles);
    }
});
