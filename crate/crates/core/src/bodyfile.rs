//! Text records for cap bodies: one cap per line as `pole_x pole_y pole_z
//! rho`. Fields may be real expressions (`pi/2`). `#` starts a comment.

use std::fmt::Write as _;

use crate::body::{CapBody, CapConstraint, Vec3};
use crate::error::{Error, Result};
use crate::expr::parse_real;

pub fn parse_body(text: &str) -> Result<CapBody> {
    let mut caps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse { line, msg: format!("expected 4 fields, found {}", fields.len()) });
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = parse_real(f).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        }
        let cap = CapConstraint::new(Vec3::new(v[0], v[1], v[2]), v[3])
            .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        caps.push(cap);
    }
    if caps.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no caps in body file".into() });
    }
    CapBody::new(caps)
}

/// Round-trips through [`parse_body`] exactly.
pub fn write_body(body: &CapBody) -> String {
    let mut s = String::new();
    for c in body.constraints() {
        let _ = writeln!(s, "{} {} {} {}", c.pole.x, c.pole.y, c.pole.z, c.rho);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::corpus_body;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn octant_file() {
        let text = "# octant\n1 0 0 pi/2\n0 1 0 pi/2\n\n0 0 1 1.5707963267948966  # last\n";
        let body = parse_body(text).unwrap();
        assert_eq!(body.constraints().len(), 3);
        assert_eq!(body.constraints()[0].rho, FRAC_PI_2);
        assert!((body.area().unwrap() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn roundtrip() {
        for seed in 1..=10 {
            let body = corpus_body(seed).unwrap();
            let back = parse_body(&write_body(&body)).unwrap();
            assert_eq!(back.constraints(), body.constraints());
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(parse_body("0 0 1 0.5\n0 0 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_body("\n\n0 0 x 0.5\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_body("0 0 1 2.0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_body("0 0 0 1.0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_body("# nothing\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_body("0 0 1 0.3\n0 0 -1 0.3\n"), Err(Error::EmptyInterior)));
    }
}
