//! Wavefront OBJ export and import with vertex constraint tags.
//!
//! Tags travel in comment records `# tag <vertex-index> <Free|P<k>|E<k>>`
//! with the same 1-based index as the `f` records. The support geometry is
//! not stored; importers supply it.

use std::fmt::Write as _;

use super::{Support, TriMeshDrop, VertexTag, VolumeMode};
use crate::error::{Error, Result};
use crate::Vec3;

/// Serialises a tagged drop mesh.
pub fn to_obj(mesh: &TriMeshDrop) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# capvertex drop mesh");
    let _ = writeln!(s, "# vertices {} triangles {}", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    for (i, t) in mesh.tags.iter().enumerate() {
        let _ = writeln!(s, "# tag {} {}", i + 1, t.label());
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

/// Serialises an untagged triangle surface (analytic samples, height fields).
pub fn surface_to_obj(vertices: &[Vec3], triangles: &[[usize; 3]]) -> String {
    let mut s = String::new();
    for v in vertices {
        let _ = writeln!(s, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    for t in triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidMesh(format!("OBJ line {line}: {msg}"))
}

/// Parses an OBJ written by [`to_obj`] onto the given support. Untagged
/// vertices default to `Free`; the result is validated.
pub fn from_obj(text: &str, support: Support, mode: VolumeMode) -> Result<TriMeshDrop> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut tagged: Vec<(usize, usize, VertexTag)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .map(|x| x.parse::<f64>().map_err(|e| parse_err(line, e)))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(parse_err(line, "vertex needs three coordinates"));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|x| {
                        let head = x.split('/').next().unwrap_or("");
                        head.parse::<usize>().map_err(|e| parse_err(line, e))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 || idx.contains(&0) {
                    return Err(parse_err(line, "faces must be triangles with 1-based indices"));
                }
                triangles.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            Some("#")
                if it.next() == Some("tag") => {
                    let i: usize = it
                        .next()
                        .ok_or_else(|| parse_err(line, "tag record without index"))?
                        .parse()
                        .map_err(|e| parse_err(line, e))?;
                    let t = VertexTag::parse(it.next().ok_or_else(|| parse_err(line, "tag record without tag"))?)?;
                    if i == 0 {
                        return Err(parse_err(line, "tag indices are 1-based"));
                    }
                    tagged.push((line, i - 1, t));
                }
            _ => {}
        }
    }
    let mut tags = vec![VertexTag::Free; vertices.len()];
    for (line, i, t) in tagged {
        *tags.get_mut(i).ok_or_else(|| parse_err(line, format!("tag for missing vertex {}", i + 1)))? = t;
    }
    let mesh = TriMeshDrop { vertices, tags, triangles, support, mode, lagrange_h: 0.0 };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::WedgeConfig;
    use crate::mesh::{seed_mesh, SeedOptions};

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]
        #[test]
        fn round_trip_is_exact(alpha in 0.5f64..1.2, g1 in 1.75f64..2.3, g2 in 1.75f64..2.3, seed in 0u64..1000) {
            let Ok(w) = WedgeConfig::canonical(alpha, g1, g2) else { return Ok(()) };
            let s = Support::Wedge(w);
            let Ok(m) = seed_mesh(&s, 1.0, 1, &SeedOptions { perturbation: 0.01, seed, ..Default::default() }) else {
                return Ok(());
            };
            let back = from_obj(&to_obj(&m), s, m.mode).unwrap();
            proptest::prop_assert_eq!(&back.vertices, &m.vertices);
            proptest::prop_assert_eq!(&back.tags, &m.tags);
            proptest::prop_assert_eq!(&back.triangles, &m.triangles);
        }
    }

    #[test]
    fn malformed_records_are_rejected() {
        let w = WedgeConfig::canonical(0.8, 2.0, 1.9).unwrap();
        let s = Support::Wedge(w);
        assert!(from_obj("v 1 2\n", s, VolumeMode::Fixed(1.0)).is_err());
        assert!(from_obj("v 0 0 0\n# tag 4 P0\n", s, VolumeMode::Fixed(1.0)).is_err());
        assert!(from_obj("v 0 0 0\n# tag 1 Q0\n", s, VolumeMode::Fixed(1.0)).is_err());
    }
}
