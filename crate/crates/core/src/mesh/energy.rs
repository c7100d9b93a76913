//! Capillary energy `|S| - sum_j cos(gamma_j) S_j`, enclosed volume and
//! their exact vertex gradients.
//!
//! The wetted region on plane `j` is the polygon bounded by the reversed
//! contact chain and closed through the support: along the edge line for a
//! wedge, through the apex for a trihedral angle, and down to the base for a
//! cylinder. The volume follows from the divergence theorem over the free
//! surface, the wetted polygons and (for cylinders) the base.

use serde::{Deserialize, Serialize};

use super::{TriMeshDrop, MIN_TRIANGLE_AREA};
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub free_area: f64,
    /// Wetted area per support plane.
    pub wetted_areas: Vec<f64>,
    pub volume: f64,
    pub energy: f64,
    /// `|V - target|` in fixed-volume mode.
    pub constraint_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGradient {
    pub breakdown: EnergyBreakdown,
    pub energy: Vec<Vec3>,
    pub volume: Vec<Vec3>,
}

/// Polygon node: a mesh vertex, a fixed point, or the base projection of a
/// mesh vertex.
#[derive(Debug, Clone, Copy)]
enum Node {
    Vertex(usize),
    Fixed(Vec3),
    Base(usize),
}

struct Polygon {
    plane: usize,
    nodes: Vec<Node>,
}

fn wetted_polygons(mesh: &TriMeshDrop) -> Result<Vec<Polygon>> {
    let apex = mesh.support.apex();
    let base = mesh.support.base();
    let mut out = Vec::new();
    for chain in mesh.contact_chains()? {
        let a = chain.vertices[0];
        let b = *chain.vertices.last().unwrap();
        let mut nodes: Vec<Node> = chain.vertices.iter().rev().map(|&v| Node::Vertex(v)).collect();
        if let Some(o) = apex {
            nodes.push(Node::Fixed(o));
        } else if base.is_some() {
            nodes.push(Node::Base(a));
            nodes.push(Node::Base(b));
        }
        out.push(Polygon { plane: chain.plane, nodes });
    }
    Ok(out)
}

fn node_point(mesh: &TriMeshDrop, node: Node) -> Vec3 {
    match node {
        Node::Vertex(v) => mesh.vertices[v],
        Node::Fixed(p) => p,
        Node::Base(v) => {
            let (g, base) = mesh.support.base().expect("base nodes only on cylinders");
            let p = mesh.vertices[v];
            p + (base - g.dot(&p)) * g
        }
    }
}

/// Signed area of `poly` seen from `-normal`, with optional gradient sink.
fn polygon_area(mesh: &TriMeshDrop, poly: &Polygon, normal: &Vec3, grad: Option<(&mut [Vec3], f64)>) -> f64 {
    let m = -normal;
    let pts: Vec<Vec3> = poly.nodes.iter().map(|&n| node_point(mesh, n)).collect();
    let k = pts.len();
    let mut acc = Vec3::zeros();
    for i in 0..k {
        acc += pts[i].cross(&pts[(i + 1) % k]);
    }
    if let Some((g, scale)) = grad {
        let proj = mesh.support.base().map(|(gen, _)| nalgebra::Matrix3::identity() - gen * gen.transpose());
        for i in 0..k {
            let d = 0.5 * m.cross(&(pts[(i + k - 1) % k] - pts[(i + 1) % k])) * scale;
            match poly.nodes[i] {
                Node::Vertex(v) => g[v] += d,
                Node::Fixed(_) => {}
                Node::Base(v) => g[v] += proj.expect("base nodes only on cylinders") * d,
            }
        }
    }
    0.5 * m.dot(&acc)
}

fn evaluate(mesh: &TriMeshDrop, want_grad: bool) -> Result<EnergyGradient> {
    let nv = mesh.vertices.len();
    let mut ge = vec![Vec3::zeros(); if want_grad { nv } else { 0 }];
    let mut gv = vec![Vec3::zeros(); if want_grad { nv } else { 0 }];
    let mut free_area = 0.0;
    let mut volume = 0.0;
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = t.map(|i| mesh.vertices[i]);
        let n = (b - a).cross(&(c - a));
        let area = 0.5 * n.norm();
        if !(area > MIN_TRIANGLE_AREA) {
            return Err(Error::MeshDegeneration(format!("triangle {ti} has area {area:e}")));
        }
        free_area += area;
        volume += a.dot(&b.cross(&c)) / 6.0;
        if want_grad {
            let nh = n / (2.0 * area);
            ge[t[0]] += 0.5 * nh.cross(&(c - b));
            ge[t[1]] += 0.5 * nh.cross(&(a - c));
            ge[t[2]] += 0.5 * nh.cross(&(b - a));
            gv[t[0]] += b.cross(&c) / 6.0;
            gv[t[1]] += c.cross(&a) / 6.0;
            gv[t[2]] += a.cross(&b) / 6.0;
        }
    }
    let planes = mesh.support.planes();
    let mut wetted = vec![0.0; planes.len()];
    let mut wetting_energy = 0.0;
    for poly in wetted_polygons(mesh)? {
        let plane = &planes[poly.plane];
        let n = plane.normal();
        let beta = plane.beta();
        let vol_coef = -plane.offset() / 3.0;
        let s = if want_grad {
            polygon_area(mesh, &poly, &n, Some((&mut ge, -beta)));
            polygon_area(mesh, &poly, &n, Some((&mut gv, vol_coef)))
        } else {
            polygon_area(mesh, &poly, &n, None)
        };
        wetted[poly.plane] += s;
        wetting_energy += beta * s;
        volume += vol_coef * s;
    }
    if let Some((_, base)) = mesh.support.base() {
        volume += -base / 3.0 * mesh.support.base_area();
    }
    let energy = free_area - wetting_energy;
    if !energy.is_finite() || !volume.is_finite() {
        return Err(Error::MeshDegeneration("non-finite energy or volume".into()));
    }
    let breakdown = EnergyBreakdown {
        free_area,
        wetted_areas: wetted,
        volume,
        energy,
        constraint_violation: mesh.target_volume().map(|t| (volume - t).abs()),
    };
    Ok(EnergyGradient { breakdown, energy: ge, volume: gv })
}

pub fn energy(mesh: &TriMeshDrop) -> Result<EnergyBreakdown> {
    Ok(evaluate(mesh, false)?.breakdown)
}

/// Energy and volume with their gradients with respect to every vertex.
pub fn energy_gradient(mesh: &TriMeshDrop) -> Result<EnergyGradient> {
    evaluate(mesh, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::TrihedralConfig;
    use crate::mesh::{Support, VertexTag, VolumeMode};
    use std::f64::consts::FRAC_PI_2;

    /// Planar triangle through the unit points of the axes, split so every
    /// contact chain has an interior vertex.
    fn simplex_mesh(gamma: f64) -> TriMeshDrop {
        let t = TrihedralConfig::orthogonal_octant([gamma; 3]).unwrap();
        let e = [Vec3::x(), Vec3::y(), Vec3::z()];
        let mid = |a: Vec3, b: Vec3| 0.5 * (a + b);
        let vertices = vec![
            e[0],
            e[1],
            e[2],
            mid(e[0], e[1]),
            mid(e[1], e[2]),
            mid(e[2], e[0]),
        ];
        // edges are indexed (x-y plane pair = z axis ...): edge k joins planes PLANE_PAIRS[k]
        // planes 0,1 meet on the z axis, 1,2 on the x axis, 2,0 on the y axis
        let tags = vec![
            VertexTag::OnEdge(1),
            VertexTag::OnEdge(2),
            VertexTag::OnEdge(0),
            VertexTag::OnPlane(2),
            VertexTag::OnPlane(0),
            VertexTag::OnPlane(1),
        ];
        let triangles = vec![[0, 3, 5], [3, 1, 4], [5, 4, 2], [3, 4, 5]];
        TriMeshDrop {
            vertices,
            tags,
            triangles,
            support: Support::Trihedral(t),
            mode: VolumeMode::Fixed(1.0 / 6.0),
            lagrange_h: 0.0,
        }
    }

    #[test]
    fn unit_simplex_values() {
        let m = simplex_mesh(FRAC_PI_2);
        m.validate().unwrap();
        let e = energy(&m).unwrap();
        assert!((e.free_area - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((e.volume - 1.0 / 6.0).abs() < 1e-15);
        for s in &e.wetted_areas {
            assert!((s - 0.5).abs() < 1e-15);
        }
        assert!((e.energy - e.free_area).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_differences() {
        let mut m = simplex_mesh(1.1);
        m.vertices[3] += Vec3::new(0.1, 0.05, 0.0);
        m.vertices[5] += Vec3::new(0.02, 0.0, 0.1);
        m.vertices[4] += Vec3::new(0.0, 0.03, -0.02);
        m.validate().unwrap();
        let g = energy_gradient(&m).unwrap();
        let h = 1e-6;
        for v in 0..m.vertices.len() {
            for dir in [Vec3::x(), Vec3::y(), Vec3::z()] {
                let d = m.support.project_direction(m.tags[v], &dir);
                if d.norm() < 1e-12 {
                    continue;
                }
                let (mut p, mut q) = (m.clone(), m.clone());
                p.vertices[v] += h * d;
                q.vertices[v] -= h * d;
                let (ep, eq) = (energy(&p).unwrap(), energy(&q).unwrap());
                let fd_e = (ep.energy - eq.energy) / (2.0 * h);
                let fd_v = (ep.volume - eq.volume) / (2.0 * h);
                assert!((fd_e - g.energy[v].dot(&d)).abs() < 1e-8, "energy at {v}");
                assert!((fd_v - g.volume[v].dot(&d)).abs() < 1e-8, "volume at {v}");
            }
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let mut m = simplex_mesh(FRAC_PI_2);
        m.vertices[3] = 0.5 * (m.vertices[0] + m.vertices[5]);
        m.vertices[3] = m.vertices[0];
        assert!(matches!(energy(&m), Err(Error::MeshDegeneration(_))));
    }
}
