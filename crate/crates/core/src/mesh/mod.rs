//! Triangulated disk-type drop surfaces with per-vertex constraint tags.
//!
//! Triangles are oriented so their normals point out of the drop. The
//! boundary loop alternates between contact chains on the support planes
//! and vertices pinned to the edge lines.

pub mod energy;
pub mod evolve;
pub mod obj;
pub mod seed;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Line, PlaneSupport, TrihedralConfig, TrihedralKind, WedgeConfig, PLANE_PAIRS};
use crate::Vec3;

pub use energy::{energy, energy_gradient, EnergyBreakdown, EnergyGradient};
pub use evolve::{evolve, ConvergenceReport, EvolveOptions, TraceRow};
pub use obj::{from_obj, surface_to_obj, to_obj};
pub use seed::{cap_mesh, perturb, refine, refine_with, seed_mesh, SeedOptions};

/// Tolerance for constrained vertices lying on their plane or line.
pub const CONSTRAINT_TOL: f64 = 1e-12;
/// Smallest admissible triangle area.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexTag {
    Free,
    OnPlane(usize),
    OnEdge(usize),
}

impl VertexTag {
    pub fn label(&self) -> String {
        match self {
            VertexTag::Free => "Free".into(),
            VertexTag::OnPlane(k) => format!("P{k}"),
            VertexTag::OnEdge(k) => format!("E{k}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMesh(format!("unknown vertex tag `{s}`"));
        if s == "Free" {
            return Ok(VertexTag::Free);
        }
        let (head, num) = s.split_at(1.min(s.len()));
        let k: usize = num.parse().map_err(|_| bad())?;
        match head {
            "P" => Ok(VertexTag::OnPlane(k)),
            "E" => Ok(VertexTag::OnEdge(k)),
            _ => Err(bad()),
        }
    }
}

/// Support edge line with the two planes meeting there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEdge {
    pub line: Line,
    pub planes: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    Wedge(WedgeConfig),
    Trihedral(TrihedralConfig),
}

impl Support {
    pub fn planes(&self) -> Vec<PlaneSupport> {
        match self {
            Support::Wedge(w) => vec![w.plane1, w.plane2],
            Support::Trihedral(t) => t.planes.to_vec(),
        }
    }

    pub fn edges(&self) -> Vec<SupportEdge> {
        match self {
            Support::Wedge(w) => vec![SupportEdge { line: w.edge(), planes: (0, 1) }],
            Support::Trihedral(t) => PLANE_PAIRS
                .iter()
                .map(|&(j, k)| SupportEdge {
                    line: t.edge(j, k).expect("validated configuration has edges"),
                    planes: (j, k),
                })
                .collect(),
        }
    }

    /// Number of vertices a drop covering the edge(s) has.
    pub fn vertex_count(&self) -> usize {
        match self {
            Support::Wedge(_) => 2,
            Support::Trihedral(_) => 3,
        }
    }

    /// Base plane `generator . x = base` for cylinder supports.
    pub fn base(&self) -> Option<(Vec3, f64)> {
        match self {
            Support::Trihedral(TrihedralConfig { kind: TrihedralKind::Cylinder { generator, base }, .. }) => {
                Some((*generator, *base))
            }
            _ => None,
        }
    }

    pub fn apex(&self) -> Option<Vec3> {
        match self {
            Support::Trihedral(TrihedralConfig { kind: TrihedralKind::Apex { apex }, .. }) => Some(*apex),
            _ => None,
        }
    }

    /// Area of the cross-section of a cylinder support on its base plane.
    pub fn base_area(&self) -> f64 {
        match self.base() {
            None => 0.0,
            Some((g, base)) => {
                let c: Vec<Vec3> = self
                    .edges()
                    .iter()
                    .map(|e| e.line.point + (base - g.dot(&e.line.point)) * g)
                    .collect();
                0.5 * (c[1] - c[0]).cross(&(c[2] - c[0])).norm()
            }
        }
    }

    /// Projection of a displacement onto the motions allowed by `tag`.
    pub fn project_direction(&self, tag: VertexTag, v: &Vec3) -> Vec3 {
        match tag {
            VertexTag::Free => *v,
            VertexTag::OnPlane(j) => {
                let n = self.planes()[j].normal();
                v - v.dot(&n) * n
            }
            VertexTag::OnEdge(e) => {
                let d = self.edges()[e].line.dir;
                v.dot(&d) * d
            }
        }
    }

    /// Closest point satisfying the constraint of `tag`.
    pub fn snap(&self, tag: VertexTag, p: &Vec3) -> Vec3 {
        match tag {
            VertexTag::Free => *p,
            VertexTag::OnPlane(j) => self.planes()[j].project(p),
            VertexTag::OnEdge(e) => self.edges()[e].line.project(p),
        }
    }

    /// Scale of the support used for relative tolerances.
    pub fn constraint_residual(&self, tag: VertexTag, p: &Vec3) -> f64 {
        (self.snap(tag, p) - p).norm()
    }
}

/// How the volume constraint is handled during evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VolumeMode {
    /// Volume held at the target; the multiplier is estimated.
    Fixed(f64),
    /// Multiplier `dE/dV` prescribed; volume is free.
    Pressure(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMeshDrop {
    pub vertices: Vec<Vec3>,
    pub tags: Vec<VertexTag>,
    pub triangles: Vec<[usize; 3]>,
    pub support: Support,
    pub mode: VolumeMode,
    /// Current estimate of `dE/dV`, equal to `2H` at equilibrium.
    pub lagrange_h: f64,
}

/// A run of boundary vertices on one plane, from edge vertex to edge vertex
/// in the boundary orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactChain {
    pub plane: usize,
    pub vertices: Vec<usize>,
}

impl TriMeshDrop {
    pub fn target_volume(&self) -> Option<f64> {
        match self.mode {
            VolumeMode::Fixed(v) => Some(v),
            VolumeMode::Pressure(_) => None,
        }
    }

    pub fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let [a, b, c] = t.map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unnormalised triangle normal (twice the area vector).
    pub fn triangle_normal(&self, t: &[usize; 3]) -> Vec3 {
        let [a, b, c] = t.map(|i| self.vertices[i]);
        (b - a).cross(&(c - a))
    }

    /// Oriented boundary edges `(a, b)` in triangle order.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut out = Vec::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if count[&(a.min(b), a.max(b))] == 1 {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// The boundary as one closed loop, starting at its first edge vertex.
    pub fn boundary_loop(&self) -> Result<Vec<usize>> {
        let edges = self.boundary_edges();
        if edges.is_empty() {
            return Err(Error::InvalidMesh("mesh has no boundary".into()));
        }
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for &(a, b) in &edges {
            if next.insert(a, b).is_some() {
                return Err(Error::InvalidMesh(format!("boundary is not a simple loop at vertex {a}")));
            }
        }
        let start = edges
            .iter()
            .map(|e| e.0)
            .filter(|&v| matches!(self.tags[v], VertexTag::OnEdge(_)))
            .min()
            .unwrap_or(edges[0].0);
        let mut lp = vec![start];
        let mut cur = next[&start];
        while cur != start {
            lp.push(cur);
            if lp.len() > edges.len() {
                return Err(Error::InvalidMesh("boundary loop does not close".into()));
            }
            cur = *next
                .get(&cur)
                .ok_or_else(|| Error::InvalidMesh("boundary loop is open".into()))?;
        }
        if lp.len() != edges.len() {
            return Err(Error::InvalidMesh("boundary has more than one component".into()));
        }
        Ok(lp)
    }

    /// Splits the boundary loop into contact chains between edge vertices.
    pub fn contact_chains(&self) -> Result<Vec<ContactChain>> {
        let lp = self.boundary_loop()?;
        let corners: Vec<usize> =
            (0..lp.len()).filter(|&k| matches!(self.tags[lp[k]], VertexTag::OnEdge(_))).collect();
        if corners.is_empty() {
            return Err(Error::InvalidMesh("boundary has no edge vertices".into()));
        }
        let edges = self.support.edges();
        let mut chains = Vec::new();
        for (c, &k0) in corners.iter().enumerate() {
            let k1 = corners[(c + 1) % corners.len()];
            let mut verts = vec![lp[k0]];
            let mut k = (k0 + 1) % lp.len();
            while k != k1 {
                verts.push(lp[k]);
                k = (k + 1) % lp.len();
            }
            verts.push(lp[k1]);
            if verts.len() < 3 {
                return Err(Error::InvalidMesh("contact chain without interior vertices".into()));
            }
            let plane = match self.tags[verts[1]] {
                VertexTag::OnPlane(j) => j,
                other => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary vertex {} tagged {} inside a contact chain",
                        verts[1],
                        other.label()
                    )))
                }
            };
            for &v in &verts[1..verts.len() - 1] {
                if self.tags[v] != VertexTag::OnPlane(plane) {
                    return Err(Error::InvalidMesh(format!("contact chain mixes planes at vertex {v}")));
                }
            }
            for &end in [verts[0], *verts.last().unwrap()].iter() {
                if let VertexTag::OnEdge(e) = self.tags[end] {
                    let (a, b) = edges[e].planes;
                    if a != plane && b != plane {
                        return Err(Error::InvalidMesh(format!("edge vertex {end} is not on plane {plane}")));
                    }
                }
            }
            chains.push(ContactChain { plane, vertices: verts });
        }
        Ok(chains)
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let used: std::collections::BTreeSet<usize> = self.triangles.iter().flatten().copied().collect();
        used.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    /// Vertex-to-neighbour adjacency (sorted, deduplicated).
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (ti, t) in self.triangles.iter().enumerate() {
            for &v in t {
                out[v].push(ti);
            }
        }
        out
    }

    /// Area-weighted vertex normals (unit length).
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut n = vec![Vec3::zeros(); self.vertices.len()];
        for t in &self.triangles {
            let tn = self.triangle_normal(t);
            for &v in t {
                n[v] += tn;
            }
        }
        n.iter().map(|v| v.normalize()).collect()
    }

    /// One third of the incident triangle areas per vertex.
    pub fn dual_areas(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.vertices.len()];
        for t in &self.triangles {
            let at = self.triangle_area(t) / 3.0;
            for &v in t {
                a[v] += at;
            }
        }
        a
    }

    /// Cotangent weights `(cot a + cot b) / 2` per undirected edge `(i, j)`
    /// with `i < j`; boundary edges carry a single cotangent.
    pub fn cotan_weights(&self) -> BTreeMap<(usize, usize), f64> {
        let mut w: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (i, j, o) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                let (u, v) = (self.vertices[i] - self.vertices[o], self.vertices[j] - self.vertices[o]);
                let cot = u.dot(&v) / u.cross(&v).norm();
                *w.entry((i.min(j), i.max(j))).or_default() += 0.5 * cot;
            }
        }
        w
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for (x, y) in self.boundary_edges() {
            b[x] = true;
            b[y] = true;
        }
        b
    }

    /// Largest distance between vertices along the coordinate axes.
    pub fn diameter(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm()
    }

    /// Moves every constrained vertex exactly onto its plane or line.
    pub fn snap_constraints(&mut self) {
        for (v, &t) in self.vertices.iter_mut().zip(self.tags.iter()) {
            *v = self.support.snap(t, v);
        }
    }

    /// Checks topology, tagging and element quality.
    pub fn validate(&self) -> Result<()> {
        if self.tags.len() != self.vertices.len() {
            return Err(Error::InvalidMesh("tag count differs from vertex count".into()));
        }
        let nv = self.vertices.len();
        for t in &self.triangles {
            if t.iter().any(|&i| i >= nv) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidMesh(format!("bad triangle {t:?}")));
            }
        }
        for (i, t) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(t);
            if !(a > MIN_TRIANGLE_AREA) {
                return Err(Error::MeshDegeneration(format!("triangle {i} has area {a:e}")));
            }
        }
        if self.euler_characteristic() != 1 {
            return Err(Error::InvalidMesh(format!(
                "Euler characteristic {} (disk type requires 1)",
                self.euler_characteristic()
            )));
        }
        let boundary = self.is_boundary();
        let planes = self.support.planes().len();
        let edges = self.support.edges().len();
        for (i, (&tag, &on_b)) in self.tags.iter().zip(boundary.iter()).enumerate() {
            match tag {
                VertexTag::Free if on_b => {
                    return Err(Error::InvalidMesh(format!("boundary vertex {i} is untagged")));
                }
                VertexTag::OnPlane(j) if j >= planes => {
                    return Err(Error::InvalidMesh(format!("vertex {i} refers to plane {j}")));
                }
                VertexTag::OnEdge(e) if e >= edges => {
                    return Err(Error::InvalidMesh(format!("vertex {i} refers to edge {e}")));
                }
                _ => {}
            }
            let scale = self.vertices[i].norm().max(1.0);
            let r = self.support.constraint_residual(tag, &self.vertices[i]);
            if r > CONSTRAINT_TOL * scale {
                return Err(Error::InvalidMesh(format!("vertex {i} violates its constraint by {r:e}")));
            }
        }
        self.contact_chains()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_labels_round_trip() {
        for t in [VertexTag::Free, VertexTag::OnPlane(2), VertexTag::OnEdge(11)] {
            assert_eq!(VertexTag::parse(&t.label()).unwrap(), t);
        }
        assert!(VertexTag::parse("Q1").is_err());
        assert!(VertexTag::parse("P").is_err());
        assert!(VertexTag::parse("").is_err());
    }
}
