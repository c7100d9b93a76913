//! Seed meshes built from the analytic solutions, midpoint refinement and
//! smooth random perturbations.
//!
//! A coarse disk is laid out as a center vertex, an inner ring and a
//! boundary ring whose corners sit at the edge crossings. Refinement splits
//! every triangle in four; seeded meshes project the new midpoints back
//! onto the analytic surface and its contact curves. Optional corner
//! grading adds red-green refinement levels around the vertices on edges,
//! where the contact lines meet and the discretisation error concentrates.

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::evolve::restore_volume;
use super::{energy, Support, TriMeshDrop, VertexTag, VolumeMode};
use crate::analytic::{cylinder_cap, trihedral_cap, wedge_cap, CylinderSolution, TrihedralSolution};
use crate::error::{Error, Result};
use crate::geom::{plane_intersection, PlaneSupport, TrihedralKind};
use crate::Vec3;

/// Surface the seed is sampled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceModel {
    /// `sigma = -1` when the drop lies inside the ball.
    Sphere { center: Vec3, radius: f64, sigma: f64 },
    /// Unit `normal` points out of the drop.
    Plane { normal: Vec3, offset: f64 },
}

impl SurfaceModel {
    pub fn project_interior(&self, p: &Vec3) -> Vec3 {
        match *self {
            SurfaceModel::Sphere { center, radius, .. } => center + radius * (p - center).normalize(),
            SurfaceModel::Plane { normal, offset } => p - (normal.dot(p) - offset) * normal,
        }
    }

    /// Closest point of the contact curve on `wall`.
    pub fn project_contact(&self, p: &Vec3, wall: &PlaneSupport) -> Vec3 {
        match *self {
            SurfaceModel::Sphere { center, radius, .. } => {
                let d = wall.signed_distance(&center);
                let foot = wall.project(&center);
                let rho = (radius * radius - d * d).max(0.0).sqrt();
                let q = wall.project(p) - foot;
                foot + rho * q.normalize()
            }
            SurfaceModel::Plane { normal, offset } => {
                let model = PlaneSupport::new(normal, offset, std::f64::consts::FRAC_PI_2)
                    .expect("unit normal");
                plane_intersection(&model, wall).map(|l| l.project(p)).unwrap_or(*p)
            }
        }
    }

    /// Normal pointing out of the drop at a surface point.
    pub fn outward_normal(&self, p: &Vec3) -> Vec3 {
        match *self {
            SurfaceModel::Sphere { center, sigma, .. } => -sigma * (p - center).normalize(),
            SurfaceModel::Plane { normal, .. } => normal,
        }
    }

    fn scaled(&self, about: &Vec3, s: f64) -> Self {
        match *self {
            SurfaceModel::Sphere { center, radius, sigma } => {
                SurfaceModel::Sphere { center: about + s * (center - about), radius: s * radius, sigma }
            }
            SurfaceModel::Plane { normal, offset } => {
                SurfaceModel::Plane { normal, offset: normal.dot(about) + s * (offset - normal.dot(about)) }
            }
        }
    }

    fn translated(&self, t: &Vec3) -> Self {
        match *self {
            SurfaceModel::Sphere { center, radius, sigma } => SurfaceModel::Sphere { center: center + t, radius, sigma },
            SurfaceModel::Plane { normal, offset } => SurfaceModel::Plane { normal, offset: offset + normal.dot(t) },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedOptions {
    /// Normal perturbation amplitude relative to the drop size.
    pub perturbation: f64,
    pub seed: u64,
    /// Extra local refinement passes around edge vertices.
    pub corner_levels: usize,
}

impl Default for SeedOptions {
    fn default() -> Self {
        Self { perturbation: 0.0, seed: 0, corner_levels: 0 }
    }
}

/// Analytic surface and its edge vertices in boundary order.
struct Blueprint {
    model: SurfaceModel,
    /// Edge-crossing points with the index of their support edge.
    corners: Vec<(Vec3, usize)>,
    /// Plane carrying the contact arc from corner `i` to corner `i + 1`.
    arc_planes: Vec<usize>,
}

fn support_points_inside(support: &Support, p: &Vec3, tol: f64) -> bool {
    let inside_planes = support.planes().iter().all(|pl| pl.signed_distance(p) >= -tol);
    let above_base = support.base().is_none_or(|(g, b)| g.dot(p) >= b - tol);
    inside_planes && above_base
}

/// Picks the analytic solution used as a seed: the one for curvature `h`
/// when given, else a convex cap where one exists.
fn analytic_model(support: &Support, h: Option<f64>) -> Result<(SurfaceModel, Vec<Vec3>)> {
    let signs = match h {
        Some(h) => vec![h],
        None => vec![-1.0, 1.0],
    };
    let sphere = |cap: &crate::analytic::SphericalCap| SurfaceModel::Sphere {
        center: cap.center,
        radius: cap.radius,
        sigma: cap.sigma(),
    };
    let plane_corners = |normal: Vec3, offset: f64| -> Vec<Vec3> {
        support
            .edges()
            .iter()
            .map(|e| e.line.point + (offset - normal.dot(&e.line.point)) / normal.dot(&e.line.dir) * e.line.dir)
            .collect()
    };
    match support {
        Support::Wedge(w) => {
            let mut last = Error::no_solution("no wedge cap");
            for &h in &signs {
                match wedge_cap(w, h) {
                    Ok(cap) if cap.touching => {
                        last = Error::no_solution("touching caps have no edge segment to seed from");
                    }
                    Ok(cap) => return Ok((sphere(&cap), cap.vertices)),
                    Err(e) => last = e,
                }
            }
            Err(last)
        }
        Support::Trihedral(t) => match t.kind {
            TrihedralKind::Apex { .. } => {
                if h.is_none() || h == Some(0.0) {
                    if let Ok(TrihedralSolution::Planar(p)) = trihedral_cap(t, 0.0) {
                        return Ok((SurfaceModel::Plane { normal: p.normal, offset: p.offset }, plane_corners(p.normal, p.offset)));
                    }
                }
                for &h in signs.iter().filter(|h| **h != 0.0) {
                    if let Ok(TrihedralSolution::Cap(cap)) = trihedral_cap(t, h) {
                        if !cap.degenerate && cap.covers_apex == Some(true) && cap.vertices.len() == 3 {
                            return Ok((sphere(&cap), cap.vertices));
                        }
                    }
                }
                Err(Error::no_solution("no cap covering the apex for these angles"))
            }
            TrihedralKind::Cylinder { .. } => match cylinder_cap(t)? {
                CylinderSolution::Cap(cap) => Ok((sphere(&cap), cap.vertices)),
                CylinderSolution::Planar(p) => {
                    Ok((SurfaceModel::Plane { normal: p.normal, offset: p.offset }, plane_corners(p.normal, p.offset)))
                }
            },
        },
    }
}

fn blueprint(support: &Support, h: Option<f64>) -> Result<Blueprint> {
    let (mut model, mut verts) = analytic_model(support, h)?;
    if let Some((g, base)) = support.base() {
        // the cylinder solution is defined up to a shift along the generator;
        // lift it clear of the base
        let span = (verts[0] - verts[1]).norm().max((verts[1] - verts[2]).norm());
        let lowest = match model {
            SurfaceModel::Sphere { center, radius, sigma } => g.dot(&(center - sigma * radius * g)),
            SurfaceModel::Plane { .. } => f64::INFINITY,
        };
        let lowest = verts.iter().map(|v| g.dot(v)).fold(lowest, f64::min);
        let shift = g * (base + span - lowest);
        model = model.translated(&shift);
        verts.iter_mut().for_each(|v| *v += shift);
    }
    let edges = support.edges();
    let mut corners: Vec<(Vec3, usize)> = match support {
        // both vertices lie on the single edge
        Support::Wedge(_) => verts.iter().map(|v| (*v, 0)).collect(),
        Support::Trihedral(_) => verts.iter().enumerate().map(|(e, v)| (*v, e)).collect(),
    };
    // cyclic order around the pole; triangle orientation is fixed later
    let pole = pole_point(support, &model, &corners)?;
    let nout = model.outward_normal(&pole);
    let frame_u = {
        let d = corners[0].0 - pole;
        (d - d.dot(&nout) * nout).normalize()
    };
    let frame_v = nout.cross(&frame_u);
    let angle = |p: &Vec3| {
        let d = p - pole;
        d.dot(&frame_v).atan2(d.dot(&frame_u))
    };
    corners.sort_by(|a, b| angle(&a.0).total_cmp(&angle(&b.0)));
    let arc_planes = match support {
        Support::Wedge(_) => {
            // the plane-0 arc runs from the first corner to the second when
            // its midpoint lies in that angular range
            let arc = arc_points(&model, support, 0, &corners[0].0, &corners[1].0, 2, &pole)?;
            let (lo, hi, mid) = (angle(&corners[0].0), angle(&corners[1].0), angle(&arc[0]));
            let within = if lo < hi { mid > lo && mid < hi } else { mid > lo || mid < hi };
            if within {
                vec![0, 1]
            } else {
                vec![1, 0]
            }
        }
        Support::Trihedral(_) => (0..corners.len())
            .map(|i| {
                let (a, b) = (edges[corners[i].1].planes, edges[corners[(i + 1) % corners.len()].1].planes);
                if a.0 == b.0 || a.0 == b.1 {
                    a.0
                } else {
                    a.1
                }
            })
            .collect(),
    };
    Ok(Blueprint { model, corners, arc_planes })
}

/// Central point of the free surface.
fn pole_point(support: &Support, model: &SurfaceModel, corners: &[(Vec3, usize)]) -> Result<Vec3> {
    let p = match *model {
        SurfaceModel::Sphere { center, radius, sigma } => {
            let dir = match support.base() {
                Some((g, _)) => g,
                None => support.planes().iter().map(|p| p.normal()).sum::<Vec3>().normalize(),
            };
            center - sigma * radius * dir
        }
        SurfaceModel::Plane { .. } => {
            let c = corners.iter().map(|c| c.0).sum::<Vec3>() / corners.len() as f64;
            model.project_interior(&c)
        }
    };
    if !support_points_inside(support, &p, 1e-9) {
        return Err(Error::no_solution("seed pole lies outside the support region"));
    }
    Ok(p)
}

/// `k - 1` points on the contact curve of `plane` strictly between `a` and
/// `b`, following the arc that stays in the support region.
fn arc_points(
    model: &SurfaceModel,
    support: &Support,
    plane: usize,
    a: &Vec3,
    b: &Vec3,
    k: usize,
    pole: &Vec3,
) -> Result<Vec<Vec3>> {
    let wall = support.planes()[plane];
    match *model {
        SurfaceModel::Plane { .. } => Ok((1..k).map(|s| a + (b - a) * (s as f64 / k as f64)).collect()),
        SurfaceModel::Sphere { center, radius, .. } => {
            let d = wall.signed_distance(&center);
            let foot = wall.project(&center);
            let rho = (radius * radius - d * d).max(0.0).sqrt();
            let e1 = (a - foot).normalize();
            let e2 = wall.normal().cross(&e1);
            let tb = (b - foot).dot(&e2).atan2((b - foot).dot(&e1));
            let ccw = if tb >= 0.0 { tb } else { tb + std::f64::consts::TAU };
            let at = |t: f64| foot + rho * (t.cos() * e1 + t.sin() * e2);
            let mut best: Option<(f64, f64)> = None;
            for span in [ccw, ccw - std::f64::consts::TAU] {
                let inside = (1..16).all(|s| support_points_inside(support, &at(span * s as f64 / 16.0), 1e-9));
                if inside {
                    let dist = (at(0.5 * span) - pole).norm();
                    if best.is_none_or(|(_, bd)| dist < bd) {
                        best = Some((span, dist));
                    }
                }
            }
            let (span, _) = best.ok_or_else(|| Error::no_solution("contact arc leaves the support region"))?;
            Ok((1..k).map(|s| at(span * s as f64 / k as f64)).collect())
        }
    }
}

/// Coarse disk from a blueprint: center vertex, inner ring, boundary ring.
fn coarse_mesh(support: &Support, bp: &Blueprint) -> Result<TriMeshDrop> {
    let nc = bp.corners.len();
    let (inner, k) = if nc == 2 { (8, 8) } else { (9, 5) };
    let pole = pole_point(support, &bp.model, &bp.corners)?;
    let mut boundary: Vec<(Vec3, VertexTag)> = Vec::new();
    for i in 0..nc {
        boundary.push((bp.corners[i].0, VertexTag::OnEdge(bp.corners[i].1)));
        let next = &bp.corners[(i + 1) % nc].0;
        for p in arc_points(&bp.model, support, bp.arc_planes[i], &bp.corners[i].0, next, k, &pole)? {
            boundary.push((p, VertexTag::OnPlane(bp.arc_planes[i])));
        }
    }
    let mb = boundary.len();
    let mut vertices = vec![pole];
    let mut tags = vec![VertexTag::Free];
    for l in 0..inner {
        let s = l as f64 * mb as f64 / inner as f64;
        let (k0, frac) = (s.floor() as usize, s - s.floor());
        let q = boundary[k0 % mb].0 * (1.0 - frac) + boundary[(k0 + 1) % mb].0 * frac;
        vertices.push(bp.model.project_interior(&(0.5 * (pole + q))));
        tags.push(VertexTag::Free);
    }
    for (p, t) in &boundary {
        vertices.push(*p);
        tags.push(*t);
    }
    let iv = |l: usize| 1 + l % inner;
    let bv = |k: usize| 1 + inner + k % mb;
    let mut triangles = Vec::new();
    for l in 0..inner {
        triangles.push([0, iv(l), iv(l + 1)]);
    }
    let (mut i, mut k) = (0usize, 0usize);
    while i < inner || k < mb {
        let next_i = (i + 1) as f64 / inner as f64;
        let next_k = (k + 1) as f64 / mb as f64;
        if k < mb && (i >= inner || next_k <= next_i) {
            triangles.push([iv(i), bv(k), bv(k + 1)]);
            k += 1;
        } else {
            triangles.push([iv(i), bv(k), iv(i + 1)]);
            i += 1;
        }
    }
    let mut mesh = TriMeshDrop {
        vertices,
        tags,
        triangles,
        support: *support,
        mode: VolumeMode::Fixed(1.0),
        lagrange_h: 0.0,
    };
    orient_outward(&mut mesh, &bp.model);
    Ok(mesh)
}

fn orient_outward(mesh: &mut TriMeshDrop, model: &SurfaceModel) {
    let score: f64 = mesh
        .triangles
        .iter()
        .map(|t| {
            let c = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
            mesh.triangle_normal(t).dot(&model.outward_normal(&c))
        })
        .sum();
    if score < 0.0 {
        for t in mesh.triangles.iter_mut() {
            t.swap(1, 2);
        }
    }
}

/// Quadrisection of every triangle. Boundary midpoints inherit the plane
/// of their contact chain; `model` (when given) receives the new points.
pub fn refine_with(mesh: &TriMeshDrop, model: Option<&SurfaceModel>) -> Result<TriMeshDrop> {
    split(mesh, model, vec![true; mesh.triangles.len()])
}

/// Red-green refinement: marked triangles are quadrisected, neighbours with
/// two or more split edges join them and those with one are bisected, so the
/// result stays conforming.
fn split(mesh: &TriMeshDrop, model: Option<&SurfaceModel>, mut red: Vec<bool>) -> Result<TriMeshDrop> {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut cut: BTreeSet<(usize, usize)> = BTreeSet::new();
    loop {
        for (t, &r) in mesh.triangles.iter().zip(&red) {
            if r {
                cut.extend([key(t[0], t[1]), key(t[1], t[2]), key(t[2], t[0])]);
            }
        }
        let mut changed = false;
        for (i, t) in mesh.triangles.iter().enumerate() {
            if !red[i] && (0..3).filter(|&k| cut.contains(&key(t[k], t[(k + 1) % 3]))).count() >= 2 {
                red[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let boundary: BTreeSet<(usize, usize)> = mesh.boundary_edges().iter().map(|&(a, b)| key(a, b)).collect();
    let planes = mesh.support.planes();
    let mut out = mesh.clone();
    let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut edges: Vec<_> = cut.into_iter().collect();
    edges.sort_unstable();
    for (a, b) in edges {
        let p = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
        let (p, tag) = if boundary.contains(&(a, b)) {
            let plane = match (mesh.tags[a], mesh.tags[b]) {
                (VertexTag::OnPlane(j), _) | (_, VertexTag::OnPlane(j)) => j,
                _ => return Err(Error::InvalidMesh(format!("boundary edge {a}-{b} has no plane vertex"))),
            };
            let tag = VertexTag::OnPlane(plane);
            let q = match model {
                Some(m) => m.project_contact(&p, &planes[plane]),
                None => p,
            };
            (mesh.support.snap(tag, &q), tag)
        } else {
            (model.map_or(p, |m| m.project_interior(&p)), VertexTag::Free)
        };
        out.vertices.push(p);
        out.tags.push(tag);
        mid.insert((a, b), out.vertices.len() - 1);
    }
    let mut tris = Vec::with_capacity(mesh.triangles.len() * 4);
    for (t, &r) in mesh.triangles.iter().zip(&red) {
        if r {
            let ab = mid[&key(t[0], t[1])];
            let bc = mid[&key(t[1], t[2])];
            let ca = mid[&key(t[2], t[0])];
            tris.extend([[t[0], ab, ca], [ab, t[1], bc], [ca, bc, t[2]], [ab, bc, ca]]);
            continue;
        }
        match (0..3).find_map(|k| mid.get(&key(t[k], t[(k + 1) % 3])).map(|&m| (k, m))) {
            Some((k, m)) => {
                let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                tris.extend([[a, m, c], [m, b, c]]);
            }
            None => tris.push(*t),
        }
    }
    out.triangles = tris;
    Ok(out)
}

/// Locally refines around every edge vertex `levels` times. Each pass
/// quadrisects triangles within three local edge lengths of a vertex, which
/// keeps successive green closures apart.
fn grade_corners(mesh: &TriMeshDrop, model: Option<&SurfaceModel>, levels: usize) -> Result<TriMeshDrop> {
    let mut mesh = mesh.clone();
    for _ in 0..levels {
        let adj = mesh.neighbors();
        let corners: Vec<(Vec3, f64)> = (0..mesh.vertices.len())
            .filter(|&v| matches!(mesh.tags[v], VertexTag::OnEdge(_)))
            .map(|v| {
                let p = mesh.vertices[v];
                let h = adj[v].iter().map(|&w| (mesh.vertices[w] - p).norm()).sum::<f64>() / adj[v].len().max(1) as f64;
                (p, 3.0 * h)
            })
            .collect();
        if corners.is_empty() {
            break;
        }
        let red = mesh
            .triangles
            .iter()
            .map(|t| t.iter().any(|&v| corners.iter().any(|(c, r)| (mesh.vertices[v] - c).norm() < *r)))
            .collect();
        mesh = split(&mesh, model, red)?;
    }
    Ok(mesh)
}

/// Plain quadrisection with constraint-respecting midpoints.
pub fn refine(mesh: &TriMeshDrop) -> Result<TriMeshDrop> {
    refine_with(mesh, None)
}

/// Tangential Laplacian relaxation of free vertices, followed by
/// re-projection onto the model surface.
fn relax(mesh: &mut TriMeshDrop, model: &SurfaceModel, sweeps: usize) {
    let adj = mesh.neighbors();
    for _ in 0..sweeps {
        let old = mesh.vertices.clone();
        for v in 0..old.len() {
            if mesh.tags[v] != VertexTag::Free {
                continue;
            }
            let avg = adj[v].iter().map(|&w| old[w]).sum::<Vec3>() / adj[v].len() as f64;
            mesh.vertices[v] = model.project_interior(&(old[v] + 0.5 * (avg - old[v])));
        }
    }
}

/// Refined sample of the analytic solution with its surface model.
fn sampled(support: &Support, h: Option<f64>, level: usize) -> Result<(TriMeshDrop, SurfaceModel)> {
    let bp = blueprint(support, h)?;
    let mut mesh = coarse_mesh(support, &bp)?;
    for _ in 0..level {
        mesh = refine_with(&mesh, Some(&bp.model))?;
        relax(&mut mesh, &bp.model, 2);
    }
    Ok((mesh, bp.model))
}

fn model_multiplier(model: &SurfaceModel) -> f64 {
    match *model {
        SurfaceModel::Sphere { radius, sigma, .. } => -sigma * 2.0 / radius,
        SurfaceModel::Plane { .. } => 0.0,
    }
}

/// Samples the analytic solution with curvature `h` (ignored for
/// cylinders, whose angles fix it) at refinement `level`, without rescaling.
/// The volume is fixed at the sampled value.
pub fn cap_mesh(support: &Support, h: f64, level: usize) -> Result<TriMeshDrop> {
    let (mut mesh, model) = sampled(support, Some(h), level)?;
    mesh.snap_constraints();
    let v = energy(&mesh)?.volume;
    if !(v > 0.0) {
        return Err(Error::InvalidMesh(format!("sampled cap encloses volume {v}")));
    }
    mesh.mode = VolumeMode::Fixed(v);
    mesh.lagrange_h = model_multiplier(&model);
    mesh.validate()?;
    Ok(mesh)
}

/// Seed mesh for `support` holding `target_volume`, refined `level` times.
///
/// The analytic cap (or plane) is sampled, scaled about the edge or apex
/// (translated along the generator for cylinders) to the target volume and
/// optionally perturbed along its normals, then graded towards edge
/// vertices when requested.
pub fn seed_mesh(support: &Support, target_volume: f64, level: usize, opts: &SeedOptions) -> Result<TriMeshDrop> {
    if !(target_volume > 0.0 && target_volume.is_finite()) {
        return Err(Error::domain("target volume must be positive"));
    }
    let (mut mesh, mut model) = sampled(support, None, level)?;
    let v0 = energy(&mesh)?.volume;
    if !(v0 > 0.0) {
        return Err(Error::InvalidMesh(format!("seed encloses volume {v0}")));
    }
    match support {
        Support::Trihedral(t) if matches!(t.kind, TrihedralKind::Cylinder { .. }) => {
            let (g, _) = support.base().expect("cylinder");
            let shift = g * (target_volume - v0) / support.base_area();
            mesh.vertices.iter_mut().for_each(|p| *p += shift);
            model = model.translated(&shift);
        }
        _ => {
            let about = support.apex().unwrap_or_else(|| support.edges()[0].line.point);
            let s = (target_volume / v0).cbrt();
            mesh.vertices.iter_mut().for_each(|p| *p = about + s * (*p - about));
            model = model.scaled(&about, s);
        }
    }
    mesh.snap_constraints();
    mesh.mode = VolumeMode::Fixed(target_volume);
    mesh.lagrange_h = model_multiplier(&model);
    if opts.perturbation > 0.0 {
        perturb(&mut mesh, opts.perturbation, opts.seed)?;
    }
    if opts.corner_levels > 0 {
        // a perturbed seed is graded without projection so the perturbation
        // stays smooth on the finer cells
        let exact = (opts.perturbation == 0.0).then_some(&model);
        mesh = grade_corners(&mesh, exact, opts.corner_levels)?;
        restore_volume(&mut mesh, target_volume)?;
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Adds a smooth random normal displacement of relative amplitude
/// `amplitude` (fraction of half the diameter), then restores the volume
/// in fixed-volume mode.
pub fn perturb(mesh: &mut TriMeshDrop, amplitude: f64, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 0.5 * mesh.diameter();
    let center = mesh.vertices.iter().sum::<Vec3>() / mesh.vertices.len() as f64;
    let modes: Vec<(Vec3, f64, f64)> = (0..6)
        .map(|_| {
            let dir = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let k = rng.random_range(1.0..3.0) / size;
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (dir * k, phase, rng.random_range(-1.0..1.0))
        })
        .collect();
    let field = |p: &Vec3| -> f64 { modes.iter().map(|(k, ph, a)| a * (k.dot(&(p - center)) + ph).sin()).sum() };
    let peak = mesh.vertices.iter().map(|p| field(p).abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(());
    }
    let scale = amplitude * size / peak;
    let normals = mesh.vertex_normals();
    for i in 0..mesh.vertices.len() {
        let d = mesh.support.project_direction(mesh.tags[i], &normals[i]);
        let f = field(&mesh.vertices[i]);
        mesh.vertices[i] += scale * f * d;
    }
    mesh.snap_constraints();
    if let VolumeMode::Fixed(target) = mesh.mode {
        restore_volume(mesh, target)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{TrihedralConfig, WedgeConfig};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn wedge_seed_counts_and_volume() {
        let w = WedgeConfig::canonical(FRAC_PI_4, 2.0 * FRAC_PI_3, 2.0 * FRAC_PI_3).unwrap();
        let s = Support::Wedge(w);
        let m0 = seed_mesh(&s, 1.0, 0, &SeedOptions::default()).unwrap();
        assert_eq!(m0.triangles.len(), 32);
        assert_eq!(m0.euler_characteristic(), 1);
        let m = seed_mesh(&s, 1.0, 3, &SeedOptions { perturbation: 0.01, seed: 7, ..Default::default() }).unwrap();
        assert_eq!(m.triangles.len(), 2048);
        assert!((energy(&m).unwrap().volume - 1.0).abs() < 1e-6);
    }

    #[test]
    fn octant_seed_approximates_sphere_octant() {
        let t = TrihedralConfig::orthogonal_octant([FRAC_PI_2; 3]).unwrap();
        let s = Support::Trihedral(t);
        let m = seed_mesh(&s, PI / 6.0, 2, &SeedOptions::default()).unwrap();
        assert_eq!(m.triangles.len(), 33 * 16);
        let e = energy(&m).unwrap();
        assert!((e.free_area - FRAC_PI_2).abs() < 0.05, "{}", e.free_area);
        for a in &e.wetted_areas {
            assert!((a - PI / 4.0).abs() < 0.05, "{a}");
        }
    }

    #[test]
    fn planar_and_cylinder_seeds() {
        let g = (3f64.sqrt() / 3.0).acos();
        let t = TrihedralConfig::orthogonal_octant([g; 3]).unwrap();
        let m = seed_mesh(&Support::Trihedral(t), 1.0 / 6.0, 1, &SeedOptions::default()).unwrap();
        let e = energy(&m).unwrap();
        assert!((e.free_area - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(e.energy.abs() < 1e-12);
        let p = TrihedralConfig::equilateral_prism(1.0, [1.2; 3], 0.0).unwrap();
        let m = seed_mesh(&Support::Trihedral(p), 4.0, 2, &SeedOptions { perturbation: 0.01, seed: 1, ..Default::default() }).unwrap();
        assert!((energy(&m).unwrap().volume - 4.0).abs() < 1e-8);
    }

    #[test]
    fn refine_preserves_invariants() {
        let w = WedgeConfig::canonical(0.6, 1.7, 2.0).unwrap();
        let m = seed_mesh(&Support::Wedge(w), 2.0, 1, &SeedOptions::default()).unwrap();
        let r = refine(&m).unwrap();
        assert_eq!(r.triangles.len(), 4 * m.triangles.len());
        assert_eq!(r.euler_characteristic(), 1);
        r.validate().unwrap();
    }

    #[test]
    fn graded_seed_stays_conforming_and_refines_corners() {
        let w = WedgeConfig::canonical(FRAC_PI_4, 2.0 * FRAC_PI_3, 2.0 * FRAC_PI_3).unwrap();
        let s = Support::Wedge(w);
        let plain = seed_mesh(&s, 1.0, 2, &SeedOptions::default()).unwrap();
        let graded = seed_mesh(&s, 1.0, 2, &SeedOptions { corner_levels: 2, ..Default::default() }).unwrap();
        graded.validate().unwrap();
        assert_eq!(graded.euler_characteristic(), 1);
        assert!(graded.triangles.len() > plain.triangles.len());
        assert!((energy(&graded).unwrap().volume - 1.0).abs() < 1e-9);
        let spacing = |m: &TriMeshDrop| {
            let adj = m.neighbors();
            let v = (0..m.vertices.len()).find(|&v| matches!(m.tags[v], VertexTag::OnEdge(_))).unwrap();
            adj[v].iter().map(|&w| (m.vertices[w] - m.vertices[v]).norm()).fold(f64::INFINITY, f64::min)
        };
        assert!(spacing(&graded) < 0.3 * spacing(&plain));
    }

    #[test]
    fn cap_mesh_samples_the_sphere() {
        let w = WedgeConfig::canonical(0.7, 1.9, 2.2).unwrap();
        let m = cap_mesh(&Support::Wedge(w), -1.0, 3).unwrap();
        let cap = wedge_cap(&w, -1.0).unwrap();
        for (p, t) in m.vertices.iter().zip(&m.tags) {
            if *t == VertexTag::Free {
                assert!(((p - cap.center).norm() - cap.radius).abs() < 1e-12);
            }
        }
        assert!((m.lagrange_h - 2.0).abs() < 1e-12, "{}", m.lagrange_h);
    }
}
