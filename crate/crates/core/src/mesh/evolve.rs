//! Constrained descent of the capillary energy.
//!
//! By default every vertex moves along one axis: free vertices along their
//! normal, contact vertices along the in-plane part of it and edge vertices
//! along the edge. Search directions come from limited-memory BFGS on these
//! axis coordinates, seeded with a clamped cotangent Laplacian plus a mass
//! term and kept tangent to the volume constraint; the volume direction
//! yields the multiplier estimate. After each step the volume is restored
//! by a uniform offset along the projected vertex normals. Steps are chosen
//! from exact directional derivatives with a sufficient decrease test while
//! energy differences are above round-off.
//!
//! The optional full-gradient mode moves vertices along their whole
//! constrained preconditioned gradient instead, which also relaxes
//! tangential mesh distortion but converges far more slowly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{energy, energy_gradient, TriMeshDrop, VertexTag, VolumeMode, MIN_TRIANGLE_AREA};
use crate::error::{Error, Result};
use crate::linalg::{SparseCholesky, TripletBuilder};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub max_iters: usize,
    /// Bound on the normal force residual per unit dual area.
    pub grad_tol: f64,
    /// Tangential smoothing coefficient for free vertices (0 disables).
    pub smoothing: f64,
    /// Move vertices along the full constrained gradient instead of their
    /// normal axes only.
    pub full_gradient: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { max_iters: 2000, grad_tol: 1e-6, smoothing: 0.0, full_gradient: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub free_area: f64,
    pub volume: f64,
    pub grad_norm: f64,
    /// Mean curvature estimate, half the multiplier.
    pub h_estimate: f64,
    /// Accepted line-search step leading to this iterate.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub energy: f64,
    pub volume: f64,
    pub lagrange_h: f64,
    pub grad_norm: f64,
    /// Number of local tangential relaxations triggered by poor triangles.
    pub relaxations: usize,
    pub trace: Vec<TraceRow>,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
const MEMORY: usize = 8;

/// Directions along which the volume is restored: vertex normals reduced to
/// the motions allowed by each tag.
fn offset_directions(mesh: &TriMeshDrop) -> Vec<Vec3> {
    mesh.vertex_normals()
        .iter()
        .zip(mesh.tags.iter())
        .map(|(n, &t)| mesh.support.project_direction(t, n))
        .collect()
}

/// Restores the volume to `target` by a uniform offset along the projected
/// vertex normals (Newton iteration on the offset).
pub fn restore_volume(mesh: &mut TriMeshDrop, target: f64) -> Result<()> {
    let dirs = offset_directions(mesh);
    for _ in 0..30 {
        let g = energy_gradient(mesh)?;
        let err = g.breakdown.volume - target;
        if err.abs() <= 1e-13 * target.abs().max(1.0) {
            return Ok(());
        }
        let rate: f64 = g.volume.iter().zip(dirs.iter()).map(|(a, b)| a.dot(b)).sum();
        if !(rate.abs() > 0.0) {
            break;
        }
        let delta = -err / rate;
        for (p, d) in mesh.vertices.iter_mut().zip(dirs.iter()) {
            *p += delta * d;
        }
        mesh.snap_constraints();
    }
    let v = energy(mesh)?.volume;
    if (v - target).abs() <= 1e-10 * target.abs().max(1.0) {
        Ok(())
    } else {
        Err(Error::NonConvergence {
            message: format!("volume restoration stalled at {v} (target {target})"),
            trace: Vec::new(),
        })
    }
}

fn preconditioner(mesh: &TriMeshDrop) -> Result<SparseCholesky> {
    let n = mesh.vertices.len();
    let mass = mesh.dual_areas();
    let d = mesh.diameter();
    let c = 1.0 / (d * d);
    let mut a = TripletBuilder::new(n);
    let mut diag = vec![0.0; n];
    for ((i, j), w) in mesh.cotan_weights() {
        let w = w.clamp(1e-3, 1e3);
        a.push(i.max(j), i.min(j), -w);
        diag[i] += w;
        diag[j] += w;
    }
    for i in 0..n {
        a.push(i, i, diag[i] + c * mass[i]);
    }
    SparseCholesky::new(&a)
}

/// Unit motion axis per vertex: the vertex normal for free vertices, its
/// in-plane part on contact lines and the edge direction on edges.
fn motion_axes(mesh: &TriMeshDrop) -> Vec<Vec3> {
    let edges = mesh.support.edges();
    offset_directions(mesh)
        .iter()
        .zip(mesh.tags.iter())
        .map(|(d, &t)| match t {
            VertexTag::OnEdge(e) => {
                let l = edges[e].line.dir;
                if d.dot(&l) < 0.0 {
                    -l
                } else {
                    l
                }
            }
            _ => d.normalize(),
        })
        .collect()
}

fn components(axes: &[Vec3], g: &[Vec3]) -> Vec<f64> {
    axes.iter().zip(g.iter()).map(|(a, v)| a.dot(v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn project3(mesh: &TriMeshDrop, g: &[Vec3]) -> Vec<Vec3> {
    g.iter().zip(mesh.tags.iter()).map(|(v, &t)| mesh.support.project_direction(t, v)).collect()
}

fn precondition3(mesh: &TriMeshDrop, m: &SparseCholesky, g: &[Vec3]) -> Vec<Vec3> {
    let rhs: Vec<[f64; 3]> = project3(mesh, g).iter().map(|v| [v.x, v.y, v.z]).collect();
    let x: Vec<Vec3> = m.solve3(&rhs).iter().map(|r| Vec3::new(r[0], r[1], r[2])).collect();
    project3(mesh, &x)
}

fn dot3(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.dot(y)).sum()
}

/// Largest force component along the motion axes per unit dual area.
fn residual_norm(mesh: &TriMeshDrop, force: &[f64]) -> f64 {
    let areas = mesh.dual_areas();
    force.iter().zip(areas.iter()).map(|(f, a)| f.abs() / a).fold(0.0, f64::max)
}

fn orientation_kept(before: &TriMeshDrop, after: &TriMeshDrop) -> bool {
    before.triangles.iter().all(|t| {
        let (n0, n1) = (before.triangle_normal(t), after.triangle_normal(t));
        0.5 * n1.norm() > MIN_TRIANGLE_AREA && n0.dot(&n1) > 0.0
    })
}

/// Merit function: energy in fixed-volume mode, `E - lambda V` otherwise.
fn merit(mesh: &TriMeshDrop) -> Result<f64> {
    let e = energy(mesh)?;
    Ok(match mesh.mode {
        VolumeMode::Fixed(_) => e.energy,
        VolumeMode::Pressure(l) => e.energy - l * e.volume,
    })
}

/// Moves the trial mesh to `base + t d` and re-imposes the constraints.
fn trial(base: &TriMeshDrop, d: &[Vec3], t: f64) -> Result<Option<(TriMeshDrop, f64)>> {
    let mut m = base.clone();
    for (p, s) in m.vertices.iter_mut().zip(d.iter()) {
        *p += t * s;
    }
    m.snap_constraints();
    if !orientation_kept(base, &m) {
        return Ok(None);
    }
    if let VolumeMode::Fixed(target) = m.mode {
        if restore_volume(&mut m, target).is_err() {
            return Ok(None);
        }
    }
    match merit(&m) {
        Ok(f) => Ok(Some((m, f))),
        Err(Error::MeshDegeneration(_)) | Err(Error::InvalidMesh(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Backtracking search with a sufficient decrease test on the merit.
fn armijo(cur: &TriMeshDrop, d: &[Vec3], f: f64, slope: f64, slack: f64, t0: f64) -> Result<Option<(TriMeshDrop, f64, f64)>> {
    let mut t = t0;
    for _ in 0..MAX_HALVINGS {
        if let Some((m, ft)) = trial(cur, d, t)? {
            if ft <= f + ARMIJO * t * slope + slack {
                return Ok(Some((m, ft, t)));
            }
        }
        t *= 0.5;
    }
    Ok(None)
}

/// Step selection from exact directional derivatives: a trial is kept when
/// the slope along `d` has shrunk in magnitude (or still points downhill)
/// and, while merit differences are above round-off, the merit decreased
/// sufficiently. Otherwise a secant step on the slope is tried.
fn secant(
    cur: &TriMeshDrop,
    d: &[Vec3],
    lambda: f64,
    slope: f64,
    f: f64,
    slack: f64,
) -> Result<Option<(TriMeshDrop, f64, f64)>> {
    let resolvable = -slope > 1e2 * slack;
    let mut t = 1.0;
    for _ in 0..MAX_HALVINGS {
        if let Some((m, ft)) = trial(cur, d, t)? {
            let g = energy_gradient(&m)?;
            let s1: f64 = (0..d.len()).map(|i| (g.energy[i] - lambda * g.volume[i]).dot(&d[i])).sum();
            let decrease = !resolvable || ft <= f + ARMIJO * t * slope + slack;
            if decrease && (s1.abs() <= 0.9 * slope.abs() || s1 < 0.0) {
                return Ok(Some((m, ft, t)));
            }
            t *= if s1 > 0.0 { (slope / (slope - s1)).clamp(0.1, 0.9) } else { 0.5 };
        } else {
            t *= 0.5;
        }
    }
    Ok(None)
}

/// `4 sqrt(3) A / (sum of squared edge lengths)`: 1 for equilateral
/// triangles, 0 for degenerate ones.
fn triangle_quality(mesh: &TriMeshDrop, t: &[usize; 3]) -> f64 {
    let e2: f64 = (0..3).map(|k| (mesh.vertices[t[k]] - mesh.vertices[t[(k + 1) % 3]]).norm_squared()).sum();
    4.0 * 3f64.sqrt() * mesh.triangle_area(t) / e2
}

fn min_quality(mesh: &TriMeshDrop) -> f64 {
    mesh.triangles.iter().map(|t| triangle_quality(mesh, t)).fold(f64::INFINITY, f64::min)
}

/// Moves free vertices around triangles of quality below `target` towards
/// the centroid of their neighbours within the tangent plane, then restores
/// the volume. Normal-axis motion cannot undo the tangential distortion
/// that appears when a contact line sweeps across small cells.
fn relax_poor_triangles(mesh: &mut TriMeshDrop, target: f64) -> Result<()> {
    let adj = mesh.neighbors();
    for _ in 0..20 {
        let mut region = BTreeSet::new();
        for t in mesh.triangles.iter().filter(|t| triangle_quality(mesh, t) < target) {
            for &v in t {
                region.insert(v);
                region.extend(adj[v].iter().copied());
            }
        }
        region.retain(|&v| mesh.tags[v] == VertexTag::Free);
        if region.is_empty() {
            break;
        }
        let normals = mesh.vertex_normals();
        let mut next = mesh.clone();
        for &v in &region {
            let c = adj[v].iter().map(|&w| mesh.vertices[w]).sum::<Vec3>() / adj[v].len() as f64;
            let mv = c - mesh.vertices[v];
            next.vertices[v] += mv - mv.dot(&normals[v]) * normals[v];
        }
        if !orientation_kept(mesh, &next) {
            break;
        }
        *mesh = next;
    }
    if let VolumeMode::Fixed(target) = mesh.mode {
        restore_volume(mesh, target)?;
    }
    Ok(())
}

/// Area-weighted tangential relaxation of free vertices; kept only when it
/// does not raise the merit function.
fn smooth(mesh: &mut TriMeshDrop, coef: f64, current: f64) -> Result<f64> {
    let normals = mesh.vertex_normals();
    let n = mesh.vertices.len();
    let mut acc = vec![Vec3::zeros(); n];
    let mut wsum = vec![0.0; n];
    for t in &mesh.triangles {
        let a = mesh.triangle_area(t);
        let c = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
        for &v in t {
            acc[v] += a * c;
            wsum[v] += a;
        }
    }
    let mut m = mesh.clone();
    for i in 0..n {
        if mesh.tags[i] != VertexTag::Free {
            continue;
        }
        let mv = coef * (acc[i] / wsum[i] - mesh.vertices[i]);
        m.vertices[i] += mv - mv.dot(&normals[i]) * normals[i];
    }
    if !orientation_kept(mesh, &m) {
        return Ok(current);
    }
    if let VolumeMode::Fixed(target) = m.mode {
        if restore_volume(&mut m, target).is_err() {
            return Ok(current);
        }
    }
    match merit(&m) {
        Ok(f) if f <= current => {
            *mesh = m;
            Ok(f)
        }
        _ => Ok(current),
    }
}

/// Evolves `mesh` towards a constrained critical point of the energy.
pub fn evolve(mesh: &TriMeshDrop, opts: &EvolveOptions) -> Result<(TriMeshDrop, ConvergenceReport)> {
    if !(opts.grad_tol > 0.0) {
        return Err(Error::domain("grad_tol must be positive"));
    }
    mesh.validate()?;
    let mut cur = mesh.clone();
    if let VolumeMode::Fixed(target) = cur.mode {
        restore_volume(&mut cur, target)?;
    }
    let mut f = merit(&cur)?;
    let mut trace = Vec::new();
    let mut step = 1.0f64;
    let mut grad_norm = f64::INFINITY;
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut last: Option<(Vec<f64>, Vec<f64>)> = None;
    // triangles are relaxed once they fall well below the seed's worst
    let quality_floor = 0.25 * min_quality(&cur);
    let mut relaxations = 0;
    for iter in 0..=opts.max_iters {
        let g = energy_gradient(&cur)?;
        let m = preconditioner(&cur)?;
        let axes = motion_axes(&cur);
        let (ge, gv) = (components(&axes, &g.energy), components(&axes, &g.volume));
        let (lambda, d) = if opts.full_gradient {
            let (ue, uv) = (precondition3(&cur, &m, &g.energy), precondition3(&cur, &m, &g.volume));
            let pv = project3(&cur, &g.volume);
            let lambda = match cur.mode {
                VolumeMode::Fixed(_) => dot3(&pv, &ue) / dot3(&pv, &uv),
                VolumeMode::Pressure(l) => l,
            };
            (lambda, ue.iter().zip(uv.iter()).map(|(a, b)| -(a - lambda * b)).collect::<Vec<Vec3>>())
        } else {
            let (ue, uv) = (m.solve(&ge), m.solve(&gv));
            let lambda = match cur.mode {
                VolumeMode::Fixed(_) => dot(&gv, &ue) / dot(&gv, &uv),
                VolumeMode::Pressure(l) => l,
            };
            let r: Vec<f64> = ge.iter().zip(gv.iter()).map(|(a, b)| a - lambda * b).collect();
            if let Some((rp, sp)) = last.take() {
                let y: Vec<f64> = r.iter().zip(rp.iter()).map(|(a, b)| a - b).collect();
                if dot(&y, &sp) > 0.0 {
                    if pairs.len() == MEMORY {
                        pairs.remove(0);
                    }
                    pairs.push((sp, y));
                }
            }
            // limited-memory BFGS with the Laplacian solve as initial inverse
            // Hessian, kept tangent to the volume constraint
            let fixed = matches!(cur.mode, VolumeMode::Fixed(_));
            let tangent = |z: &mut Vec<f64>| {
                if fixed {
                    let mu = dot(&gv, z) / dot(&gv, &uv);
                    z.iter_mut().zip(uv.iter()).for_each(|(a, b)| *a -= mu * b);
                }
            };
            let mut q = r.clone();
            let mut alphas = Vec::with_capacity(pairs.len());
            for (sk, yk) in pairs.iter().rev() {
                let al = dot(sk, &q) / dot(yk, sk);
                q.iter_mut().zip(yk.iter()).for_each(|(a, b)| *a -= al * b);
                alphas.push(al);
            }
            let mut z = m.solve(&q);
            tangent(&mut z);
            for ((sk, yk), al) in pairs.iter().zip(alphas.iter().rev()) {
                let be = dot(yk, &z) / dot(yk, sk);
                z.iter_mut().zip(sk.iter()).for_each(|(a, b)| *a += (al - be) * b);
            }
            tangent(&mut z);
            let mut s: Vec<f64> = z.iter().map(|x| -x).collect();
            if !(dot(&r, &s) < 0.0) {
                pairs.clear();
                s = ue.iter().zip(uv.iter()).map(|(a, b)| -(a - lambda * b)).collect();
            }
            last = Some((r, s.clone()));
            (lambda, (0..axes.len()).map(|i| s[i] * axes[i]).collect())
        };
        cur.lagrange_h = lambda;
        let force: Vec<f64> = ge.iter().zip(gv.iter()).map(|(a, b)| a - lambda * b).collect();
        grad_norm = residual_norm(&cur, &force);
        trace.push(TraceRow {
            iter,
            energy: g.breakdown.energy,
            free_area: g.breakdown.free_area,
            volume: g.breakdown.volume,
            grad_norm,
            h_estimate: 0.5 * lambda,
            step: if iter == 0 { 0.0 } else { step },
        });
        if grad_norm < opts.grad_tol {
            let report = report(&cur, true, iter, grad_norm, relaxations, trace)?;
            return Ok((cur, report));
        }
        if iter == opts.max_iters {
            break;
        }
        let slope: f64 = (0..axes.len()).map(|i| (g.energy[i] - lambda * g.volume[i]).dot(&d[i])).sum();
        if !(slope < 0.0) {
            return Err(Error::NonConvergence {
                message: format!("no descent direction at iteration {iter} (slope {slope:e})"),
                trace: trace.iter().map(|r| r.energy).collect(),
            });
        }
        let slack = 1e-14 * f.abs().max(1.0);
        // below this predicted decrease the energy cannot resolve the step
        let accepted = match secant(&cur, &d, lambda, slope, f, slack)? {
            Some(a) => Some(a),
            None => {
                pairs.clear();
                armijo(&cur, &d, f, slope, slack, 1.0)?
            }
        };
        let Some((next, fnext, t)) = accepted else {
            return Err(Error::NonConvergence {
                message: format!("line search failed at iteration {iter} with residual {grad_norm:e}"),
                trace: trace.iter().map(|r| r.energy).collect(),
            });
        };
        step = t;
        if let Some((_, sp)) = last.as_mut() {
            sp.iter_mut().for_each(|x| *x *= t);
        }
        cur = next;
        f = fnext;
        if min_quality(&cur) < quality_floor {
            relax_poor_triangles(&mut cur, 2.0 * quality_floor)?;
            f = merit(&cur)?;
            relaxations += 1;
            pairs.clear();
            last = None;
        }
        if opts.smoothing > 0.0 {
            f = smooth(&mut cur, opts.smoothing, f)?;
        }
    }
    let iterations = opts.max_iters;
    let report = report(&cur, false, iterations, grad_norm, relaxations, trace)?;
    Ok((cur, report))
}

fn report(
    mesh: &TriMeshDrop,
    converged: bool,
    iterations: usize,
    grad_norm: f64,
    relaxations: usize,
    trace: Vec<TraceRow>,
) -> Result<ConvergenceReport> {
    let e = energy(mesh)?;
    Ok(ConvergenceReport {
        converged,
        iterations,
        energy: e.energy,
        volume: e.volume,
        lagrange_h: mesh.lagrange_h,
        grad_norm,
        relaxations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{TrihedralConfig, WedgeConfig};
    use crate::mesh::{seed_mesh, SeedOptions, Support};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn octant_cap_is_nearly_critical() {
        let t = TrihedralConfig::orthogonal_octant([FRAC_PI_2; 3]).unwrap();
        let m = seed_mesh(&Support::Trihedral(t), PI / 6.0, 3, &SeedOptions::default()).unwrap();
        let opts = EvolveOptions { max_iters: 1, grad_tol: 1e-30, smoothing: 0.0, full_gradient: false };
        let (out, rep) = evolve(&m, &opts).unwrap();
        assert!(rep.trace[0].energy - rep.energy < 1e-3 * rep.trace[0].energy);
        assert!((energy(&out).unwrap().volume - PI / 6.0).abs() < 1e-10);
        assert!((rep.lagrange_h - 2.0).abs() < 0.05, "{}", rep.lagrange_h);
    }

    #[test]
    fn wedge_evolution_decreases_energy_and_keeps_volume() {
        let w = WedgeConfig::canonical(FRAC_PI_4, 2.0 * FRAC_PI_3, 2.0 * FRAC_PI_3).unwrap();
        let m = seed_mesh(&Support::Wedge(w), 1.0, 2, &SeedOptions { perturbation: 0.01, seed: 3, ..Default::default() }).unwrap();
        let opts = EvolveOptions { max_iters: 40, grad_tol: 1e-9, smoothing: 0.2, full_gradient: false };
        let (out, rep) = evolve(&m, &opts).unwrap();
        for w in rep.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12, "{} -> {}", w[0].energy, w[1].energy);
            assert!((w[1].volume - 1.0).abs() < 1e-8);
        }
        out.validate().unwrap();
    }

    #[test]
    fn restore_volume_reaches_target() {
        let w = WedgeConfig::canonical(0.7, 1.9, 2.1).unwrap();
        let mut m = seed_mesh(&Support::Wedge(w), 1.0, 1, &SeedOptions::default()).unwrap();
        restore_volume(&mut m, 1.3).unwrap();
        assert!((energy(&m).unwrap().volume - 1.3).abs() < 1e-12);
        m.validate().unwrap();
    }
}
