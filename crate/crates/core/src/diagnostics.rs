//! Measurements on drop meshes: sphere and plane fits, discrete mean and
//! principal curvatures, the umbilicity gap, contact angles and vertex
//! angles.
//!
//! Curvatures are reported with respect to the outward normal of the
//! triangles, with the sign chosen so that a convex drop reads positive.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{pair_half_opening, vertex_angle};
use crate::mesh::{Support, TriMeshDrop, VertexTag};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereFit {
    pub center: Vec3,
    pub radius: f64,
    /// RMS of `(|v - center| - radius) / radius`.
    pub relative_rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub normal: Vec3,
    pub offset: f64,
    /// RMS distance to the plane.
    pub rms: f64,
    /// Largest distance to the plane.
    pub max_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SurfaceFit {
    Sphere(SphereFit),
    /// Returned for coplanar input.
    Plane(PlaneFit),
}

impl SurfaceFit {
    /// Relative RMS for spheres, RMS distance for planes.
    pub fn rms(&self) -> f64 {
        match self {
            SurfaceFit::Sphere(s) => s.relative_rms,
            SurfaceFit::Plane(p) => p.rms,
        }
    }
}

fn extent(points: &[Vec3]) -> f64 {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().sum::<Vec3>() / points.len() as f64
}

/// Total least-squares plane.
pub fn fit_plane(points: &[Vec3]) -> Result<PlaneFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("{} points for a plane fit", points.len())));
    }
    let c = centroid(points);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    let normal: Vec3 = eig.eigenvectors.column(k).into_owned().normalize();
    let dist: Vec<f64> = points.iter().map(|p| normal.dot(&(p - c))).collect();
    let rms = (dist.iter().map(|d| d * d).sum::<f64>() / points.len() as f64).sqrt();
    let max_distance = dist.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(PlaneFit { normal, offset: normal.dot(&c), rms, max_distance })
}

/// Algebraic sphere fit refined by geometric Gauss-Newton; coplanar input
/// falls back to a plane fit.
pub fn fit_sphere(points: &[Vec3]) -> Result<SurfaceFit> {
    if points.len() < 10 {
        return Err(Error::InsufficientData(format!("{} points for a sphere fit (need 10)", points.len())));
    }
    let size = extent(points);
    let plane = fit_plane(points)?;
    if plane.max_distance <= 1e-9 * size {
        return Ok(SurfaceFit::Plane(plane));
    }
    let c0 = centroid(points);
    let scale = size;
    let q: Vec<Vec3> = points.iter().map(|p| (p - c0) / scale).collect();
    let mut a = DMatrix::zeros(q.len(), 4);
    let mut b = DVector::zeros(q.len());
    for (i, p) in q.iter().enumerate() {
        a[(i, 0)] = 2.0 * p.x;
        a[(i, 1)] = 2.0 * p.y;
        a[(i, 2)] = 2.0 * p.z;
        a[(i, 3)] = 1.0;
        b[i] = p.norm_squared();
    }
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Consistency(format!("sphere fit: {e}")))?;
    let mut c = Vec3::new(sol[0], sol[1], sol[2]);
    let mut r = (sol[3] + c.norm_squared()).max(0.0).sqrt();
    if !(r.is_finite() && r < 1e6) {
        return Ok(SurfaceFit::Plane(plane));
    }
    for _ in 0..50 {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for p in &q {
            let d = p - c;
            let n = d.norm();
            let res = n - r;
            let j = Vector4::new(-d.x / n, -d.y / n, -d.z / n, -1.0);
            jtj += j * j.transpose();
            jtr += j * res;
        }
        let Some(step) = jtj.lu().solve(&(-jtr)) else { break };
        c += Vec3::new(step[0], step[1], step[2]);
        r += step[3];
        if step.norm() < 1e-15 * r.max(1.0) {
            break;
        }
    }
    let center = c0 + scale * c;
    let radius = scale * r;
    let ss: f64 = points.iter().map(|p| ((p - center).norm() - radius) / radius).map(|e| e * e).sum();
    Ok(SurfaceFit::Sphere(SphereFit { center, radius, relative_rms: (ss / points.len() as f64).sqrt() }))
}

/// Discrete curvatures at one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexCurvature {
    /// Cotangent mean curvature, interior vertices only.
    pub h: Option<f64>,
    /// Principal curvatures from the quadric fit, `k1 >= k2`.
    pub k1: f64,
    pub k2: f64,
}

fn boundary_mask(nv: usize, triangles: &[[usize; 3]]) -> Vec<bool> {
    let mut count = std::collections::BTreeMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut mask = vec![false; nv];
    for ((a, b), c) in count {
        if c == 1 {
            mask[a] = true;
            mask[b] = true;
        }
    }
    mask
}

fn area_normals(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec3> {
    let mut n = vec![Vec3::zeros(); vertices.len()];
    for t in triangles {
        let tn = (vertices[t[1]] - vertices[t[0]]).cross(&(vertices[t[2]] - vertices[t[0]]));
        for &v in t {
            n[v] += tn;
        }
    }
    n.iter().map(|v| v.normalize()).collect()
}

fn adjacency(nv: usize, triangles: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); nv];
    for t in triangles {
        for k in 0..3 {
            adj[t[k]].push(t[(k + 1) % 3]);
            adj[t[(k + 1) % 3]].push(t[k]);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

fn two_ring(adj: &[Vec<usize>], v: usize) -> Vec<usize> {
    k_ring(adj, v, 2)
}

/// Vertices within `k` edges of `v`, excluding `v`, in index order.
fn k_ring(adj: &[Vec<usize>], v: usize, k: usize) -> Vec<usize> {
    let mut set: BTreeSet<usize> = BTreeSet::from([v]);
    let mut front = vec![v];
    for _ in 0..k {
        front = front.iter().flat_map(|&w| adj[w].iter().copied()).filter(|&x| set.insert(x)).collect();
    }
    set.remove(&v);
    let mut out: Vec<usize> = set.into_iter().collect();
    out.sort_unstable();
    out
}

fn tangent_frame(n: &Vec3) -> (Vec3, Vec3) {
    let trial = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = n.cross(&trial).normalize();
    (e1, n.cross(&e1))
}

/// Principal curvatures from a fit `w = a u^2 + b uv + c v^2 + d u + e v`
/// in the tangent frame of `normal`.
fn quadric_curvatures(center: &Vec3, normal: &Vec3, nbrs: &[Vec3]) -> Result<(f64, f64)> {
    if nbrs.len() < 5 {
        return Err(Error::InsufficientData(format!("{} neighbours for a quadric fit", nbrs.len())));
    }
    let (e1, e2) = tangent_frame(normal);
    let scale = nbrs.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    let mut a = DMatrix::zeros(nbrs.len(), 5);
    let mut rhs = DVector::zeros(nbrs.len());
    for (i, p) in nbrs.iter().enumerate() {
        let d = (p - center) / scale;
        let (u, v, w) = (d.dot(&e1), d.dot(&e2), d.dot(normal));
        a[(i, 0)] = u * u;
        a[(i, 1)] = u * v;
        a[(i, 2)] = v * v;
        a[(i, 3)] = u;
        a[(i, 4)] = v;
        rhs[i] = w;
    }
    let s = a
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::Consistency(format!("quadric fit: {e}")))?;
    let (qa, qb, qc, qd, qe) = (s[0] / scale, s[1] / scale, s[2] / scale, s[3], s[4]);
    let first = Matrix2::new(1.0 + qd * qd, qd * qe, qd * qe, 1.0 + qe * qe);
    let w = (1.0 + qd * qd + qe * qe).sqrt();
    let second = Matrix2::new(2.0 * qa, qb, qb, 2.0 * qc) / w;
    let shape = first
        .try_inverse()
        .ok_or_else(|| Error::Consistency("singular first fundamental form".into()))?
        * second;
    // eigenvalues of a 2x2 matrix similar to a symmetric one
    let tr = shape.trace();
    let det = shape.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    // the surface bends away from the outward normal when convex
    let (l1, l2) = (-(0.5 * tr - disc), -(0.5 * tr + disc));
    Ok((l1.max(l2), l1.min(l2)))
}

/// Per-vertex curvature of an oriented triangle surface.
pub fn curvature_field_of(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Result<Vec<VertexCurvature>> {
    let nv = vertices.len();
    let boundary = boundary_mask(nv, triangles);
    let normals = area_normals(vertices, triangles);
    let adj = adjacency(nv, triangles);
    let mut lap = vec![Vec3::zeros(); nv];
    let mut area = vec![0.0; nv];
    for t in triangles {
        let a3 = 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(&(vertices[t[2]] - vertices[t[0]])).norm() / 3.0;
        for k in 0..3 {
            let (i, j, o) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let (u, v) = (vertices[i] - vertices[o], vertices[j] - vertices[o]);
            let cot = u.dot(&v) / u.cross(&v).norm();
            let d = 0.5 * cot * (vertices[i] - vertices[j]);
            lap[i] += d;
            lap[j] -= d;
            area[t[k]] += a3;
        }
    }
    let mut out = Vec::with_capacity(nv);
    for v in 0..nv {
        if adj[v].len() < 3 && !boundary[v] {
            return Err(Error::InvalidMesh(format!("vertex {v} has valence {}", adj[v].len())));
        }
        let h = (!boundary[v]).then(|| lap[v].dot(&normals[v]) / (2.0 * area[v]));
        let ring: Vec<Vec3> = two_ring(&adj, v).iter().map(|&w| vertices[w]).collect();
        let (k1, k2) = quadric_curvatures(&vertices[v], &normals[v], &ring)?;
        out.push(VertexCurvature { h, k1, k2 });
    }
    Ok(out)
}

pub fn curvature_field(mesh: &TriMeshDrop) -> Result<Vec<VertexCurvature>> {
    curvature_field_of(&mesh.vertices, &mesh.triangles)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvatureStats {
    pub mean: f64,
    pub std: f64,
    /// `std / |mean|`, with `|mean|` floored at `1 / diameter`.
    pub cv: f64,
    pub count: usize,
}

fn dual_areas_of(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Vec<f64> {
    let mut a = vec![0.0; vertices.len()];
    for t in triangles {
        let at = 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(&(vertices[t[2]] - vertices[t[0]])).norm() / 3.0;
        for &v in t {
            a[v] += at;
        }
    }
    a
}

pub fn mean_curvature_stats(field: &[VertexCurvature], diameter: f64) -> Result<MeanCurvatureStats> {
    let hs: Vec<f64> = field.iter().filter_map(|c| c.h).collect();
    if hs.is_empty() {
        return Err(Error::InsufficientData("no interior vertices".into()));
    }
    let n = hs.len() as f64;
    let mean = hs.iter().sum::<f64>() / n;
    let std = (hs.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / n).sqrt();
    Ok(MeanCurvatureStats { mean, std, cv: std / mean.abs().max(1.0 / diameter), count: hs.len() })
}

/// Area-weighted RMS of `|k1 - k2| * radius` over interior vertices.
pub fn umbilicity_rms_of(vertices: &[Vec3], triangles: &[[usize; 3]], field: &[VertexCurvature], radius: f64) -> f64 {
    let boundary = boundary_mask(vertices.len(), triangles);
    let areas = dual_areas_of(vertices, triangles);
    let (mut num, mut den) = (0.0, 0.0);
    for v in 0..vertices.len() {
        if boundary[v] {
            continue;
        }
        let g = (field[v].k1 - field[v].k2) * radius;
        num += areas[v] * g * g;
        den += areas[v];
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Radius used to make curvature gaps dimensionless: the fitted sphere
/// radius, or half the extent for planar fits.
fn fit_radius(fit: &SurfaceFit, points: &[Vec3]) -> f64 {
    match fit {
        SurfaceFit::Sphere(s) => s.radius,
        SurfaceFit::Plane(_) => 0.5 * extent(points),
    }
}

/// Umbilicity gap of an arbitrary oriented surface.
pub fn umbilicity_rms_surface(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Result<f64> {
    let field = curvature_field_of(vertices, triangles)?;
    let fit = fit_sphere(vertices)?;
    Ok(umbilicity_rms_of(vertices, triangles, &field, fit_radius(&fit, vertices)))
}

pub fn umbilicity_rms(mesh: &TriMeshDrop) -> Result<f64> {
    umbilicity_rms_surface(&mesh.vertices, &mesh.triangles)
}

/// Surface normal at `v` from an algebraic sphere fit
/// `a |y|^2 + b . y + c = 0` over the vertex and its 2-ring, oriented like
/// the triangle fan.
fn fitted_normal(mesh: &TriMeshDrop, adj: &[Vec<usize>], fan: &Vec3, v: usize) -> Result<Vec3> {
    let p0 = mesh.vertices[v];
    let ring = k_ring(adj, v, 3);
    if ring.len() < 5 {
        return Err(Error::InsufficientData(format!("boundary fan of vertex {v} too small")));
    }
    let scale = ring.iter().map(|&w| (mesh.vertices[w] - p0).norm()).fold(0.0, f64::max);
    let mut a = DMatrix::zeros(ring.len() + 1, 5);
    for (i, y) in std::iter::once(Vec3::zeros())
        .chain(ring.iter().map(|&w| (mesh.vertices[w] - p0) / scale))
        .enumerate()
    {
        a[(i, 0)] = y.norm_squared();
        a[(i, 1)] = y.x;
        a[(i, 2)] = y.y;
        a[(i, 3)] = y.z;
        a[(i, 4)] = 1.0;
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Consistency("sphere fit SVD".into()))?;
    let k = svd.singular_values.imin();
    let row = vt.row(k);
    let n = Vec3::new(row[1], row[2], row[3]);
    if n.norm() < 1e-12 {
        return Err(Error::Consistency(format!("degenerate fitted normal at vertex {v}")));
    }
    let n = n.normalize();
    Ok(if n.dot(fan) >= 0.0 { n } else { -n })
}

/// Contact angle (within the liquid) at every `OnPlane` vertex, with the
/// plane index.
pub fn contact_angles(mesh: &TriMeshDrop) -> Result<Vec<(usize, usize, f64)>> {
    let adj = mesh.neighbors();
    let normals = mesh.vertex_normals();
    let planes = mesh.support.planes();
    let mut out = Vec::new();
    for v in 0..mesh.vertices.len() {
        if let VertexTag::OnPlane(j) = mesh.tags[v] {
            let nu = fitted_normal(mesh, &adj, &normals[v], v)?;
            let c = nu.dot(&planes[j].normal()).clamp(-1.0, 1.0);
            out.push((v, j, c.acos()));
        }
    }
    Ok(out)
}

/// Largest contact-angle error per support plane.
pub fn measure_contact_angles(mesh: &TriMeshDrop) -> Result<Vec<f64>> {
    let planes = mesh.support.planes();
    let mut worst = vec![0.0f64; planes.len()];
    let mut seen = vec![false; planes.len()];
    for (_, j, g) in contact_angles(mesh)? {
        worst[j] = worst[j].max((g - planes[j].gamma()).abs());
        seen[j] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InsufficientData("a support plane has no contact vertices".into()));
    }
    Ok(worst)
}

/// Unit tangent at `v` of the polyline `samples` (ordered away from `v`),
/// from the fit `q - v = s a + s^2 b` with `s` the chord length.
pub fn polyline_tangent(v: &Vec3, samples: &[Vec3]) -> Result<Vec3> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!("{} samples for a tangent fit", samples.len())));
    }
    let mut m = Matrix2::zeros();
    let mut r = [Vector2::zeros(); 3];
    for q in samples {
        let d = q - v;
        let s = d.norm();
        let basis = Vector2::new(s, s * s);
        m += basis * basis.transpose();
        for k in 0..3 {
            r[k] += basis * d[k];
        }
    }
    let inv = m.try_inverse().ok_or_else(|| Error::InsufficientData("coincident tangent samples".into()))?;
    let a = Vec3::new((inv * r[0])[0], (inv * r[1])[0], (inv * r[2])[0]);
    Ok(a.normalize())
}

/// Angle between two contact polylines leaving `v`, each fitted over its
/// first four samples.
pub fn polyline_vertex_angle(v: &Vec3, side1: &[Vec3], side2: &[Vec3]) -> Result<f64> {
    let t1 = polyline_tangent(v, &side1[..side1.len().min(4)])?;
    let t2 = polyline_tangent(v, &side2[..side2.len().min(4)])?;
    Ok(t1.dot(&t2).clamp(-1.0, 1.0).acos())
}

/// Measured vertex angle at an `OnEdge` boundary vertex.
pub fn measure_vertex_angle(mesh: &TriMeshDrop, vertex: usize) -> Result<f64> {
    if !matches!(mesh.tags[vertex], VertexTag::OnEdge(_)) {
        return Err(Error::domain(format!("vertex {vertex} is not on a support edge")));
    }
    let chains = mesh.contact_chains()?;
    let leaving = chains
        .iter()
        .find(|c| c.vertices[0] == vertex)
        .ok_or_else(|| Error::InvalidMesh(format!("no contact chain leaves vertex {vertex}")))?;
    let arriving = chains
        .iter()
        .find(|c| *c.vertices.last().unwrap() == vertex)
        .ok_or_else(|| Error::InvalidMesh(format!("no contact chain reaches vertex {vertex}")))?;
    let side = |vs: &mut dyn Iterator<Item = &usize>| -> Vec<Vec3> { vs.take(4).map(|&i| mesh.vertices[i]).collect() };
    let n1 = leaving.vertices.len() - 2;
    let n2 = arriving.vertices.len() - 2;
    if n1 < 3 || n2 < 3 {
        return Err(Error::InsufficientData(format!("fewer than three contact samples beside vertex {vertex}")));
    }
    let s1 = side(&mut leaving.vertices[1..=n1].iter());
    let s2 = side(&mut arriving.vertices[1..=n2].iter().rev());
    polyline_vertex_angle(&mesh.vertices[vertex], &s1, &s2)
}

/// Predicted vertex angle on support edge `edge`, when the data are
/// interior to the admissible rectangle.
pub fn predicted_vertex_angle(support: &Support, edge: usize) -> Option<f64> {
    let planes = support.planes();
    let (j, k) = support.edges()[edge].planes;
    let alpha = pair_half_opening(&planes[j].normal(), &planes[k].normal());
    vertex_angle(alpha, planes[j].gamma(), planes[k].gamma()).ok().map(|r| r.two_beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexAngleMeasurement {
    pub vertex: usize,
    pub edge: usize,
    pub measured: f64,
    pub predicted: Option<f64>,
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub mean_curvature: MeanCurvatureStats,
    /// Half the evolver multiplier, the mean curvature it implies.
    pub multiplier_h: f64,
    pub fit: SurfaceFit,
    pub umbilicity_rms: f64,
    /// Largest contact-angle error per plane (radians).
    pub contact_angle_errors: Vec<f64>,
    pub vertex_angles: Vec<VertexAngleMeasurement>,
}

impl DiagnosticsReport {
    /// Flat key/value view used for JSON reports and CSV rows.
    pub fn flat(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("h_mean".to_string(), self.mean_curvature.mean),
            ("h_std".to_string(), self.mean_curvature.std),
            ("h_cv".to_string(), self.mean_curvature.cv),
            ("h_count".to_string(), self.mean_curvature.count as f64),
            ("h_multiplier".to_string(), self.multiplier_h),
        ];
        match self.fit {
            SurfaceFit::Sphere(s) => {
                out.push(("fit_is_plane".into(), 0.0));
                out.push(("fit_rms".into(), s.relative_rms));
                out.push(("fit_radius".into(), s.radius));
            }
            SurfaceFit::Plane(p) => {
                out.push(("fit_is_plane".into(), 1.0));
                out.push(("fit_rms".into(), p.rms));
                out.push(("fit_radius".into(), 0.0));
            }
        }
        out.push(("umbilicity_rms".into(), self.umbilicity_rms));
        for (j, e) in self.contact_angle_errors.iter().enumerate() {
            out.push((format!("contact_angle_error_p{j}"), *e));
        }
        for (k, va) in self.vertex_angles.iter().enumerate() {
            out.push((format!("vertex_angle_{k}"), va.measured));
            out.push((format!("vertex_angle_{k}_predicted"), va.predicted.unwrap_or(0.0)));
            out.push((format!("vertex_angle_{k}_deviation"), va.deviation.unwrap_or(0.0)));
        }
        out
    }
}

/// Full diagnostics of a drop mesh.
pub fn diagnose(mesh: &TriMeshDrop) -> Result<DiagnosticsReport> {
    mesh.validate()?;
    let field = curvature_field(mesh)?;
    let stats = mean_curvature_stats(&field, mesh.diameter())?;
    let fit = fit_sphere(&mesh.vertices)?;
    let umb = umbilicity_rms_of(&mesh.vertices, &mesh.triangles, &field, fit_radius(&fit, &mesh.vertices));
    let contact = measure_contact_angles(mesh)?;
    let mut vertex_angles = Vec::new();
    for v in 0..mesh.vertices.len() {
        if let VertexTag::OnEdge(e) = mesh.tags[v] {
            let measured = measure_vertex_angle(mesh, v)?;
            let predicted = predicted_vertex_angle(&mesh.support, e);
            vertex_angles.push(VertexAngleMeasurement {
                vertex: v,
                edge: e,
                measured,
                predicted,
                deviation: predicted.map(|p| (measured - p).abs()),
            });
        }
    }
    Ok(DiagnosticsReport {
        mean_curvature: stats,
        multiplier_h: 0.5 * mesh.lagrange_h,
        fit,
        umbilicity_rms: umb,
        contact_angle_errors: contact,
        vertex_angles,
    })
}

/// Triangulated graph of `z = f(x, y)` over `[0, a] x [0, b]`, oriented
/// with downward normals.
pub fn graph_surface(a: f64, b: f64, nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let (x, y) = (a * i as f64 / nx as f64, b * j as f64 / ny as f64);
            v.push(Vec3::new(x, y, f(x, y)));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut t = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            t.push([id(i, j), id(i + 1, j + 1), id(i + 1, j)]);
            t.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
        }
    }
    (v, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{wedge_cap, wente_halfcylinder};
    use crate::geom::{TrihedralConfig, WedgeConfig};
    use crate::mesh::{seed_mesh, SeedOptions};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn sphere_samples(c: Vec3, r: f64, n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                let t: f64 = rng.random_range(0.0..2.0 * PI);
                let s = (1.0 - z * z).sqrt();
                c + r * Vec3::new(s * t.cos(), s * t.sin(), z)
            })
            .collect()
    }

    #[test]
    fn sphere_fit_recovers_exact_sphere() {
        let c = Vec3::new(3.0, -1.0, 7.5);
        let pts = sphere_samples(c, 2.0, 200, 1);
        let SurfaceFit::Sphere(f) = fit_sphere(&pts).unwrap() else { panic!("plane") };
        assert!(f.relative_rms < 1e-12);
        assert!((f.radius - 2.0).abs() < 1e-12);
        assert!((f.center - c).norm() < 1e-12);
    }

    #[test]
    fn sphere_fit_rejects_ellipsoid() {
        let pts: Vec<Vec3> = sphere_samples(Vec3::zeros(), 1.0, 400, 2)
            .iter()
            .map(|p| Vec3::new(p.x, p.y, 1.2 * p.z))
            .collect();
        // brute force: best radius for the true center, scanned densely
        let best = (0..2000)
            .map(|k| {
                let r = 0.9 + 0.4 * k as f64 / 2000.0;
                let ss: f64 = pts.iter().map(|p| ((p.norm() - r) / r).powi(2)).sum();
                (ss / pts.len() as f64).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best > 0.03);
        assert!(fit_sphere(&pts).unwrap().rms() > 0.03);
    }

    #[test]
    fn coplanar_points_give_plane_fit() {
        let n = Vec3::new(1.0, 2.0, 2.0) / 3.0;
        let (e1, e2) = tangent_frame(&n);
        let pts: Vec<Vec3> = (0..30).map(|k| 0.7 * n + (k as f64).sin() * e1 + (k as f64 * 0.3).cos() * e2).collect();
        let SurfaceFit::Plane(p) = fit_sphere(&pts).unwrap() else { panic!("sphere") };
        assert!(p.rms < 1e-12);
        assert!((p.normal.dot(&n).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_fit_is_rigid_invariant() {
        let pts: Vec<Vec3> = sphere_samples(Vec3::zeros(), 1.0, 60, 4)
            .iter()
            .map(|p| Vec3::new(p.x, p.y, 1.1 * p.z))
            .collect();
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let t = Vec3::new(5.0, -2.0, 1.0);
        let moved: Vec<Vec3> = pts.iter().map(|p| rot * p + t).collect();
        let scaled: Vec<Vec3> = pts.iter().map(|p| 3.0 * p).collect();
        let (a, b, c) = (fit_sphere(&pts).unwrap(), fit_sphere(&moved).unwrap(), fit_sphere(&scaled).unwrap());
        let (SurfaceFit::Sphere(a), SurfaceFit::Sphere(b), SurfaceFit::Sphere(c)) = (a, b, c) else { panic!() };
        assert!((a.relative_rms - b.relative_rms).abs() < 1e-12);
        assert!((a.radius - b.radius).abs() < 1e-12);
        assert!((rot * a.center + t - b.center).norm() < 1e-12);
        assert!((3.0 * a.radius - c.radius).abs() < 1e-12);
        assert!((a.relative_rms - c.relative_rms).abs() < 1e-12);
    }

    #[test]
    fn octant_curvature_and_contact_angles() {
        let t = TrihedralConfig::orthogonal_octant([FRAC_PI_2; 3]).unwrap();
        let m = seed_mesh(&Support::Trihedral(t), PI / 6.0, 5, &SeedOptions::default()).unwrap();
        let field = curvature_field(&m).unwrap();
        let s = mean_curvature_stats(&field, m.diameter()).unwrap();
        assert!((s.mean - 1.0).abs() < 0.02, "{}", s.mean);
        assert!(s.cv < 1e-2, "{}", s.cv);
        for e in measure_contact_angles(&m).unwrap() {
            assert!(e < 1e-10, "{e}");
        }
        assert!(umbilicity_rms(&m).unwrap() < 2e-2);
    }

    #[test]
    fn planar_mesh_has_zero_curvature() {
        let (v, t) = graph_surface(1.0, 1.0, 12, 12, |x, y| 0.3 * x - 0.2 * y);
        for c in curvature_field_of(&v, &t).unwrap() {
            assert!(c.k1.abs() < 1e-6 && c.k2.abs() < 1e-6);
            if let Some(h) = c.h {
                assert!(h.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn planar_trihedral_contact_angles() {
        let g = (3f64.sqrt() / 3.0).acos();
        let t = TrihedralConfig::orthogonal_octant([g; 3]).unwrap();
        let m = seed_mesh(&Support::Trihedral(t), 1.0, 3, &SeedOptions::default()).unwrap();
        for e in measure_contact_angles(&m).unwrap() {
            assert!(e < 1e-10, "{e}");
        }
    }

    #[test]
    fn half_cylinder_curvatures() {
        let hc = wente_halfcylinder(1.0, 1.0).unwrap();
        let (v, t) = graph_surface(1.0, 1.0, 64, 64, |_, y| hc.height(y));
        let field = curvature_field_of(&v, &t).unwrap();
        let inner: Vec<&VertexCurvature> = field
            .iter()
            .zip(v.iter())
            .filter(|(_, p)| p.y > 0.1 && p.y < 0.9 && p.x > 0.1 && p.x < 0.9)
            .map(|(c, _)| c)
            .collect();
        let n = inner.len() as f64;
        let k1 = inner.iter().map(|c| c.k1).sum::<f64>() / n;
        let k2 = inner.iter().map(|c| c.k2).sum::<f64>() / n;
        let h = inner.iter().map(|c| c.h.unwrap()).sum::<f64>() / n;
        assert!((k1 - 2.0).abs() < 0.06, "{k1}");
        assert!(k2.abs() < 0.06, "{k2}");
        assert!((h - 1.0).abs() < 0.03, "{h}");
    }

    fn dense_cap_angle(alpha: f64, gamma: f64) -> (f64, f64) {
        let w = WedgeConfig::canonical(alpha, gamma, gamma).unwrap();
        let cap = wedge_cap(&w, -1.0).unwrap();
        let v = cap.vertices[0];
        let sides: Vec<Vec<Vec3>> = [w.plane1, w.plane2]
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let d = p.signed_distance(&cap.center);
                let foot = p.project(&cap.center);
                let rho = (cap.radius * cap.radius - d * d).sqrt();
                let t = cap.contact_tangent(p, &v, &w.wall_direction(j));
                let e1 = (v - foot) / rho;
                (1..=4)
                    .map(|k| {
                        let th = 1e-4 * k as f64;
                        foot + rho * (th.cos() * e1 + th.sin() * t)
                    })
                    .collect()
            })
            .collect();
        let measured = polyline_vertex_angle(&v, &sides[0], &sides[1]).unwrap();
        (measured, vertex_angle(alpha, gamma, gamma).unwrap().two_beta)
    }

    #[test]
    fn vertex_angle_of_dense_cap_samples() {
        let (m, p) = dense_cap_angle(FRAC_PI_4, FRAC_PI_2);
        assert!((m - FRAC_PI_2).abs() < 1e-6 && (p - FRAC_PI_2).abs() < 1e-12);
        let (m, p) = dense_cap_angle(FRAC_PI_4, 2.0 * FRAC_PI_3);
        assert!((p - (1.0f64 / 3.0).acos()).abs() < 1e-12);
        assert!((m - p).abs() < 1e-6, "{m} {p}");
    }

    #[test]
    fn wedge_cap_mesh_diagnostics() {
        let w = WedgeConfig::canonical(FRAC_PI_4, 2.0 * FRAC_PI_3, 2.0 * FRAC_PI_3).unwrap();
        let m = seed_mesh(&Support::Wedge(w), 1.0, 5, &SeedOptions::default()).unwrap();
        let r = diagnose(&m).unwrap();
        for e in &r.contact_angle_errors {
            assert!(*e < 0.5f64.to_radians(), "{e}");
        }
        assert_eq!(r.vertex_angles.len(), 2);
        assert!(r.fit.rms() < 1e-12);
    }
}
