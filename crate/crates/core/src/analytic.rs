//! Closed-form capillary surfaces and residual checkers for the constant
//! mean curvature equation.
//!
//! Sign convention: `h_signed` is the mean curvature with respect to the
//! normal pointing out of the enclosed drop, so a ball-shaped drop has
//! `h_signed = -1/R`. With `sigma = sign(h)`, a cap of radius `R` meeting
//! plane `j` in angle `gamma_j` has its center at signed distance
//! `sigma * R * cos(gamma_j)` from that plane.

use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    AdmissibilityTag, Line, PlaneSupport, TrihedralConfig, TrihedralKind, Vec3, WedgeConfig,
    PLANE_PAIRS,
};
use crate::jet::{graph_mean_curvature_operator, Jet2};
use crate::pde::GraphField;

/// Tolerance for the constructed-center consistency assertions.
const CONSTRUCTION_TOL: f64 = 1e-12;

/// Support configuration a cap was constructed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CapSupport {
    Wedge(WedgeConfig),
    Trihedral(TrihedralConfig),
}

impl CapSupport {
    pub fn planes(&self) -> Vec<PlaneSupport> {
        match self {
            CapSupport::Wedge(w) => vec![w.plane1, w.plane2],
            CapSupport::Trihedral(t) => t.planes.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalCap {
    pub center: Vec3,
    pub radius: f64,
    /// Mean curvature with respect to the outward normal of the drop.
    pub h_signed: f64,
    pub support: CapSupport,
    /// Points where the cap boundary meets the edge lines.
    pub vertices: Vec<Vec3>,
    /// The sphere touches an edge line instead of crossing it.
    pub touching: bool,
    /// The sphere passes through the apex of a trihedral support.
    pub degenerate: bool,
    /// Whether the drop region contains the apex (apex supports only).
    pub covers_apex: Option<bool>,
}

impl SphericalCap {
    /// `sign(h)`: `-1` when the drop lies inside the ball.
    pub fn sigma(&self) -> f64 {
        self.h_signed.signum()
    }

    /// The drop is the part of the support region inside the sphere.
    pub fn drop_inside_ball(&self) -> bool {
        self.h_signed < 0.0
    }

    /// Unit normal pointing out of the drop at a point of the sphere.
    pub fn outward_normal(&self, x: &Vec3) -> Vec3 {
        -self.sigma() * (x - self.center).normalize()
    }

    /// Contact angle cosine measured at an actual point of the contact
    /// circle on `plane`, from the sphere normal there.
    pub fn measured_contact_cos(&self, plane: &PlaneSupport) -> Result<f64> {
        let n = plane.normal();
        let d = plane.signed_distance(&self.center);
        let r2 = self.radius * self.radius - d * d;
        if r2 < 0.0 {
            return Err(Error::no_solution("sphere does not meet the plane"));
        }
        let foot = plane.project(&self.center);
        let u = any_orthogonal(&n);
        let x = foot + r2.sqrt() * u;
        Ok(self.outward_normal(&x).dot(&n))
    }

    /// Contact-circle tangent on `plane` at a point `p` of that circle,
    /// oriented by `hint` (positive component along it).
    pub fn contact_tangent(&self, plane: &PlaneSupport, p: &Vec3, hint: &Vec3) -> Vec3 {
        let t = plane.normal().cross(&(p - self.center)).normalize();
        if t.dot(hint) >= 0.0 {
            t
        } else {
            -t
        }
    }

    /// Angle between the two contact circles at a wedge vertex.
    pub fn wedge_vertex_angle(&self, wedge: &WedgeConfig, vertex: &Vec3) -> f64 {
        let t1 = self.contact_tangent(&wedge.plane1, vertex, &wedge.wall_direction(0));
        let t2 = self.contact_tangent(&wedge.plane2, vertex, &wedge.wall_direction(1));
        t1.dot(&t2).clamp(-1.0, 1.0).acos()
    }
}

fn any_orthogonal(n: &Vec3) -> Vec3 {
    let trial = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    n.cross(&trial).normalize()
}

fn check_h(h: f64) -> Result<f64> {
    if !h.is_finite() || h == 0.0 {
        return Err(Error::domain("mean curvature must be finite and nonzero"));
    }
    Ok(1.0 / h.abs())
}

/// Spherical cap in a wedge for data in the interior of `Q` or on the
/// boundary segment shared with `D1`.
///
/// The center lies in the cross-section through `edge_point`. Interior data
/// give two vertices on the edge; boundary data a single touching point,
/// which is admissible for exactly one sign of `h`.
pub fn wedge_cap(config: &WedgeConfig, h: f64) -> Result<SphericalCap> {
    let radius = check_h(h)?;
    let class = config.classify()?;
    match class.tag {
        AdmissibilityTag::InteriorQ | AdmissibilityTag::BoundaryQD1 => {}
        other => {
            return Err(Error::no_solution(format!("wedge data classify as {}", other.label())));
        }
    }
    let sigma = h.signum();
    let (p1, p2) = (&config.plane1, &config.plane2);
    let m = Matrix3::from_rows(&[
        p1.normal().transpose(),
        p2.normal().transpose(),
        config.edge_dir.transpose(),
    ]);
    let rhs = Vec3::new(
        p1.offset() + sigma * radius * p1.beta(),
        p2.offset() + sigma * radius * p2.beta(),
        config.edge_dir.dot(&config.edge_point),
    );
    let center = m.lu().solve(&rhs).ok_or_else(|| Error::domain("degenerate wedge normals"))?;
    let edge = config.edge();
    let foot = edge.project(&center);
    let dist = (center - foot).norm();
    let (vertices, touching) = if class.tag == AdmissibilityTag::InteriorQ {
        let half = radius * radius - dist * dist;
        if half <= 0.0 {
            return Err(Error::Consistency(format!(
                "interior data but sphere misses the edge (distance {dist}, radius {radius})"
            )));
        }
        let s = half.sqrt();
        (vec![foot - s * edge.dir, foot + s * edge.dir], false)
    } else {
        // the ball must sit inside the wedge, touching the edge from within
        let off = center - foot;
        if config.wall_direction(0).dot(&off) <= 0.0 || config.wall_direction(1).dot(&off) <= 0.0 {
            return Err(Error::no_solution("boundary data admit a touching cap only for the opposite sign of h"));
        }
        (vec![foot], true)
    };
    Ok(SphericalCap {
        center,
        radius,
        h_signed: sigma / radius,
        support: CapSupport::Wedge(*config),
        vertices,
        touching,
        degenerate: false,
        covers_apex: None,
    })
}

/// Plane solution with unit normal pointing out of the drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarSolution {
    pub normal: Vec3,
    /// Plane `{x : normal . x = offset}`.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrihedralSolution {
    Cap(SphericalCap),
    Planar(PlanarSolution),
}

fn check_pairs(config: &TrihedralConfig) -> Result<()> {
    for (class, &(j, k)) in config.classify_pairs()?.iter().zip(PLANE_PAIRS.iter()) {
        match class.tag {
            AdmissibilityTag::InteriorQ | AdmissibilityTag::BoundaryQD1 => {}
            other => {
                return Err(Error::no_solution(format!("planes {j},{k}: data classify as {}", other.label())));
            }
        }
    }
    Ok(())
}

/// Closest points of two lines; returns their midpoint and the gap.
fn line_line_intersection(l1: &Line, l2: &Line) -> Result<(Vec3, f64)> {
    let w = l1.point - l2.point;
    let b = l1.dir.dot(&l2.dir);
    let det = 1.0 - b * b;
    if det < 1e-14 {
        return Err(Error::Consistency("center lines are parallel".into()));
    }
    let d = l1.dir.dot(&w);
    let e = l2.dir.dot(&w);
    let s = (b * e - d) / det;
    let t = (e - b * d) / det;
    let q1 = l1.point + s * l1.dir;
    let q2 = l2.point + t * l2.dir;
    Ok((0.5 * (q1 + q2), (q1 - q2).norm()))
}

/// Planes shifted to carry the centers of radius-`radius` spheres that meet
/// the originals in their contact angles.
fn center_planes(config: &TrihedralConfig, sigma: f64, radius: f64) -> Result<[PlaneSupport; 3]> {
    let mut out = config.planes;
    for (o, p) in out.iter_mut().zip(config.planes.iter()) {
        *o = PlaneSupport::new(p.normal(), p.offset() + sigma * radius * p.beta(), p.gamma())?;
    }
    Ok(out)
}

fn assert_center(config: &TrihedralConfig, center: &Vec3, sigma: f64, radius: f64) -> Result<()> {
    for (j, p) in config.planes.iter().enumerate() {
        let err = (p.signed_distance(center) - sigma * radius * p.beta()).abs();
        if err > CONSTRUCTION_TOL * radius.max(1.0) * 10.0 {
            return Err(Error::Consistency(format!("center misses plane {j} constraint by {err:e}")));
        }
    }
    Ok(())
}

/// Spherical cap (or plane when `h = 0`) covering the apex of a trihedral
/// angle, with every adjacent angle pair in `Q` or on its `D1` boundary.
pub fn trihedral_cap(config: &TrihedralConfig, h: f64) -> Result<TrihedralSolution> {
    let apex = match config.kind {
        TrihedralKind::Apex { apex } => apex,
        TrihedralKind::Cylinder { .. } => return Err(Error::domain("trihedral_cap requires an apex configuration")),
    };
    check_pairs(config)?;
    if h == 0.0 {
        return trihedral_plane(config, apex).map(TrihedralSolution::Planar);
    }
    let radius = check_h(h)?;
    let sigma = h.signum();
    let shifted = center_planes(config, sigma, radius)?;
    let l12 = crate::geom::plane_intersection(&shifted[0], &shifted[1])?;
    let l23 = crate::geom::plane_intersection(&shifted[1], &shifted[2])?;
    let (center, gap) = line_line_intersection(&l12, &l23)?;
    if gap > 1e-10 * radius.max(1.0) {
        return Err(Error::Consistency(format!("center lines miss each other by {gap:e}")));
    }
    assert_center(config, &center, sigma, radius)?;
    let dist = (center - apex).norm();
    let degenerate = (dist - radius).abs() <= 1e-10 * radius;
    if degenerate {
        // a sphere through the apex bounds a drop only if some edge ray
        // enters the ball
        let mut inward = false;
        for &(j, k) in PLANE_PAIRS.iter() {
            inward |= config.edge(j, k)?.dir.dot(&(center - apex)) > 1e-12 * radius;
        }
        if !inward {
            return Err(Error::no_solution("the sphere meets the trihedral region only at its apex"));
        }
    }
    let covers_apex = if sigma < 0.0 { dist < radius } else { dist > radius };
    let mut vertices = Vec::new();
    for &(j, k) in PLANE_PAIRS.iter() {
        let edge = config.edge(j, k)?;
        if let Some(t) = first_crossing(&edge, &center, radius) {
            vertices.push(edge.point + t * edge.dir);
        }
    }
    Ok(TrihedralSolution::Cap(SphericalCap {
        center,
        radius,
        h_signed: sigma / radius,
        support: CapSupport::Trihedral(*config),
        vertices,
        touching: false,
        degenerate,
        covers_apex: Some(covers_apex),
    }))
}

/// First nonnegative parameter where the ray `edge` meets the sphere.
fn first_crossing(edge: &Line, center: &Vec3, radius: f64) -> Option<f64> {
    let w = edge.point - center;
    let b = edge.dir.dot(&w);
    let c = w.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    [-b - s, -b + s].into_iter().find(|&t| t >= 0.0)
}

fn trihedral_plane(config: &TrihedralConfig, apex: Vec3) -> Result<PlanarSolution> {
    let n = Matrix3::from_rows(&[
        config.planes[0].normal().transpose(),
        config.planes[1].normal().transpose(),
        config.planes[2].normal().transpose(),
    ]);
    let b = Vec3::new(config.planes[0].beta(), config.planes[1].beta(), config.planes[2].beta());
    let m = n.lu().solve(&b).ok_or_else(|| Error::domain("singular normal matrix"))?;
    let len = m.norm();
    if (len - 1.0).abs() > 1e-10 {
        return Err(Error::no_solution(format!(
            "no plane meets all three walls in the prescribed angles (|m| = {len})"
        )));
    }
    let normal = m / len;
    for &(j, k) in PLANE_PAIRS.iter() {
        if normal.dot(&config.edge(j, k)?.dir) <= 0.0 {
            return Err(Error::no_solution("plane does not cut every edge ray"));
        }
    }
    Ok(PlanarSolution { normal, offset: normal.dot(&apex) + 1.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CylinderSolution {
    Cap(SphericalCap),
    Planar(PlanarSolution),
}

/// Cap spanning a triangular prism with coplanar wall normals.
///
/// The three contact conditions fix both the center in the cross-section
/// and the signed radius, so no curvature is supplied. The center is placed
/// at generator coordinate zero. When the system is singular the solution
/// is planar.
pub fn cylinder_cap(config: &TrihedralConfig) -> Result<CylinderSolution> {
    let generator = match config.kind {
        TrihedralKind::Cylinder { generator, .. } => generator,
        TrihedralKind::Apex { .. } => return Err(Error::domain("cylinder_cap requires a cylinder configuration")),
    };
    check_pairs(config)?;
    let u = any_orthogonal(&generator);
    let v = generator.cross(&u);
    let rows: Vec<_> = config
        .planes
        .iter()
        .map(|p| nalgebra::RowVector3::new(p.normal().dot(&u), p.normal().dot(&v), -p.beta()))
        .collect();
    let m = Matrix3::from_rows(&rows);
    let rhs = Vec3::new(config.planes[0].offset(), config.planes[1].offset(), config.planes[2].offset());
    let scale = config.planes.iter().map(|p| p.offset().abs()).fold(1.0, f64::max);
    if m.determinant().abs() < 1e-12 {
        return cylinder_plane(config, &u, &v, &generator).map(CylinderSolution::Planar);
    }
    let sol = m.lu().solve(&rhs).ok_or_else(|| Error::domain("singular cylinder system"))?;
    let rho = sol[2];
    if rho.abs() < 1e-12 * scale || !rho.is_finite() {
        return cylinder_plane(config, &u, &v, &generator).map(CylinderSolution::Planar);
    }
    let (sigma, radius) = (rho.signum(), rho.abs());
    let center = sol[0] * u + sol[1] * v;
    assert_center(config, &center, sigma, radius)?;
    let mut vertices = Vec::new();
    for &(j, k) in PLANE_PAIRS.iter() {
        let edge = config.edge(j, k)?;
        let p = edge.point - generator.dot(&edge.point) * generator;
        let off2 = radius * radius - (p - center).norm_squared();
        if off2 < 0.0 {
            return Err(Error::no_solution("sphere misses a generator edge"));
        }
        // convex drops are bounded by the upper cap, concave by the lower
        vertices.push(p - sigma * off2.sqrt() * generator);
    }
    Ok(CylinderSolution::Cap(SphericalCap {
        center,
        radius,
        h_signed: sigma / radius,
        support: CapSupport::Trihedral(*config),
        vertices,
        touching: false,
        degenerate: false,
        covers_apex: None,
    }))
}

fn cylinder_plane(config: &TrihedralConfig, u: &Vec3, v: &Vec3, generator: &Vec3) -> Result<PlanarSolution> {
    let a = nalgebra::Matrix3x2::from_rows(&[
        nalgebra::RowVector2::new(config.planes[0].normal().dot(u), config.planes[0].normal().dot(v)),
        nalgebra::RowVector2::new(config.planes[1].normal().dot(u), config.planes[1].normal().dot(v)),
        nalgebra::RowVector2::new(config.planes[2].normal().dot(u), config.planes[2].normal().dot(v)),
    ]);
    let b = Vec3::new(config.planes[0].beta(), config.planes[1].beta(), config.planes[2].beta());
    let ata = a.transpose() * a;
    let xy: Vector2<f64> = ata
        .lu()
        .solve(&(a.transpose() * b))
        .ok_or_else(|| Error::domain("degenerate cross-section"))?;
    if (a * xy - b).amax() > 1e-10 {
        return Err(Error::no_solution("contact data admit neither a cap nor a plane"));
    }
    let w2 = 1.0 - xy.norm_squared();
    if w2 < 0.0 {
        return Err(Error::no_solution("planar normal would exceed unit length"));
    }
    let normal = xy[0] * u + xy[1] * v + w2.sqrt() * generator;
    Ok(PlanarSolution { normal, offset: 0.0 })
}

/// Half-cylinder over the rectangle `[0, a] x [0, b]` with `gamma = 0` on the
/// walls of length `a` and `gamma = pi/2` on those of length `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfCylinderSolution {
    pub a: f64,
    pub b: f64,
    pub axis: Line,
    pub radius: f64,
    pub h: f64,
}

pub fn wente_halfcylinder(a: f64, b: f64) -> Result<HalfCylinderSolution> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::domain("rectangle sides must be positive"));
    }
    Ok(HalfCylinderSolution {
        a,
        b,
        axis: Line { point: Vec3::new(0.0, 0.5 * b, 0.0), dir: Vec3::x() },
        radius: 0.5 * b,
        h: 1.0 / b,
    })
}

impl HalfCylinderSolution {
    pub fn height(&self, y: f64) -> f64 {
        let r = self.radius;
        -(r * r - (y - r) * (y - r)).sqrt()
    }

    fn height_jet(&self, y: f64) -> Jet2 {
        let yj = Jet2::variable(y, 1);
        let r = self.radius;
        let dy = yj - r;
        -(Jet2::constant(r * r) - dy * dy).sqrt()
    }

    /// `div Tu - 2H` evaluated exactly (no discretisation) at `(x, y)`.
    /// The graph does not depend on `x`; it is accepted for symmetry.
    pub fn residual_at(&self, _x: f64, y: f64) -> f64 {
        graph_mean_curvature_operator(&self.height_jet(y)) - 2.0 * self.h
    }

    /// Residuals on an `nx` by `ny` lattice over `0.05 b <= y <= 0.95 b`.
    pub fn band_residuals(&self, nx: usize, ny: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = self.b * (0.05 + 0.9 * j as f64 / (ny.max(2) - 1) as f64);
            for i in 0..nx {
                let x = self.a * i as f64 / (nx.max(2) - 1) as f64;
                out.push(self.residual_at(x, y));
            }
        }
        out
    }
}

/// Residual values on the interior cells of a graph grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorResidual {
    pub nx: usize,
    pub ny: usize,
    /// Row-major over interior cells `(i, j)` with `1 <= i < nx-1`.
    pub values: Vec<f64>,
    /// Sample coordinates: `(x, y)` for graphs, `(theta, phi)` for radial graphs.
    pub coords: Vec<[f64; 2]>,
}

impl InteriorResidual {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max residual over samples whose coordinates satisfy `keep`.
    pub fn max_abs_where(&self, keep: impl Fn(f64, f64) -> bool) -> f64 {
        self.values
            .iter()
            .zip(self.coords.iter())
            .filter(|(_, c)| keep(c[0], c[1]))
            .fold(0.0, |m, (v, _)| m.max(v.abs()))
    }
}

/// `div Tu - 2h` from second-order centered differences; boundary cells
/// are excluded.
pub fn cartesian_cmc_residual(u: &GraphField, h: f64) -> Result<InteriorResidual> {
    let (nx, ny) = (u.nx, u.ny);
    if nx < 3 || ny < 3 {
        return Err(Error::domain("graph grid needs at least 3 cells per axis"));
    }
    let (dx, dy) = (u.dx, u.dy);
    let at = |i: usize, j: usize| u.values[j * nx + i];
    let mut values = Vec::with_capacity((nx - 2) * (ny - 2));
    let mut coords = Vec::with_capacity((nx - 2) * (ny - 2));
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let (x, y) = u.center(i, j);
            coords.push([x, y]);
            let ux = (at(i + 1, j) - at(i - 1, j)) / (2.0 * dx);
            let uy = (at(i, j + 1) - at(i, j - 1)) / (2.0 * dy);
            let uxx = (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (dx * dx);
            let uyy = (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / (dy * dy);
            let uxy = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * dx * dy);
            let w2 = 1.0 + ux * ux + uy * uy;
            let div = ((1.0 + uy * uy) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux * ux) * uyy) / (w2 * w2.sqrt());
            values.push(div - 2.0 * h);
        }
    }
    Ok(InteriorResidual { nx: nx - 2, ny: ny - 2, values, coords })
}

/// Radial graph `r = u(theta, phi)` sampled on a node lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalGraphField {
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta0: f64,
    pub dtheta: f64,
    pub phi0: f64,
    pub dphi: f64,
    /// The theta direction wraps around (`n_theta * dtheta = 2 pi`).
    pub theta_periodic: bool,
    /// Row-major `values[j * n_theta + i]` at `(theta0 + i dtheta, phi0 + j dphi)`.
    pub values: Vec<f64>,
    pub h: f64,
}

impl SphericalGraphField {
    /// Samples `f` on a grid covering `phi in [phi_min, phi_max]` and the
    /// full circle in theta.
    pub fn sample_periodic(
        n_theta: usize,
        n_phi: usize,
        phi_min: f64,
        phi_max: f64,
        h: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
        let dphi = (phi_max - phi_min) / (n_phi - 1) as f64;
        let mut values = Vec::with_capacity(n_theta * n_phi);
        for j in 0..n_phi {
            for i in 0..n_theta {
                values.push(f(i as f64 * dtheta, phi_min + j as f64 * dphi));
            }
        }
        Self { n_theta, n_phi, theta0: 0.0, dtheta, phi0: phi_min, dphi, theta_periodic: true, values, h }
    }

    pub fn phi(&self, j: usize) -> f64 {
        self.phi0 + j as f64 * self.dphi
    }

    /// `W = sqrt((u^2 + u_phi^2) sin^2 phi + u_theta^2)`.
    pub fn w(u: f64, u_theta: f64, u_phi: f64, phi: f64) -> f64 {
        let s = phi.sin();
        ((u * u + u_phi * u_phi) * s * s + u_theta * u_theta).sqrt()
    }
}

/// Residual of the spherical-coordinate constant mean curvature equation
/// `d_theta(u_theta/W) + d_phi(u_phi sin^2 phi / W) - 2 (sin phi / W + H) u sin phi`
/// on interior nodes, with conservative half-point fluxes.
///
/// The output is row-major over interior phi rows `1..n_phi-1` and over all
/// theta columns when periodic, else `1..n_theta-1`.
pub fn spherical_cmc_residual(field: &SphericalGraphField) -> Result<InteriorResidual> {
    let (nt, np) = (field.n_theta, field.n_phi);
    if np < 3 || nt < 3 || field.values.len() != nt * np {
        return Err(Error::domain("spherical grid needs at least 3 nodes per axis"));
    }
    let pi = std::f64::consts::PI;
    let phi_lo = field.phi0;
    let phi_hi = field.phi(np - 1);
    if phi_lo < field.dphi - 1e-15 || phi_hi > pi - field.dphi + 1e-15 {
        return Err(Error::domain("spherical grid must stay at least one cell away from the poles"));
    }
    let (dt, dp) = (field.dtheta, field.dphi);
    let wrap = |i: isize| -> usize {
        if field.theta_periodic {
            i.rem_euclid(nt as isize) as usize
        } else {
            i as usize
        }
    };
    let u = |i: isize, j: usize| field.values[j * nt + wrap(i)];
    let (i_lo, i_hi) = if field.theta_periodic { (0, nt as isize) } else { (1, nt as isize - 1) };
    let mut values = Vec::new();
    let mut coords = Vec::new();
    for j in 1..np - 1 {
        let phi = field.phi(j);
        for i in i_lo..i_hi {
            coords.push([field.theta0 + i as f64 * dt, phi]);
            // theta flux at (i +- 1/2, j)
            let flux_t = |a: isize| {
                let ut = (u(a + 1, j) - u(a, j)) / dt;
                let um = 0.5 * (u(a + 1, j) + u(a, j));
                let up = 0.25 * (u(a + 1, j + 1) + u(a, j + 1) - u(a + 1, j - 1) - u(a, j - 1)) / dp;
                ut / SphericalGraphField::w(um, ut, up, phi)
            };
            // phi flux at (i, j +- 1/2)
            let flux_p = |b: usize| {
                let ph = field.phi0 + (b as f64 + 0.5) * dp;
                let up = (u(i, b + 1) - u(i, b)) / dp;
                let um = 0.5 * (u(i, b + 1) + u(i, b));
                let ut = 0.25 * (u(i + 1, b + 1) + u(i + 1, b) - u(i - 1, b + 1) - u(i - 1, b)) / dt;
                let s = ph.sin();
                up * s * s / SphericalGraphField::w(um, ut, up, ph)
            };
            let div = (flux_t(i) - flux_t(i - 1)) / dt + (flux_p(j) - flux_p(j - 1)) / dp;
            let uc = u(i, j);
            let ut = (u(i + 1, j) - u(i - 1, j)) / (2.0 * dt);
            let up = (u(i, j + 1) - u(i, j - 1)) / (2.0 * dp);
            let w = SphericalGraphField::w(uc, ut, up, phi);
            let s = phi.sin();
            values.push(div - 2.0 * (s / w + field.h) * uc * s);
        }
    }
    let nx = (i_hi - i_lo) as usize;
    Ok(InteriorResidual { nx, ny: np - 2, values, coords })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn cap(sol: TrihedralSolution) -> SphericalCap {
        match sol {
            TrihedralSolution::Cap(c) => c,
            TrihedralSolution::Planar(_) => panic!("expected a cap"),
        }
    }

    #[test]
    fn right_wedge_orthogonal_cap() {
        let w = WedgeConfig::canonical(FRAC_PI_4, FRAC_PI_2, FRAC_PI_2).unwrap();
        let c = wedge_cap(&w, 1.0).unwrap();
        assert!(c.center.norm() < 1e-15);
        assert_eq!(c.radius, 1.0);
        assert_eq!(c.vertices.len(), 2);
        assert!((c.vertices[0] + Vec3::z()).norm() < 1e-15);
        assert!((c.vertices[1] - Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn right_wedge_vertex_angle() {
        let g = 2.0 * FRAC_PI_3;
        let w = WedgeConfig::canonical(FRAC_PI_4, g, g).unwrap();
        let c = wedge_cap(&w, -1.0).unwrap();
        for v in &c.vertices {
            assert!((c.wedge_vertex_angle(&w, v) - (1.0f64 / 3.0).acos()).abs() < 1e-12);
        }
        for p in [&w.plane1, &w.plane2] {
            assert!((c.measured_contact_cos(p).unwrap() - g.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn wedge_cap_rejects_d1() {
        let w = WedgeConfig::canonical(PI / 6.0, 0.2, 0.2).unwrap();
        assert!(matches!(wedge_cap(&w, 1.0), Err(Error::NoSolution(_))));
        assert!(matches!(wedge_cap(&w, -1.0), Err(Error::NoSolution(_))));
    }

    #[test]
    fn wedge_boundary_touches_for_one_sign() {
        let a = 0.5;
        // sum band tight from below: gamma1 + gamma2 = pi - 2a
        let g = 0.5 * (PI - 2.0 * a);
        let w = WedgeConfig::canonical(a, g, g).unwrap();
        let c = wedge_cap(&w, 1.0).unwrap();
        assert!(c.touching);
        assert_eq!(c.vertices.len(), 1);
        assert!(wedge_cap(&w, -1.0).is_err());
        // tight from above
        let g = 0.5 * (PI + 2.0 * a);
        let w = WedgeConfig::canonical(a, g, g).unwrap();
        assert!(wedge_cap(&w, -1.0).unwrap().touching);
        assert!(wedge_cap(&w, 1.0).is_err());
    }

    #[test]
    fn octant_caps() {
        let t = TrihedralConfig::orthogonal_octant([FRAC_PI_2; 3]).unwrap();
        let c = cap(trihedral_cap(&t, -1.0).unwrap());
        assert!(c.center.norm() < 1e-15);
        assert_eq!(c.vertices.len(), 3);
        assert!(!c.degenerate);
        assert_eq!(c.covers_apex, Some(true));

        let g = 1.1f64;
        let t = TrihedralConfig::orthogonal_octant([g; 3]).unwrap();
        let c = cap(trihedral_cap(&t, 0.5).unwrap());
        let rc = 2.0 * g.cos();
        assert!((c.center - Vec3::new(rc, rc, rc)).norm() < 1e-12);
        for p in &t.planes {
            assert!((c.measured_contact_cos(p).unwrap() - g.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn octant_degenerate_and_planar() {
        let g = (3f64.sqrt() / 3.0).acos();
        let t = TrihedralConfig::orthogonal_octant([g; 3]).unwrap();
        assert!(cap(trihedral_cap(&t, 1.0).unwrap()).degenerate);
        assert!(matches!(trihedral_cap(&t, -1.0), Err(Error::NoSolution(_))));
        let mirrored = TrihedralConfig::orthogonal_octant([PI - g; 3]).unwrap();
        assert!(cap(trihedral_cap(&mirrored, -1.0).unwrap()).degenerate);
        assert!(matches!(trihedral_cap(&mirrored, 1.0), Err(Error::NoSolution(_))));
        match trihedral_cap(&t, 0.0).unwrap() {
            TrihedralSolution::Planar(p) => {
                assert!((p.normal - Vec3::new(1.0, 1.0, 1.0) / 3f64.sqrt()).norm() < 1e-12);
            }
            _ => panic!("expected planar solution"),
        }
        let t = TrihedralConfig::orthogonal_octant([1.0; 3]).unwrap();
        assert!(matches!(trihedral_cap(&t, 0.0), Err(Error::NoSolution(_))));
        assert!(!cap(trihedral_cap(&t, 1.0).unwrap()).degenerate);
    }

    #[test]
    fn scaling_covariance() {
        let planes = [
            PlaneSupport::new(Vec3::new(1.0, 0.1, 0.0), 0.3, 1.4).unwrap(),
            PlaneSupport::new(Vec3::new(0.0, 1.0, 0.2), -0.1, 1.7).unwrap(),
            PlaneSupport::new(Vec3::new(0.1, 0.0, 1.0), 0.2, 1.9).unwrap(),
        ];
        let t = TrihedralConfig::apex(planes).unwrap();
        let c1 = cap(trihedral_cap(&t, -0.7).unwrap());
        let scaled = planes.map(|p| p.transformed(2.0, &Vec3::zeros()));
        let t2 = TrihedralConfig::apex(scaled).unwrap();
        let c2 = cap(trihedral_cap(&t2, -0.35).unwrap());
        assert!((c2.center - 2.0 * c1.center).norm() <= 1e-12 * c2.center.norm().max(1.0));
        assert!((c2.radius - 2.0 * c1.radius).abs() <= 1e-12);
    }

    #[test]
    fn equilateral_prism_caps() {
        let r = 0.7;
        // R cos gamma = r: concave meniscus centered on the axis
        let g = 1.2f64;
        let p = TrihedralConfig::equilateral_prism(r, [g; 3], -1.0).unwrap();
        match cylinder_cap(&p).unwrap() {
            CylinderSolution::Cap(c) => {
                assert!(c.center.norm() < 1e-12);
                assert!((c.radius - r / g.cos()).abs() < 1e-12);
                assert!(c.h_signed > 0.0);
                for pl in &p.planes {
                    assert!((c.measured_contact_cos(pl).unwrap() - g.cos()).abs() < 1e-12);
                }
                assert_eq!(c.vertices.len(), 3);
                assert!(c.vertices.iter().all(|v| v.z < 0.0));
            }
            _ => panic!("expected cap"),
        }
        let p = TrihedralConfig::equilateral_prism(r, [0.6 * PI; 3], -1.0).unwrap();
        match cylinder_cap(&p).unwrap() {
            CylinderSolution::Cap(c) => {
                assert!(c.h_signed < 0.0);
                assert!(c.vertices.iter().all(|v| v.z > 0.0));
            }
            _ => panic!("expected cap"),
        }
        let p = TrihedralConfig::equilateral_prism(r, [FRAC_PI_2; 3], -1.0).unwrap();
        match cylinder_cap(&p).unwrap() {
            CylinderSolution::Planar(pl) => assert!((pl.normal - Vec3::z()).norm() < 1e-12),
            _ => panic!("expected planar"),
        }
        let p = TrihedralConfig::equilateral_prism(r, [0.3; 3], -1.0).unwrap();
        assert!(matches!(cylinder_cap(&p), Err(Error::NoSolution(_))));
    }

    #[test]
    fn halfcylinder_examples() {
        let s = wente_halfcylinder(1.0, 1.0).unwrap();
        assert_eq!((s.radius, s.h), (0.5, 1.0));
        let s = wente_halfcylinder(3.0, 2.0).unwrap();
        assert_eq!((s.radius, s.h), (1.0, 0.5));
        assert!(s.band_residuals(7, 41).iter().all(|r| r.abs() < 1e-10));
        assert!(wente_halfcylinder(0.0, 1.0).is_err());
    }

    #[test]
    fn cartesian_residual_constant_and_cap() {
        let f = GraphField::sample(1.0, 1.0, 8, 8, |_, _| 3.0);
        assert!(cartesian_cmc_residual(&f, 0.0).unwrap().max_abs() == 0.0);
        let cap = |x: f64, y: f64| -(1.0 - (x - 0.5).powi(2) - (y - 0.5).powi(2)).sqrt();
        // the corner cells approach the steepest part of the cap as the grid
        // refines, so the order is read on a fixed inner square
        let inner = |x: f64, y: f64| (0.1..=0.9).contains(&x) && (0.1..=0.9).contains(&y);
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let r = cartesian_cmc_residual(&GraphField::sample(1.0, 1.0, n, n, cap), 1.0).unwrap();
                assert!(r.max_abs() < 2.0 / (n * n) as f64);
                r.max_abs_where(inner)
            })
            .collect();
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order > 1.9, "order {order}, errors {errs:?}");
        assert!(GraphField::sample(1.0, 1.0, 2, 8, cap).nx == 2);
        assert!(cartesian_cmc_residual(&GraphField::sample(1.0, 1.0, 2, 8, cap), 1.0).is_err());
    }

    #[test]
    fn spherical_residual_constant() {
        let r = 1.7;
        let f = SphericalGraphField::sample_periodic(24, 20, 0.2, PI - 0.2, -1.0 / r, |_, _| r);
        assert!(spherical_cmc_residual(&f).unwrap().max_abs() < 1e-12);
        let f0 = SphericalGraphField { h: 0.0, ..f.clone() };
        let res = spherical_cmc_residual(&f0).unwrap();
        for (k, v) in res.values.iter().enumerate() {
            let phi = f0.phi(1 + k / res.nx);
            assert!((v + 2.0 * phi.sin()).abs() < 1e-12);
        }
        let bad = SphericalGraphField::sample_periodic(24, 20, 0.01, PI - 0.2, 0.0, |_, _| r);
        assert!(spherical_cmc_residual(&bad).is_err());
    }

    #[test]
    fn spherical_residual_off_center_sphere_converges() {
        let (r, z0) = (1.0, 0.3);
        let u = move |_: f64, phi: f64| z0 * phi.cos() + (r * r - z0 * z0 * phi.sin().powi(2)).sqrt();
        let errs: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&n| {
                let f = SphericalGraphField::sample_periodic(n, n, 0.3, PI - 0.3, -1.0 / r, u);
                spherical_cmc_residual(&f).unwrap().max_abs()
            })
            .collect();
        assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
        assert!((errs[1] / errs[2]).log2() > 1.8, "{errs:?}");
    }
}
