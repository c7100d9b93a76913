//! Plane supports, wedge and trihedral configurations, contact-angle data
//! classification and the vertex-angle formulas.
//!
//! Angles `gamma` are contact angles measured inside the liquid, in radians.
//! A wedge has full opening `2 * alpha` with `0 < alpha < pi/2`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance on unit-vector normalisation and orthogonality checks.
pub const UNIT_TOL: f64 = 1e-12;

/// Default width (radians) of the boundary band around the rectangle `Q`.
pub const DEFAULT_BOUNDARY_BAND: f64 = 1e-9;

/// Tolerance on the vertex-numerator sign cross-check.
const NUMERATOR_TOL: f64 = 1e-10;

/// Oriented support plane `{x : normal . x = offset}` with its contact angle.
///
/// The normal points into the region accessible to the drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneSupport {
    normal: Vec3,
    offset: f64,
    gamma: f64,
}

impl PlaneSupport {
    /// Builds a plane from a (not necessarily unit) normal. The normal and
    /// offset are rescaled together so the stored normal has unit length.
    pub fn new(normal: Vec3, offset: f64, gamma: f64) -> Result<Self> {
        let len = normal.norm();
        if !len.is_finite() || len < 1e-300 {
            return Err(Error::domain("plane normal must be a nonzero finite vector"));
        }
        if !(0.0..=PI).contains(&gamma) {
            return Err(Error::domain(format!("contact angle {gamma} outside [0, pi]")));
        }
        Ok(Self { normal: normal / len, offset: offset / len, gamma })
    }

    pub fn through_point(normal: Vec3, point: Vec3, gamma: f64) -> Result<Self> {
        let len = normal.norm();
        if len < 1e-300 {
            return Err(Error::domain("plane normal must be nonzero"));
        }
        Self::new(normal / len, (normal / len).dot(&point), gamma)
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Wetting coefficient `cos gamma`.
    pub fn beta(&self) -> f64 {
        self.gamma.cos()
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.normal, self.offset, gamma)
    }

    /// Signed distance, positive on the drop side.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.signed_distance(p) * self.normal
    }

    /// Copy translated by `t` and scaled about the origin by `scale`.
    pub fn transformed(&self, scale: f64, t: &Vec3) -> Self {
        Self { normal: self.normal, offset: scale * self.offset + self.normal.dot(t), gamma: self.gamma }
    }
}

/// Straight line `point + s * dir` with unit `dir`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub point: Vec3,
    pub dir: Vec3,
}

impl Line {
    pub fn project(&self, p: &Vec3) -> Vec3 {
        self.point + (p - self.point).dot(&self.dir) * self.dir
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        (p - self.project(p)).norm()
    }
}

/// Intersection line of two non-parallel planes.
pub fn plane_intersection(p1: &PlaneSupport, p2: &PlaneSupport) -> Result<Line> {
    let (n1, n2) = (p1.normal, p2.normal);
    let dir = n1.cross(&n2);
    let s = dir.norm();
    if s < 1e-9 {
        return Err(Error::domain("planes are parallel"));
    }
    let dir = dir / s;
    // minimum-norm point on both planes
    let c = n1.dot(&n2);
    let det = 1.0 - c * c;
    let a = (p1.offset - c * p2.offset) / det;
    let b = (p2.offset - c * p1.offset) / det;
    Ok(Line { point: a * n1 + b * n2, dir })
}

/// Two half-planes meeting along the line `L` with opening `2 * alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeConfig {
    pub plane1: PlaneSupport,
    pub plane2: PlaneSupport,
    pub alpha: f64,
    pub edge_point: Vec3,
    pub edge_dir: Vec3,
}

impl WedgeConfig {
    /// Canonical wedge: edge along `+z` through the origin, bisector along
    /// `+x`, wall 1 at polar angle `+alpha`, wall 2 at `-alpha`.
    pub fn canonical(alpha: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let (s, c) = alpha.sin_cos();
        let plane1 = PlaneSupport::new(Vec3::new(s, -c, 0.0), 0.0, gamma1)?;
        let plane2 = PlaneSupport::new(Vec3::new(s, c, 0.0), 0.0, gamma2)?;
        Ok(Self { plane1, plane2, alpha, edge_point: Vec3::zeros(), edge_dir: Vec3::z() })
    }

    /// Wedge bounded by two arbitrary non-parallel planes.
    pub fn from_planes(plane1: PlaneSupport, plane2: PlaneSupport) -> Result<Self> {
        let line = plane_intersection(&plane1, &plane2)?;
        let alpha = pair_half_opening(&plane1.normal, &plane2.normal);
        check_alpha(alpha)?;
        let w = Self { plane1, plane2, alpha, edge_point: line.point, edge_dir: line.dir };
        w.check()?;
        Ok(w)
    }

    fn check(&self) -> Result<()> {
        let between = self.plane1.normal.dot(&self.plane2.normal).clamp(-1.0, 1.0).acos();
        if (between - (PI - 2.0 * self.alpha)).abs() > UNIT_TOL {
            return Err(Error::domain("wedge normals inconsistent with opening angle"));
        }
        if self.edge_dir.dot(&self.plane1.normal).abs() > UNIT_TOL
            || self.edge_dir.dot(&self.plane2.normal).abs() > UNIT_TOL
        {
            return Err(Error::domain("edge direction not orthogonal to both normals"));
        }
        Ok(())
    }

    pub fn plane(&self, j: usize) -> &PlaneSupport {
        match j {
            0 => &self.plane1,
            _ => &self.plane2,
        }
    }

    pub fn gammas(&self) -> (f64, f64) {
        (self.plane1.gamma, self.plane2.gamma)
    }

    pub fn edge(&self) -> Line {
        Line { point: self.edge_point, dir: self.edge_dir }
    }

    /// In-plane unit direction perpendicular to the edge pointing into the
    /// wall half-plane `j` (0 or 1).
    pub fn wall_direction(&self, j: usize) -> Vec3 {
        let (this, other) = if j == 0 { (&self.plane1, &self.plane2) } else { (&self.plane2, &self.plane1) };
        let w = this.normal.cross(&self.edge_dir).normalize();
        if w.dot(&other.normal) > 0.0 {
            w
        } else {
            -w
        }
    }

    pub fn classify(&self) -> Result<AdmissibilityClass> {
        classify_data(self.alpha, self.plane1.gamma, self.plane2.gamma)
    }
}

/// Closure of a three-plane support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrihedralKind {
    /// The three planes meet in the single point `apex`.
    Apex { apex: Vec3 },
    /// The normals are coplanar; the planes are the side walls of a prism
    /// along `generator`, closed below by the base `generator . x = base`.
    Cylinder { generator: Vec3, base: f64 },
}

/// Three support planes forming a trihedral angle or a triangular prism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrihedralConfig {
    pub planes: [PlaneSupport; 3],
    pub kind: TrihedralKind,
}

/// Index pairs of adjacent planes, in the order the edges are reported.
pub const PLANE_PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

impl TrihedralConfig {
    pub fn apex(planes: [PlaneSupport; 3]) -> Result<Self> {
        check_not_parallel(&planes)?;
        let m = normal_matrix(&planes);
        if m.determinant().abs() < 1e-10 {
            return Err(Error::domain("apex configuration requires independent normals"));
        }
        let rhs = Vec3::new(planes[0].offset, planes[1].offset, planes[2].offset);
        let apex = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::domain("planes do not meet in a single point"))?;
        Ok(Self { planes, kind: TrihedralKind::Apex { apex } })
    }

    pub fn cylinder(planes: [PlaneSupport; 3], base: f64) -> Result<Self> {
        check_not_parallel(&planes)?;
        if normal_matrix(&planes).determinant().abs() > 1e-10 {
            return Err(Error::domain("cylinder configuration requires coplanar normals"));
        }
        // the drop lies on the side generator . x > base
        let generator = planes[0].normal.cross(&planes[1].normal).normalize();
        Ok(Self { planes, kind: TrihedralKind::Cylinder { generator, base } })
    }

    /// The three coordinate planes bounding the positive octant.
    pub fn orthogonal_octant(gammas: [f64; 3]) -> Result<Self> {
        let planes = [
            PlaneSupport::new(Vec3::x(), 0.0, gammas[0])?,
            PlaneSupport::new(Vec3::y(), 0.0, gammas[1])?,
            PlaneSupport::new(Vec3::z(), 0.0, gammas[2])?,
        ];
        Self::apex(planes)
    }

    /// Prism along `+z` whose cross-section is an equilateral triangle with
    /// the given inradius, incenter on the `z` axis.
    pub fn equilateral_prism(inradius: f64, gammas: [f64; 3], base: f64) -> Result<Self> {
        if inradius <= 0.0 {
            return Err(Error::domain("inradius must be positive"));
        }
        let mut planes = [PlaneSupport::new(Vec3::x(), 0.0, FRAC_PI_2)?; 3];
        for (k, plane) in planes.iter_mut().enumerate() {
            let phi = FRAC_PI_2 + 2.0 * PI * k as f64 / 3.0;
            // outward wall direction is (cos, sin); inward normal is its negative
            let n = -Vec3::new(phi.cos(), phi.sin(), 0.0);
            *plane = PlaneSupport::new(n, -inradius, gammas[k])?;
        }
        Self::cylinder(planes, base)
    }

    pub fn gammas(&self) -> [f64; 3] {
        [self.planes[0].gamma, self.planes[1].gamma, self.planes[2].gamma]
    }

    /// Half-opening of the wedge formed by planes `j` and `k`.
    pub fn pair_alpha(&self, j: usize, k: usize) -> f64 {
        pair_half_opening(&self.planes[j].normal, &self.planes[k].normal)
    }

    /// Edge line shared by planes `j` and `k`, oriented along the edge ray
    /// of the accessible region (apex kind) or along the generator.
    pub fn edge(&self, j: usize, k: usize) -> Result<Line> {
        let mut line = plane_intersection(&self.planes[j], &self.planes[k])?;
        match self.kind {
            TrihedralKind::Apex { apex } => {
                let l = 3 - j - k;
                line.point = apex;
                if line.dir.dot(&self.planes[l].normal) < 0.0 {
                    line.dir = -line.dir;
                }
            }
            TrihedralKind::Cylinder { generator, .. } => {
                line.dir = generator;
            }
        }
        Ok(line)
    }

    /// Classification of each adjacent angle pair, in [`PLANE_PAIRS`] order.
    pub fn classify_pairs(&self) -> Result<[AdmissibilityClass; 3]> {
        let mut out = [AdmissibilityClass { tag: AdmissibilityTag::Corner, numerator: 0.0 }; 3];
        for (slot, &(j, k)) in out.iter_mut().zip(PLANE_PAIRS.iter()) {
            *slot = classify_data(self.pair_alpha(j, k), self.planes[j].gamma, self.planes[k].gamma)?;
        }
        Ok(out)
    }
}

fn normal_matrix(planes: &[PlaneSupport; 3]) -> Matrix3<f64> {
    Matrix3::from_rows(&[
        planes[0].normal.transpose(),
        planes[1].normal.transpose(),
        planes[2].normal.transpose(),
    ])
}

fn check_not_parallel(planes: &[PlaneSupport; 3]) -> Result<()> {
    for &(j, k) in PLANE_PAIRS.iter() {
        if planes[j].normal.cross(&planes[k].normal).norm() < 1e-9 {
            return Err(Error::domain(format!("planes {j} and {k} are parallel")));
        }
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(Error::domain(format!("half-opening {alpha} outside (0, pi/2)")));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=PI).contains(&gamma) {
        return Err(Error::domain(format!("contact angle {gamma} outside [0, pi]")));
    }
    Ok(())
}

/// Half-opening of the wedge bounded by planes with inward normals `n1`, `n2`.
pub fn pair_half_opening(n1: &Vec3, n2: &Vec3) -> f64 {
    0.5 * (PI - n1.dot(n2).clamp(-1.0, 1.0).acos())
}

/// Position of contact-angle data relative to the rectangle `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdmissibilityTag {
    InteriorQ,
    /// On the open boundary segment shared with a `D1` domain.
    BoundaryQD1,
    /// On the open boundary segment shared with a `D2` domain.
    BoundaryQD2,
    /// Both bands tight simultaneously.
    Corner,
    D1,
    D2,
}

impl AdmissibilityTag {
    pub fn label(&self) -> &'static str {
        match self {
            AdmissibilityTag::InteriorQ => "InteriorQ",
            AdmissibilityTag::BoundaryQD1 => "BoundaryQ_D1",
            AdmissibilityTag::BoundaryQD2 => "BoundaryQ_D2",
            AdmissibilityTag::Corner => "Corner",
            AdmissibilityTag::D1 => "D1",
            AdmissibilityTag::D2 => "D2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityClass {
    pub tag: AdmissibilityTag,
    /// `sin^2 2a - (B1^2 + B2^2 + 2 B1 B2 cos 2a)` with `Bj = cos gamma_j`.
    pub numerator: f64,
}

/// `cos(g1 + g2) + cos 2a` and `cos(g1 - g2) + cos 2a` as products of
/// cosines, accurate to relative round-off even where they vanish.
fn band_factors(alpha: f64, gamma1: f64, gamma2: f64) -> (f64, f64) {
    let (s, d) = (gamma1 + gamma2, gamma1 - gamma2);
    let p = 2.0 * (0.5 * s + alpha).cos() * (0.5 * s - alpha).cos();
    let m = 2.0 * (0.5 * d + alpha).cos() * (0.5 * d - alpha).cos();
    (p, m)
}

/// Numerator of the `sin^2 2 beta` formula,
/// `sin^2 2a - (B1^2 + B2^2 + 2 B1 B2 cos 2a)`, evaluated in the factored
/// form `-(cos(g1 + g2) + cos 2a)(cos(g1 - g2) + cos 2a)`.
pub fn vertex_numerator(alpha: f64, gamma1: f64, gamma2: f64) -> f64 {
    let (p, m) = band_factors(alpha, gamma1, gamma2);
    -(p * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Band {
    Inside,
    Tight,
    Outside,
}

fn band_state(gap: f64, band: f64) -> Band {
    if gap > band {
        Band::Inside
    } else if gap < -band {
        Band::Outside
    } else {
        Band::Tight
    }
}

/// Classifies `(gamma1, gamma2)` against the rectangle `Q` of a wedge with
/// half-opening `alpha`, using the default boundary band.
pub fn classify_data(alpha: f64, gamma1: f64, gamma2: f64) -> Result<AdmissibilityClass> {
    classify_data_with_band(alpha, gamma1, gamma2, DEFAULT_BOUNDARY_BAND)
}

/// Classification with an explicit boundary band (radians).
///
/// The decision is made by the closed-form bands `|g1 + g2 - pi| < 2a` and
/// `|g1 - g2| < pi - 2a`; the sign of [`vertex_numerator`] is checked against
/// it and a disagreement outside the band is reported as an error.
pub fn classify_data_with_band(alpha: f64, gamma1: f64, gamma2: f64, band: f64) -> Result<AdmissibilityClass> {
    check_alpha(alpha)?;
    check_gamma(gamma1)?;
    check_gamma(gamma2)?;
    let sum_gap = 2.0 * alpha - (gamma1 + gamma2 - PI).abs();
    let diff_gap = (PI - 2.0 * alpha) - (gamma1 - gamma2).abs();
    let tag = match (band_state(sum_gap, band), band_state(diff_gap, band)) {
        (Band::Inside, Band::Inside) => AdmissibilityTag::InteriorQ,
        (Band::Tight, Band::Tight) => AdmissibilityTag::Corner,
        (Band::Tight, Band::Inside) => AdmissibilityTag::BoundaryQD1,
        (Band::Inside, Band::Tight) => AdmissibilityTag::BoundaryQD2,
        (Band::Outside, _) => AdmissibilityTag::D1,
        (_, Band::Outside) => AdmissibilityTag::D2,
    };
    let numerator = vertex_numerator(alpha, gamma1, gamma2);
    let disagree = match tag {
        AdmissibilityTag::InteriorQ => numerator < -NUMERATOR_TOL,
        AdmissibilityTag::D1 | AdmissibilityTag::D2 => numerator > NUMERATOR_TOL,
        _ => false,
    };
    if disagree {
        return Err(Error::Consistency(format!(
            "numerator {numerator:e} disagrees with class {} at alpha={alpha}, gammas=({gamma1}, {gamma2})",
            tag.label()
        )));
    }
    Ok(AdmissibilityClass { tag, numerator })
}

/// Angle `2 beta` between the two contact lines at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexAngleResult {
    pub two_beta: f64,
    pub cos_two_beta: f64,
    /// Evaluated independently from the numerator formula.
    pub sin_sq_two_beta: f64,
}

/// Vertex angle for data interior to `Q`.
///
/// `cos 2b = (B1 B2 + cos 2a) / (sqrt(1 - B1^2) sqrt(1 - B2^2))`, principal
/// branch in `(0, pi)`.
pub fn vertex_angle(alpha: f64, gamma1: f64, gamma2: f64) -> Result<VertexAngleResult> {
    let class = classify_data(alpha, gamma1, gamma2)?;
    if class.tag != AdmissibilityTag::InteriorQ {
        return Err(Error::no_solution(format!(
            "vertex angle requires data interior to Q, got {}",
            class.tag.label()
        )));
    }
    let s12 = gamma1.sin() * gamma2.sin();
    if s12 <= 0.0 {
        return Err(Error::domain("vertical contact data (|cos gamma| = 1)"));
    }
    // B1 B2 + cos 2a is the mean of the two band factors
    let (p, m) = band_factors(alpha, gamma1, gamma2);
    let cos_two_beta = 0.5 * (p + m) / s12;
    let sin_sq_two_beta = class.numerator / (s12 * s12);
    let two_beta = cos_two_beta.clamp(-1.0, 1.0).acos();
    Ok(VertexAngleResult { two_beta, cos_two_beta, sin_sq_two_beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn classify_orthogonal_data_is_interior() {
        let c = classify_data(FRAC_PI_4, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert_eq!(c.tag, AdmissibilityTag::InteriorQ);
        assert!((c.numerator - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classify_square_corner() {
        // (pi, pi/2) at alpha = pi/4 makes both bands tight
        let c = classify_data(FRAC_PI_4, PI, FRAC_PI_2).unwrap();
        assert_eq!(c.tag, AdmissibilityTag::Corner);
        assert!(c.numerator.abs() < 1e-15);
    }

    #[test]
    fn classify_open_boundary_segments() {
        let a = FRAC_PI_6;
        // g1 + g2 = pi + 2a with |g1 - g2| well inside the band
        let c = classify_data(a, 2.0, PI + 2.0 * a - 2.0).unwrap();
        assert_eq!(c.tag, AdmissibilityTag::BoundaryQD1);
        assert!(c.numerator.abs() < 1e-12);
        // g1 - g2 = pi - 2a
        let c = classify_data(a, 2.5, 2.5 - (PI - 2.0 * a)).unwrap();
        assert_eq!(c.tag, AdmissibilityTag::BoundaryQD2);
        assert!(c.numerator.abs() < 1e-12);
    }

    #[test]
    fn classify_d2_example() {
        let c = classify_data(FRAC_PI_6, PI / 12.0, 11.0 * PI / 12.0).unwrap();
        assert_eq!(c.tag, AdmissibilityTag::D2);
        // 3/4 - (2 cos^2 15deg - cos^2 15deg) = 3/4 - cos^2(15deg)
        let expected = 0.75 - (PI / 12.0).cos().powi(2);
        assert!((c.numerator - expected).abs() < 1e-14);
        assert!((c.numerator + 0.183_012_701_892_219_2).abs() < 1e-12);
    }

    #[test]
    fn classify_d1_small_angles() {
        let c = classify_data(FRAC_PI_6, 0.2, 0.2).unwrap();
        assert_eq!(c.tag, AdmissibilityTag::D1);
        assert!(c.numerator < 0.0);
    }

    #[test]
    fn factored_numerator_matches_expanded_form() {
        for k in 0..400 {
            let alpha = 0.05 + 1.45 * ((k * 37) % 101) as f64 / 100.0;
            let g1 = PI * ((k * 53) % 97) as f64 / 96.0;
            let g2 = PI * ((k * 71) % 89) as f64 / 88.0;
            let (b1, b2) = (g1.cos(), g2.cos());
            let s = (2.0 * alpha).sin();
            let expanded = s * s - (b1 * b1 + b2 * b2 + 2.0 * b1 * b2 * (2.0 * alpha).cos());
            assert!((vertex_numerator(alpha, g1, g2) - expanded).abs() < 1e-14);
        }
    }

    #[test]
    fn classify_rejects_bad_domain() {
        assert!(classify_data(FRAC_PI_2, 1.0, 1.0).is_err());
        assert!(classify_data(0.0, 1.0, 1.0).is_err());
        assert!(classify_data(0.5, -0.1, 1.0).is_err());
        assert!(classify_data(0.5, 1.0, 3.2).is_err());
    }

    #[test]
    fn vertex_angle_examples() {
        for alpha in [0.2, FRAC_PI_6, FRAC_PI_4, 1.3] {
            let v = vertex_angle(alpha, FRAC_PI_2, FRAC_PI_2).unwrap();
            assert!((v.two_beta - 2.0 * alpha).abs() < 1e-12);
        }
        let v = vertex_angle(FRAC_PI_3, FRAC_PI_3, FRAC_PI_3).unwrap();
        assert!((v.cos_two_beta + 1.0 / 3.0).abs() < 1e-14);
        assert!((v.two_beta - 1.910_633_236_249_018_6).abs() < 1e-12);
        let v = vertex_angle(FRAC_PI_4, FRAC_PI_3, 2.0 * FRAC_PI_3).unwrap();
        assert!((v.cos_two_beta + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn vertex_angle_rejects_outside_q() {
        assert!(matches!(vertex_angle(FRAC_PI_6, 0.2, 0.2), Err(Error::NoSolution(_))));
        assert!(vertex_angle(FRAC_PI_4, PI, FRAC_PI_2).is_err());
    }

    #[test]
    fn canonical_wedge_is_consistent() {
        let w = WedgeConfig::canonical(0.4, 1.0, 2.0).unwrap();
        w.check().unwrap();
        let w1 = w.wall_direction(0);
        let w2 = w.wall_direction(1);
        assert!((w1.dot(&w2).acos() - 0.8).abs() < 1e-12);
        assert!(w1.dot(&w.plane1.normal()).abs() < 1e-15);
        let rebuilt = WedgeConfig::from_planes(w.plane1, w.plane2).unwrap();
        assert!((rebuilt.alpha - 0.4).abs() < 1e-12);
    }

    #[test]
    fn prism_is_coplanar_and_octant_has_apex() {
        let p = TrihedralConfig::equilateral_prism(1.0, [1.5; 3], 0.0).unwrap();
        for plane in &p.planes {
            assert!((plane.signed_distance(&Vec3::zeros()) - 1.0).abs() < 1e-12);
        }
        for &(j, k) in PLANE_PAIRS.iter() {
            assert!((p.pair_alpha(j, k) - FRAC_PI_6).abs() < 1e-12);
        }
        let o = TrihedralConfig::orthogonal_octant([1.0; 3]).unwrap();
        assert!(matches!(o.kind, TrihedralKind::Apex { apex } if apex.norm() < 1e-15));
        let e = o.edge(0, 1).unwrap();
        assert!((e.dir - Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn parallel_planes_rejected() {
        let a = PlaneSupport::new(Vec3::x(), 0.0, 1.0).unwrap();
        let b = PlaneSupport::new(Vec3::x(), 1.0, 1.0).unwrap();
        let c = PlaneSupport::new(Vec3::y(), 0.0, 1.0).unwrap();
        assert!(TrihedralConfig::cylinder([a, b, c], 0.0).is_err());
        assert!(TrihedralConfig::apex([a, b, c]).is_err());
    }
}
