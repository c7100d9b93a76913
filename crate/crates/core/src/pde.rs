//! Finite-volume Newton solver for `div Tu = 2h` on a rectangle with
//! constant contact-angle flux `nu . Tu = cos gamma` on each wall.
//!
//! Walls are ordered bottom (`y = 0`), right (`x = a`), top (`y = b`),
//! left (`x = 0`); the bottom and top walls have length `a`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SparseLu, TripletBuilder};
use crate::Vec3;

const NEWTON_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 60;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleProblem {
    pub a: f64,
    pub b: f64,
    /// Contact angles on the bottom, right, top and left walls.
    pub gammas: [f64; 4],
    /// Mean curvature; derived from the compatibility condition when absent.
    pub h: Option<f64>,
    /// Cells per unit length.
    pub grid_n: usize,
}

impl RectangleProblem {
    pub fn equal_angles(a: f64, b: f64, gamma: f64, grid_n: usize) -> Self {
        Self { a, b, gammas: [gamma; 4], h: None, grid_n }
    }

    pub fn wall_lengths(&self) -> [f64; 4] {
        [self.a, self.b, self.a, self.b]
    }

    fn cells(&self) -> (usize, usize) {
        let nx = (self.a * self.grid_n as f64).round().max(1.0) as usize;
        let ny = (self.b * self.grid_n as f64).round().max(1.0) as usize;
        (nx, ny)
    }
}

/// `h = sum(cos gamma_wall * wall_length) / (2 a b)`.
pub fn compatibility_h(a: f64, b: f64, gammas: [f64; 4]) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain("rectangle sides must be positive"));
    }
    let lengths = [a, b, a, b];
    let flux: f64 = gammas.iter().zip(lengths.iter()).map(|(g, l)| g.cos() * l).sum();
    Ok(flux / (2.0 * a * b))
}

/// Heights on a cell-centered grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphField {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Lower-left corner of the base rectangle.
    pub x0: f64,
    pub y0: f64,
    /// Row-major `values[j * nx + i]` at the center of cell `(i, j)`.
    pub values: Vec<f64>,
    /// Wall contact angles when the field comes from a solve.
    pub gammas: Option<[f64; 4]>,
    pub h: Option<f64>,
    pub iterations: usize,
    /// Final residual infinity norm.
    pub residual_norm: f64,
    /// Residual infinity norm at each Newton iterate.
    pub trace: Vec<f64>,
}

impl GraphField {
    /// Samples `f(x, y)` at the cell centers of `[0, a] x [0, b]`.
    pub fn sample(a: f64, b: f64, nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let (dx, dy) = (a / nx as f64, b / ny as f64);
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy));
            }
        }
        Self {
            nx,
            ny,
            dx,
            dy,
            x0: 0.0,
            y0: 0.0,
            values,
            gammas: None,
            h: None,
            iterations: 0,
            residual_norm: f64::NAN,
            trace: Vec::new(),
        }
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + (i as f64 + 0.5) * self.dx, self.y0 + (j as f64 + 0.5) * self.dy)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Shifts the field to zero mean.
    pub fn recenter(&mut self) {
        let m = self.mean();
        self.values.iter_mut().for_each(|v| *v -= m);
    }

    /// Graph points `(x, y, u)` at cell centers.
    pub fn points(&self) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.values.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.center(i, j);
                out.push(Vec3::new(x, y, self.at(i, j)));
            }
        }
        out
    }

    /// Max-norm distance to `f` after removing the mean difference.
    pub fn max_error_against(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let exact = GraphField { values: self.points().iter().map(|p| f(p.x, p.y)).collect(), ..self.clone() };
        let shift = self.mean() - exact.mean();
        self.values
            .iter()
            .zip(exact.values.iter())
            .fold(0.0, |m, (u, e)| m.max((u - e - shift).abs()))
    }
}

/// Discrete operator on a fixed grid.
struct Discretization {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    /// Outward wall flux `cos gamma` per wall.
    wall_cos: [f64; 4],
    two_h: f64,
}

/// Derivative weights of a tangential difference: `(cell index, weight)`.
type Stencil = [(usize, f64); 3];

impl Discretization {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Three-point first-derivative stencil along an axis of length `n`.
    fn axis_stencil(k: usize, n: usize, h: f64) -> [(usize, f64); 3] {
        let c = 0.5 / h;
        if n < 3 {
            // two cells: plain difference
            return [(0, -2.0 * c), (1, 2.0 * c), (0, 0.0)];
        }
        if k == 0 {
            [(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
        } else if k == n - 1 {
            [(n - 1, 3.0 * c), (n - 2, -4.0 * c), (n - 3, c)]
        } else {
            [(k - 1, -c), (k + 1, c), (k, 0.0)]
        }
    }

    /// y-derivative stencil at cell `(i, j)` in global indices.
    fn dy_stencil(&self, i: usize, j: usize) -> Stencil {
        Self::axis_stencil(j, self.ny, self.dy).map(|(jj, w)| (self.idx(i, jj), w))
    }

    fn dx_stencil(&self, i: usize, j: usize) -> Stencil {
        Self::axis_stencil(i, self.nx, self.dx).map(|(ii, w)| (self.idx(ii, j), w))
    }

    fn apply(st: &Stencil, u: &[f64]) -> f64 {
        st.iter().map(|&(k, w)| w * u[k]).sum()
    }

    /// Interior faces: `(left/lower cell, right/upper cell, normal spacing,
    /// face length, tangential stencils of both cells)`.
    fn faces(&self) -> Vec<(usize, usize, f64, f64, Stencil, Stencil)> {
        let mut out = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx.saturating_sub(1) {
                out.push((
                    self.idx(i, j),
                    self.idx(i + 1, j),
                    self.dx,
                    self.dy,
                    self.dy_stencil(i, j),
                    self.dy_stencil(i + 1, j),
                ));
            }
        }
        for j in 0..self.ny.saturating_sub(1) {
            for i in 0..self.nx {
                out.push((
                    self.idx(i, j),
                    self.idx(i, j + 1),
                    self.dy,
                    self.dx,
                    self.dx_stencil(i, j),
                    self.dx_stencil(i, j + 1),
                ));
            }
        }
        out
    }

    /// Net outward wall flux of each cell.
    fn wall_flux(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * self.ny];
        for i in 0..self.nx {
            out[self.idx(i, 0)] += self.wall_cos[0] * self.dx;
            out[self.idx(i, self.ny - 1)] += self.wall_cos[2] * self.dx;
        }
        for j in 0..self.ny {
            out[self.idx(self.nx - 1, j)] += self.wall_cos[1] * self.dy;
            out[self.idx(0, j)] += self.wall_cos[3] * self.dy;
        }
        out
    }

    /// Net outward flux per cell (`div Tu` times cell area).
    fn net_flux(&self, u: &[f64], jac: Option<&mut TripletBuilder>) -> Vec<f64> {
        let mut net = self.wall_flux();
        let mut jac = jac;
        for (l, r, spacing, len, tl, tr) in self.faces() {
            let gn = (u[r] - u[l]) / spacing;
            let gt = 0.5 * (Self::apply(&tl, u) + Self::apply(&tr, u));
            let q2 = 1.0 + gn * gn + gt * gt;
            let q = q2.sqrt();
            let f = gn / q * len;
            net[l] += f;
            net[r] -= f;
            if let Some(jb) = jac.as_deref_mut() {
                let q3 = q2 * q;
                let df_dgn = (1.0 + gt * gt) / q3 * len;
                let df_dgt = -gn * gt / q3 * len;
                let mut add = |col: usize, w: f64| {
                    jb.push(l, col, w);
                    jb.push(r, col, -w);
                };
                add(r, df_dgn / spacing);
                add(l, -df_dgn / spacing);
                for &(k, w) in tl.iter().chain(tr.iter()) {
                    if w != 0.0 {
                        add(k, 0.5 * df_dgt * w);
                    }
                }
            }
        }
        net
    }

    /// Per-area residual with the compatibility defect removed, and the
    /// defect itself.
    fn residual(&self, u: &[f64], jac: Option<&mut TripletBuilder>) -> (Vec<f64>, f64) {
        let area = self.dx * self.dy;
        let mut r: Vec<f64> = self.net_flux(u, jac).iter().map(|f| f / area - self.two_h).collect();
        let defect = r.iter().sum::<f64>() / r.len() as f64;
        r.iter_mut().for_each(|v| *v -= defect);
        (r, defect)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_problem(p: &RectangleProblem) -> Result<f64> {
    if !(p.a > 0.0 && p.b > 0.0 && p.a.is_finite() && p.b.is_finite()) {
        return Err(Error::domain("rectangle sides must be positive"));
    }
    if p.grid_n < 16 {
        return Err(Error::domain("grid_n must be at least 16"));
    }
    if p.gammas.iter().any(|g| !(0.0..=std::f64::consts::PI).contains(g)) {
        return Err(Error::domain("contact angles must lie in [0, pi]"));
    }
    let g0 = p.gammas[0];
    if p.gammas.iter().all(|&g| g == g0) && !(g0 > FRAC_PI_4 && g0 < FRAC_PI_2) {
        return Err(Error::domain(format!("equal-angle data require pi/4 < gamma < pi/2, got {g0}")));
    }
    let h_c = compatibility_h(p.a, p.b, p.gammas)?;
    match p.h {
        None => Ok(h_c),
        Some(h) => {
            let flux = 2.0 * h_c * p.a * p.b;
            let defect = (2.0 * h * p.a * p.b - flux).abs();
            if defect > 1e-10 * flux.abs().max(1.0) {
                return Err(Error::IncompatibleData(format!(
                    "2 h a b = {} but the wall flux is {flux}",
                    2.0 * h * p.a * p.b
                )));
            }
            Ok(h)
        }
    }
}

/// Initial guess: the exact cap for a square with equal angles, else the
/// paraboloid with Laplacian `2h`.
fn initial_guess(p: &RectangleProblem, h: f64, nx: usize, ny: usize) -> Vec<f64> {
    let (cx, cy) = (0.5 * p.a, 0.5 * p.b);
    let equal = p.gammas.iter().all(|&g| g == p.gammas[0]);
    let f: Box<dyn Fn(f64, f64) -> f64> = if equal && p.a == p.b && p.gammas[0].cos() > 0.0 {
        let r = p.a / (2.0 * p.gammas[0].cos());
        Box::new(move |x, y| -(r * r - (x - cx).powi(2) - (y - cy).powi(2)).max(0.0).sqrt())
    } else {
        Box::new(move |x, y| 0.5 * h * ((x - cx).powi(2) + (y - cy).powi(2)))
    };
    GraphField::sample(p.a, p.b, nx, ny, f).values
}

/// Solves the contact-angle problem with damped Newton from the default
/// initial guess.
pub fn solve_rectangle(p: &RectangleProblem) -> Result<GraphField> {
    let h = check_problem(p)?;
    let (nx, ny) = p.cells();
    let u0 = initial_guess(p, h, nx, ny);
    solve_rectangle_from(p, u0)
}

/// Solves starting from the given cell values.
pub fn solve_rectangle_from(p: &RectangleProblem, u0: Vec<f64>) -> Result<GraphField> {
    let h = check_problem(p)?;
    let (nx, ny) = p.cells();
    if u0.len() != nx * ny {
        return Err(Error::domain("initial guess has the wrong length"));
    }
    let disc = Discretization {
        nx,
        ny,
        dx: p.a / nx as f64,
        dy: p.b / ny as f64,
        wall_cos: p.gammas.map(f64::cos),
        two_h: 2.0 * h,
    };
    let n = nx * ny;
    let mut u = u0;
    let mean = u.iter().sum::<f64>() / n as f64;
    u.iter_mut().for_each(|v| *v -= mean);
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let mut jac = TripletBuilder::new(n);
        let (r, _) = disc.residual(&u, Some(&mut jac));
        let norm = inf_norm(&r);
        trace.push(norm);
        if !norm.is_finite() {
            return Err(Error::NonConvergence { message: "residual became non-finite".into(), trace });
        }
        if norm < NEWTON_TOL {
            break;
        }
        if iterations >= MAX_NEWTON {
            return Err(Error::NonConvergence {
                message: format!("no convergence after {MAX_NEWTON} Newton steps (residual {norm:e})"),
                trace,
            });
        }
        // the per-area Jacobian with the gauge pinned through cell 0
        let area = disc.dx * disc.dy;
        let mut scaled = TripletBuilder::new(n);
        for t in jac_entries(&jac) {
            if t.0 != 0 {
                scaled.push(t.0, t.1, t.2 / area);
            }
        }
        scaled.push(0, 0, 1.0);
        let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        rhs[0] = 0.0;
        let delta = SparseLu::new(&scaled)?.solve(&rhs);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = u.iter().zip(delta.iter()).map(|(a, d)| a + t * d).collect();
            let (rt, _) = disc.residual(&trial, None);
            let nt = inf_norm(&rt);
            if nt.is_finite() && nt < norm * (1.0 - 1e-4 * t) {
                u = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            return Err(Error::NonConvergence {
                message: format!("line search stalled at residual {norm:e}"),
                trace,
            });
        }
        let mean = u.iter().sum::<f64>() / n as f64;
        u.iter_mut().for_each(|v| *v -= mean);
    }
    let residual_norm = *trace.last().unwrap_or(&f64::NAN);
    Ok(GraphField {
        nx,
        ny,
        dx: disc.dx,
        dy: disc.dy,
        x0: 0.0,
        y0: 0.0,
        values: u,
        gammas: Some(p.gammas),
        h: Some(h),
        iterations,
        residual_norm,
        trace,
    })
}

fn jac_entries(j: &TripletBuilder) -> Vec<(usize, usize, f64)> {
    j.entries().iter().map(|t| (t.row, t.col, t.val)).collect()
}

/// `sum_cells (div Tu) * area` for the discrete operator at `u`; equals the
/// total wall flux for every `u`.
pub fn discrete_divergence_total(p: &RectangleProblem, u: &[f64]) -> Result<f64> {
    let (nx, ny) = p.cells();
    if u.len() != nx * ny {
        return Err(Error::domain("field has the wrong length"));
    }
    let disc = Discretization {
        nx,
        ny,
        dx: p.a / nx as f64,
        dy: p.b / ny as f64,
        wall_cos: p.gammas.map(f64::cos),
        two_h: 0.0,
    };
    Ok(disc.net_flux(u, None).iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn compatibility_examples() {
        assert!((compatibility_h(1.0, 1.0, [FRAC_PI_3; 4]).unwrap() - 1.0).abs() < 1e-15);
        assert!(compatibility_h(1.0, 1.0, [FRAC_PI_2; 4]).unwrap().abs() < 1e-15);
        assert!((compatibility_h(1.0, 2.0, [FRAC_PI_3; 4]).unwrap() - 0.75).abs() < 1e-15);
        let (a, b) = (3.0, 2.0);
        assert_eq!(compatibility_h(a, b, [0.0, FRAC_PI_2, 0.0, FRAC_PI_2]).unwrap(), 1.0 / b);
    }

    #[test]
    fn rejects_bad_problems() {
        let mut p = RectangleProblem::equal_angles(1.0, 1.0, 0.5, 32);
        assert!(matches!(solve_rectangle(&p), Err(Error::Domain(_))));
        p.gammas = [FRAC_PI_3; 4];
        p.h = Some(0.9);
        assert!(matches!(solve_rectangle(&p), Err(Error::IncompatibleData(_))));
        p.h = None;
        p.grid_n = 8;
        assert!(solve_rectangle(&p).is_err());
    }

    #[test]
    fn square_matches_exact_cap() {
        let p = RectangleProblem::equal_angles(1.0, 1.0, FRAC_PI_3, 32);
        let u = solve_rectangle(&p).unwrap();
        assert!(u.residual_norm < 1e-10);
        assert!(u.mean().abs() < 1e-12);
        let err = u.max_error_against(|x, y| -(1.0 - (x - 0.5).powi(2) - (y - 0.5).powi(2)).sqrt());
        assert!(err < 5e-3, "error {err}");
    }

    #[test]
    fn conservation_holds_for_arbitrary_fields() {
        let p = RectangleProblem { a: 1.0, b: 1.5, gammas: [0.9, 1.1, 1.3, 1.0], h: None, grid_n: 16 };
        let (nx, ny) = p.cells();
        let u: Vec<f64> = (0..nx * ny).map(|k| ((k * 7919) % 101) as f64 * 0.01).collect();
        let total = discrete_divergence_total(&p, &u).unwrap();
        let walls: f64 = p.gammas.iter().zip(p.wall_lengths()).map(|(g, l)| g.cos() * l).sum();
        assert!((total - walls).abs() < 1e-12);
    }

    #[test]
    fn gauge_and_symmetry() {
        let p = RectangleProblem::equal_angles(1.0, 1.0, 1.2, 16);
        let base = solve_rectangle(&p).unwrap();
        let shifted = solve_rectangle_from(&p, initial_guess(&p, 0.0, 16, 16).iter().map(|v| v + 5.0).collect())
            .unwrap();
        let diff = base.values.iter().zip(shifted.values.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-10, "{diff}");
        for j in 0..16 {
            for i in 0..16 {
                let v = base.at(i, j);
                assert!((v - base.at(15 - i, j)).abs() < 1e-10);
                assert!((v - base.at(i, 15 - j)).abs() < 1e-10);
                assert!((v - base.at(j, i)).abs() < 1e-10);
            }
        }
    }
}
