//! Scenario runner behind the `capvertex` binary.
//!
//! Each subcommand accepts the configuration kinds listed in
//! [`Command::accepts`] and produces an in-memory [`Artifacts`] set plus a
//! pass flag; the binary writes the artifacts only on success.

pub mod config;
pub mod export;
pub mod verify;

use serde::Serialize;
use serde_json::json;

pub use config::ScenarioConfig;
pub use export::Artifacts;
pub use verify::{run_criterion, verify_suite, CriterionOutcome, Measurement, VerifyOutcome};

use crate::analytic::{
    cylinder_cap, trihedral_cap, wedge_cap, CylinderSolution, SphericalCap, TrihedralSolution,
};
use crate::diagnostics::{diagnose, fit_sphere};
use crate::error::{Error, Result};
use crate::geom::{classify_data, classify_data_with_band, vertex_angle, AdmissibilityTag, WedgeConfig};
use crate::mesh::{cap_mesh, evolve, seed_mesh, surface_to_obj, to_obj, EvolveOptions, SeedOptions, Support, VolumeMode};
use crate::pde::{compatibility_h, solve_rectangle, RectangleProblem};
use crate::Vec3;
use config::{ClassifyConfig, CylinderCapConfig, EvolveConfig, RectangleConfig, TrihedralCapConfig, VerifyConfig, WedgeCapConfig};
use export::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classify,
    Cap,
    SolveGraph,
    Evolve,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Cap => "cap",
            Command::SolveGraph => "solve-graph",
            Command::Evolve => "evolve",
            Command::Verify => "verify",
        }
    }

    /// Configuration kinds the subcommand runs.
    pub fn accepts(&self) -> &'static [&'static str] {
        match self {
            Command::Classify => &["Classify"],
            Command::Cap => &["WedgeCap", "TrihedralCap", "CylinderCap"],
            Command::SolveGraph => &["RectanglePDE"],
            Command::Evolve => &["Evolve"],
            Command::Verify => &["Verify"],
        }
    }
}

/// Result of a successful run: artifacts to write and whether every check
/// held.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub artifacts: Artifacts,
    pub pass: bool,
    /// One line per check or result for the terminal.
    pub summary: Vec<String>,
}

/// Parses `text` and runs it under `command`. `seed` overrides the seed in
/// the configuration.
pub fn run(command: Command, text: &str, seed: Option<u64>) -> Result<RunOutcome> {
    let cfg = ScenarioConfig::parse(text)?;
    if !command.accepts().contains(&cfg.kind()) {
        return Err(Error::Config(format!(
            "subcommand `{}` cannot run a `{}` configuration (expected {})",
            command.name(),
            cfg.kind(),
            command.accepts().join(" or ")
        )));
    }
    match &cfg {
        ScenarioConfig::Classify(c) => run_classify(&cfg, c, seed.unwrap_or(0)),
        ScenarioConfig::WedgeCap(c) => run_wedge_cap(&cfg, c, seed.unwrap_or(0)),
        ScenarioConfig::TrihedralCap(c) => run_trihedral_cap(&cfg, c, seed.unwrap_or(0)),
        ScenarioConfig::CylinderCap(c) => run_cylinder_cap(&cfg, c, seed.unwrap_or(0)),
        ScenarioConfig::RectanglePde(c) => run_rectangle(&cfg, c, seed.unwrap_or(0)),
        ScenarioConfig::Evolve(c) => run_evolve(&cfg, c, seed.unwrap_or(c.seed)),
        ScenarioConfig::Verify(c) => run_verify(c, seed.unwrap_or(c.seed)),
    }
}

fn run_classify(cfg: &ScenarioConfig, c: &ClassifyConfig, seed: u64) -> Result<RunOutcome> {
    let step = std::f64::consts::PI / (c.grid - 1) as f64;
    let mut rows = Vec::with_capacity(c.grid * c.grid);
    let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
    for i in 0..c.grid {
        for j in 0..c.grid {
            let (g1, g2) = (i as f64 * step, j as f64 * step);
            let class = match c.band {
                Some(b) => classify_data_with_band(c.alpha, g1, g2, b),
                None => classify_data(c.alpha, g1, g2),
            };
            let (label, numerator, two_beta) = match class {
                Ok(k) => {
                    let tb = if k.tag == AdmissibilityTag::InteriorQ {
                        vertex_angle(c.alpha, g1, g2).map(|r| num(r.two_beta)).unwrap_or_default()
                    } else {
                        String::new()
                    };
                    (k.tag.label(), num(k.numerator), tb)
                }
                Err(Error::Consistency(_)) => ("Inconsistent", String::new(), String::new()),
                Err(e) => return Err(e),
            };
            *counts.entry(label).or_default() += 1;
            rows.push([num(g1), num(g2), label.to_string(), numerator, two_beta]);
        }
    }
    let inconsistent = counts.get("Inconsistent").copied().unwrap_or(0);
    let mut artifacts = Artifacts::new();
    artifacts.add_csv("classify.csv", &["gamma1", "gamma2", "class", "numerator", "two_beta"], rows)?;
    artifacts.add_json("report.json", &json!({ "seed": seed, "config": cfg, "counts": counts, "inconsistent": inconsistent }))?;
    let summary = counts.iter().map(|(k, v)| format!("{k}: {v}")).collect();
    Ok(RunOutcome { artifacts, pass: inconsistent == 0, summary })
}

/// Contact-angle check of a constructed cap on each plane.
#[derive(Debug, Clone, Serialize)]
struct ContactCheck {
    plane: usize,
    gamma: f64,
    measured_cos: f64,
    error: f64,
}

fn contact_checks(cap: &SphericalCap) -> Result<Vec<ContactCheck>> {
    cap.support
        .planes()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let m = cap.measured_contact_cos(p)?;
            Ok(ContactCheck { plane: j, gamma: p.gamma(), measured_cos: m, error: (m - p.gamma().cos()).abs() })
        })
        .collect()
}

const CAP_TOL: f64 = 1e-12;

fn cap_outcome(cfg: &ScenarioConfig, seed: u64, solution: serde_json::Value, checks: Vec<ContactCheck>, obj: String, extra: serde_json::Value) -> Result<RunOutcome> {
    let worst = checks.iter().fold(0.0f64, |m, c| m.max(c.error));
    let mut artifacts = Artifacts::new();
    artifacts.add_text("cap.obj", obj);
    artifacts.add_json(
        "report.json",
        &json!({ "seed": seed, "config": cfg, "solution": solution, "contact_checks": checks, "extra": extra }),
    )?;
    let summary = vec![format!("max contact cosine error {worst:.3e} (tolerance {CAP_TOL:e})")];
    Ok(RunOutcome { artifacts, pass: worst < CAP_TOL, summary })
}

fn run_wedge_cap(cfg: &ScenarioConfig, c: &WedgeCapConfig, seed: u64) -> Result<RunOutcome> {
    let w = WedgeConfig::canonical(c.alpha, c.gammas[0], c.gammas[1])?;
    let cap = wedge_cap(&w, c.h)?;
    let predicted = vertex_angle(c.alpha, c.gammas[0], c.gammas[1]).ok().map(|r| r.two_beta);
    let measured: Vec<f64> = cap.vertices.iter().map(|v| cap.wedge_vertex_angle(&w, v)).collect();
    let mesh = cap_mesh(&Support::Wedge(w), c.h, c.refinement)?;
    let checks = contact_checks(&cap)?;
    let extra = json!({ "predicted_two_beta": predicted, "measured_two_beta": measured });
    cap_outcome(cfg, seed, serde_json::to_value(&cap)?, checks, to_obj(&mesh), extra)
}

fn run_trihedral_cap(cfg: &ScenarioConfig, c: &TrihedralCapConfig, seed: u64) -> Result<RunOutcome> {
    let t = c.support.build()?;
    let sol = trihedral_cap(&t, c.h)?;
    let mesh = cap_mesh(&Support::Trihedral(t), c.h, c.refinement)?;
    let checks = match &sol {
        TrihedralSolution::Cap(cap) => contact_checks(cap)?,
        TrihedralSolution::Planar(p) => planar_checks(&t.planes, &p.normal),
    };
    cap_outcome(cfg, seed, serde_json::to_value(&sol)?, checks, to_obj(&mesh), json!(null))
}

fn run_cylinder_cap(cfg: &ScenarioConfig, c: &CylinderCapConfig, seed: u64) -> Result<RunOutcome> {
    let t = c.support.build()?;
    let sol = cylinder_cap(&t)?;
    let mesh = cap_mesh(&Support::Trihedral(t), 0.0, c.refinement)?;
    let checks = match &sol {
        CylinderSolution::Cap(cap) => contact_checks(cap)?,
        CylinderSolution::Planar(p) => planar_checks(&t.planes, &p.normal),
    };
    cap_outcome(cfg, seed, serde_json::to_value(&sol)?, checks, to_obj(&mesh), json!(null))
}

/// Contact angles of a planar solution: the outward normal makes the angle
/// `gamma` with each plane normal.
fn planar_checks(planes: &[crate::geom::PlaneSupport], normal: &Vec3) -> Vec<ContactCheck> {
    planes
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let m = normal.dot(&p.normal());
            ContactCheck { plane: j, gamma: p.gamma(), measured_cos: m, error: (m - p.gamma().cos()).abs() }
        })
        .collect()
}

/// Triangulates the cell-center lattice of a graph field.
fn lattice_triangles(nx: usize, ny: usize) -> Vec<[usize; 3]> {
    let id = |i: usize, j: usize| j * nx + i;
    let mut t = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            t.push([id(i, j), id(i + 1, j + 1), id(i + 1, j)]);
            t.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
        }
    }
    t
}

fn run_rectangle(cfg: &ScenarioConfig, c: &RectangleConfig, seed: u64) -> Result<RunOutcome> {
    let p = RectangleProblem { a: c.a, b: c.b, gammas: c.gammas, h: c.h, grid_n: c.grid_n };
    let u = solve_rectangle(&p)?;
    let points = u.points();
    let fit = fit_sphere(&points)?;
    let mut artifacts = Artifacts::new();
    artifacts.add_text("surface.obj", surface_to_obj(&points, &lattice_triangles(u.nx, u.ny)));
    artifacts.add_csv(
        "heights.csv",
        &["i", "j", "x", "y", "u"],
        (0..u.ny).flat_map(|j| (0..u.nx).map(move |i| (i, j))).map(|(i, j)| {
            let (x, y) = u.center(i, j);
            [i.to_string(), j.to_string(), num(x), num(y), num(u.at(i, j))]
        }),
    )?;
    let h = match c.h {
        Some(h) => h,
        None => compatibility_h(c.a, c.b, c.gammas)?,
    };
    artifacts.add_json(
        "report.json",
        &json!({
            "seed": seed,
            "config": cfg,
            "h": h,
            "nx": u.nx,
            "ny": u.ny,
            "newton_iterations": u.iterations,
            "residual_norm": u.residual_norm,
            "residual_trace": u.trace,
            "sphere_fit": fit,
            "sphere_fit_rms": fit.rms(),
        }),
    )?;
    let summary = vec![
        format!("grid {}x{}, {} Newton iterations, residual {:.3e}", u.nx, u.ny, u.iterations, u.residual_norm),
        format!("sphere-fit relative rms {:.3e}", fit.rms()),
    ];
    Ok(RunOutcome { artifacts, pass: true, summary })
}

fn run_evolve(cfg: &ScenarioConfig, c: &EvolveConfig, seed: u64) -> Result<RunOutcome> {
    let support = c.support.build()?;
    let (volume, mode) = match (c.volume, c.pressure) {
        (Some(v), _) => (v, VolumeMode::Fixed(v)),
        (None, Some(p)) => (c.seed_volume.unwrap_or(1.0), VolumeMode::Pressure(p)),
        (None, None) => return Err(Error::Config("field `volume`: missing".into())),
    };
    let opts = SeedOptions { perturbation: c.perturbation, seed, corner_levels: c.corner_levels };
    let mut start = seed_mesh(&support, volume, c.refinement, &opts)?;
    start.mode = mode;
    let evolve_opts = EvolveOptions {
        max_iters: c.max_iters,
        grad_tol: c.grad_tol,
        smoothing: c.smoothing,
        full_gradient: c.full_gradient,
    };
    let (out, report) = evolve(&start, &evolve_opts)?;
    let diag = diagnose(&out)?;
    let pairs = diag.flat();
    let flat: serde_json::Map<String, serde_json::Value> = pairs.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut artifacts = Artifacts::new();
    artifacts.add_text("seed.obj", to_obj(&start));
    artifacts.add_text("final.obj", to_obj(&out));
    artifacts.add_trace("trace.csv", &report.trace)?;
    let header: Vec<&str> = pairs.iter().map(|(k, _)| k.as_str()).collect();
    artifacts.add_csv("diagnostics.csv", &header, [pairs.iter().map(|(_, v)| num(*v))])?;
    artifacts.add_json(
        "report.json",
        &json!({
            "seed": seed,
            "config": cfg,
            "converged": report.converged,
            "iterations": report.iterations,
            "energy": report.energy,
            "volume": report.volume,
            "lagrange_h": report.lagrange_h,
            "grad_norm": report.grad_norm,
            "relaxations": report.relaxations,
            "vertices": out.vertices.len(),
            "triangles": out.triangles.len(),
            "diagnostics": diag,
            "summary": flat,
        }),
    )?;
    let summary = vec![
        format!(
            "{} after {} iterations, residual {:.3e}",
            if report.converged { "converged" } else { "not converged" },
            report.iterations,
            report.grad_norm
        ),
        format!("sphere-fit relative rms {:.3e}, mean curvature cv {:.3e}", diag.fit.rms(), diag.mean_curvature.cv),
    ];
    Ok(RunOutcome { artifacts, pass: report.converged, summary })
}

fn run_verify(c: &VerifyConfig, seed: u64) -> Result<RunOutcome> {
    let outcome = verify_suite(&c.suite, seed)?;
    let mut artifacts = Artifacts::new();
    artifacts.add_json("report.json", &outcome)?;
    let mut rows = Vec::new();
    for cr in &outcome.criteria {
        for m in &cr.measurements {
            rows.push([
                cr.id.to_string(),
                cr.name.clone(),
                m.name.clone(),
                num(m.value),
                serde_json::to_value(m.relation)?.as_str().unwrap_or_default().to_string(),
                num(m.threshold),
                m.pass.to_string(),
            ]);
        }
    }
    artifacts.add_csv("verify.csv", &["id", "criterion", "measurement", "value", "relation", "threshold", "pass"], rows)?;
    let summary = outcome.criteria.iter().map(criterion_line).collect();
    Ok(RunOutcome { artifacts, pass: outcome.pass, summary })
}

/// One-line verdict for a criterion.
pub fn criterion_line(c: &CriterionOutcome) -> String {
    format!("{} {}", if c.pass { "PASS" } else { "FAIL" }, criterion_detail(c))
}

/// Criterion id, name and measured values (or the error).
pub fn criterion_detail(c: &CriterionOutcome) -> String {
    let detail = match &c.error {
        Some(e) => format!("error: {e}"),
        None => c
            .measurements
            .iter()
            .map(|m| format!("{} = {:.3e}", m.name, m.value))
            .collect::<Vec<_>>()
            .join("; "),
    };
    format!("{:>2} {}: {}", c.id, c.name, detail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcommand_must_match_kind() {
        let text = r#"{"kind": "Classify", "alpha": 0.5, "grid": 5}"#;
        assert!(run(Command::Classify, text, None).is_ok());
        assert!(matches!(run(Command::Evolve, text, None), Err(Error::Config(_))));
    }

    #[test]
    fn wedge_cap_run_reports_contact_angles() {
        let text = r#"{"kind": "WedgeCap", "alpha": 0.7853981633974483, "gammas": [2.0, 1.9], "h": -1.0, "refinement": 1}"#;
        let out = run(Command::Cap, text, Some(3)).unwrap();
        assert!(out.pass);
        assert_eq!(out.artifacts.names(), vec!["cap.obj", "report.json"]);
        let report: serde_json::Value = serde_json::from_slice(out.artifacts.get("report.json").unwrap()).unwrap();
        assert_eq!(report["seed"], 3);
    }

    #[test]
    fn rectangle_run_writes_surface() {
        let text = r#"{"kind": "RectanglePDE", "a": 1.0, "b": 1.0, "gammas": [1.0471975511965976, 1.0471975511965976, 1.0471975511965976, 1.0471975511965976], "grid_n": 16}"#;
        let out = run(Command::SolveGraph, text, None).unwrap();
        let heights = String::from_utf8(out.artifacts.get("heights.csv").unwrap().to_vec()).unwrap();
        assert_eq!(heights.lines().count(), 1 + 256);
    }

    #[test]
    fn lattice_covers_grid() {
        assert_eq!(lattice_triangles(3, 4).len(), 2 * 2 * 3);
    }
}
