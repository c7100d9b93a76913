//! Acceptance criteria: each criterion runs its verification recipe, must
//! pass its measurements and finish within its runtime budget. One
//! PASS/FAIL line is written per criterion straight to stderr, so it shows
//! up without `--nocapture`.

use std::io::Write;
use std::time::{Duration, Instant};

use capvertex::harness::{criterion_detail, run_criterion};

const SEED: u64 = 1;

/// Runtime budget per criterion, in seconds.
const BUDGET: [(usize, u64); 13] = [
    (1, 1),
    (2, 1),
    (3, 5),
    (4, 5),
    (5, 60),
    (6, 60),
    (7, 1),
    (8, 120),
    (9, 120),
    (10, 120),
    (11, 10),
    (12, 1),
    (13, 30),
];

fn check(id: usize) {
    let budget = Duration::from_secs(BUDGET[id - 1].1);
    let t0 = Instant::now();
    let outcome = run_criterion(id, SEED).expect("criterion id is known");
    let elapsed = t0.elapsed();
    let timely = elapsed < budget;
    let pass = outcome.pass && timely;
    let _ = writeln!(
        std::io::stderr(),
        "{} {} ({:.2} s, budget {} s)",
        if pass { "PASS" } else { "FAIL" },
        criterion_detail(&outcome),
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(outcome.pass, "criterion {id} failed: {outcome:#?}");
    assert!(timely, "criterion {id} took {elapsed:?}, budget {budget:?}");
}

#[test]
fn criterion_01_classification_equivalence() {
    check(1);
}

#[test]
fn criterion_02_vertex_angle_identity() {
    check(2);
}

#[test]
fn criterion_03_cap_vertex_agreement() {
    check(3);
}

#[test]
fn criterion_04_trihedral_construction() {
    check(4);
}

#[test]
fn criterion_05_pde_square_oracle() {
    check(5);
}

#[test]
fn criterion_06_pde_nonsphericity() {
    check(6);
}

#[test]
fn criterion_07_halfcylinder_residual() {
    check(7);
}

#[test]
fn criterion_08_wedge_evolution() {
    check(8);
}

#[test]
fn criterion_09_trihedral_evolution() {
    check(9);
}

#[test]
fn criterion_10_cylinder_evolution() {
    check(10);
}

#[test]
fn criterion_11_umbilicity_separation() {
    check(11);
}

#[test]
fn criterion_12_spherical_residual() {
    check(12);
}

#[test]
fn criterion_13_gradient_check() {
    check(13);
}
