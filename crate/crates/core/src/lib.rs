//! Numerical toolkit for capillary drops resting in wedges, trihedral
//! corners and three-sided cylinders.
//!
//! The crate is organised bottom-up:
//!
//! - [`geom`]: plane supports, contact-angle classification and the
//!   vertex-angle formulas.
//! - [`analytic`]: closed-form spherical caps, the half-cylinder graph and
//!   residual checkers for the constant mean curvature equations.
//! - [`pde`]: finite-volume Newton solver for `div Tu = 2H` on rectangles
//!   with contact-angle flux conditions.
//! - [`mesh`]: triangulated disk-type drop surfaces and the constrained
//!   energy minimiser.
//! - [`diagnostics`]: sphere fits, discrete curvature, contact and vertex
//!   angle measurements.
//! - [`harness`]: scenario configuration, verification recipes and exporters
//!   used by the `capvertex` binary.
//!
//! Contact angles are always measured inside the liquid. Mean curvature
//! `h` of analytic caps is taken with respect to the outward normal of the
//! enclosed drop, so a convex drop filling part of a ball has `h < 0`;
//! the mesh diagnostics report curvature with the opposite (inward) sign so
//! that a convex drop reads positive.

pub mod analytic;
pub mod diagnostics;
pub mod error;
pub mod geom;
pub mod harness;
pub mod jet;
pub mod linalg;
pub mod mesh;
pub mod pde;

pub use error::{Error, Result};
pub use geom::Vec3;
