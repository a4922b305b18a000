//! Numerical kernel for discrete asymptotic nets (A-nets), hyperbolic nets
//! built from crisscrossed quadrilaterals, and their Weingarten and Bäcklund
//! transformations.
//!
//! The modules build on each other in this order:
//!
//! * [`geometry`]: points, lines, planes and incidence residuals
//! * [`lattice`]: fields over windows of `Z^m`
//! * [`anet`]: Moutard/Lelieuvre synthesis, τ-potentials, dBKP residuals
//! * [`hypnet`]: crosses, C¹ conditions and the ρ Cauchy problem
//! * [`weingarten`]: Blaschke/Weingarten cubes and the transformations
//! * [`meshout`]: rational bilinear patches and OBJ export
//!
//! [`synth`] holds seeded instance generators, [`io`] the JSON artifacts and
//! [`verify`] the aggregated checks used by the command-line tool.

pub mod anet;
pub mod error;
pub mod geometry;
pub mod hypnet;
pub mod io;
pub mod lattice;
pub mod meshout;
pub mod synth;
pub mod verify;
pub mod weingarten;

pub use error::{Error, Result};
pub use geometry::{Line3, Plane3, Point3, Tolerances};
