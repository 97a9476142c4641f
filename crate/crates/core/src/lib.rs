//! Capacity potentials, level-set energies and Yamabe-type quotients on
//! rotationally symmetric asymptotically flat 3-manifolds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod error;
pub mod fixtures;
pub mod monotone;
pub mod profile;
pub mod quad;
pub mod yamabe;

pub use capacity::{level_set_grid, level_set_report, solve_harmonic, HarmonicSolution, LevelSetData, TGrid};
pub use error::{Error, Result};
pub use monotone::{conformal_k_transform, rigidity_scan, verify, Rigidity, RigidityReport, Tolerances, VerifyReport};
pub use profile::{conformal_to_warped, schwarzschild_profile, ProfileSpec, WarpedProfile};
pub use yamabe::{model_test_function, sigma_constants, yamabe_quotient, QuotientReport, TestFunction};
