//! Small-noise analysis of randomly perturbed dynamical systems.
//!
//! Action functionals and quasipotentials between invariant sets, deterministic
//! flow tools for checking the zero-action structure, and Euler–Maruyama
//! estimation of where the stationary measure concentrates as `ε → 0`.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod error;
pub mod export;
pub mod flow;
pub mod linalg;
pub mod montecarlo;
pub mod optimize;
pub mod quasipotential;
pub mod region;
pub mod systems;

pub use error::{Error, Result};
pub use region::Region;
pub use systems::SystemSpec;
