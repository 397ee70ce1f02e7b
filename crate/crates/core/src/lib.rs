//! Spectral Galerkin simulation and Newton-Kantorovich verification for a
//! first-order nonlinear acoustics system on box domains.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod app;
pub mod basis;
pub mod config;
pub mod error;
pub mod evolution;
pub mod fractional;
pub mod grid;
pub mod lifting;
pub mod newton;
pub mod operators;
pub mod output;
pub mod properties;
pub mod quadrature;
pub mod sampling;
pub mod space;
pub mod tensor;
pub mod trig;
pub mod verify;

pub use error::{Error, Result};
