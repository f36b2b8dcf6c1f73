//! Zeta-regularized determinants of Sturm–Liouville operators on [a, ∞)
//! whose potential grows quadratically at infinity.
//!
//! The operators have the form H = −(x² f′)′ + x²μ² − ¼ + V(x) with a
//! separated boundary condition at the left endpoint a. The library
//! computes det_ζ(H + ν²) three independent ways — a Wronskian closed
//! form, a regularized resolvent-trace integral, and a finite-difference
//! Fredholm product — and cross-validates them.

pub mod bessel;
pub mod cli;
pub mod detz;
pub mod error;
pub mod operator;
pub mod quad;
pub mod regfit;
pub mod scaled;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};
pub use scaled::Scaled;
