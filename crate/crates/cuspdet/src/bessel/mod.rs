//! Modified Bessel functions I_ν, K_ν of real order ν ≥ 0.
//!
//! The production path is [`engine::bessel_ik`], which is uniformly
//! accurate (~1e-12 relative) over the whole quadrant and returns
//! exponentially scaled values. The large-argument and uniform
//! large-order expansions are kept as independent regimes: they provide
//! cross-checks, cheap product evaluations at large order, and the
//! leading-order models used by the regularized-limit machinery.

pub mod engine;
pub mod large_arg;
pub mod uniform;

pub use engine::{bessel_ik, BesselIk};
pub use large_arg::{i_large_arg, k_large_arg, LargeArgCoeffs};
pub use uniform::{uniform_i, uniform_k, uniform_product, UniformCoeffs};

use crate::error::Result;
use serde::Serialize;

/// Default order threshold above which the uniform expansion is trusted.
pub const Z_MIN_UNIFORM: f64 = 20.0;

/// Which expansion produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Series,
    LargeArg,
    UniformOrder,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Series => write!(f, "series"),
            Regime::LargeArg => write!(f, "large_arg"),
            Regime::UniformOrder => write!(f, "uniform_order"),
        }
    }
}

/// A full evaluation at one (order, argument) point.
#[derive(Debug, Clone, Serialize)]
pub struct BesselEval {
    pub order: f64,
    pub argument: f64,
    /// Plain values; these over/underflow for extreme inputs — the scaled
    /// logs below are always finite.
    pub value_i: f64,
    pub value_k: f64,
    pub ln_i: f64,
    pub ln_k: f64,
    pub regime: Regime,
    pub est_rel_err: f64,
}

/// Evaluate both functions with automatic regime selection.
pub fn evaluate(order: f64, x: f64) -> Result<BesselEval> {
    let r = engine::bessel_ik(order, x)?;
    Ok(BesselEval {
        order,
        argument: x,
        value_i: r.i.value(),
        value_k: r.k.value(),
        ln_i: r.i.ln_abs(),
        ln_k: r.k.ln_abs(),
        regime: if r.series_branch { Regime::Series } else { Regime::LargeArg },
        est_rel_err: r.est_rel_err,
    })
}

/// K_ν(x) as a plain f64 (underflows to 0 beyond x ≈ 700).
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    Ok(engine::bessel_ik(order, x)?.k.value())
}

/// I_ν(x) as a plain f64 (overflows to ∞ beyond x ≈ 700).
pub fn bessel_i(order: f64, x: f64) -> Result<f64> {
    Ok(engine::bessel_ik(order, x)?.i.value())
}

/// dK_ν/dx as a plain f64.
pub fn bessel_k_prime(order: f64, x: f64) -> Result<f64> {
    Ok(engine::bessel_ik(order, x)?.kp.value())
}

/// dI_ν/dx as a plain f64.
pub fn bessel_i_prime(order: f64, x: f64) -> Result<f64> {
    Ok(engine::bessel_ik(order, x)?.ip.value())
}

/// Large-order model of K′_ν(x)/K_ν(x).
///
/// The leading behaviour is −ν/x with an O(1/ν) remainder at fixed x;
/// returns `(−order/x, remainder_estimate)`. The remainder estimate is the
/// next term of the uniform expansion, −√(ν²+x²)/x − (−ν/x) ≈ −x/(2ν),
/// in magnitude. Warns (does not error) below the trusted order floor.
pub fn bessel_k_log_derivative_order_asymptotic(order: f64, x: f64) -> (f64, f64) {
    if order < Z_MIN_UNIFORM {
        log::warn!(
            "K'/K order asymptotic evaluated at order {order} < {Z_MIN_UNIFORM}; \
             the remainder estimate is unreliable"
        );
    }
    (-order / x, x / (2.0 * order.max(1.0)))
}
