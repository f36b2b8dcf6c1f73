//! Large-argument asymptotic expansions of I_ν and K_ν at fixed order.
//!
//! K_ν(x) ~ √(π/(2x)) e^{−x} Σ_k A_k(ν)/x^k and
//! I_ν(x) ~ e^{x}/√(2πx)  Σ_k (−1)^k A_k(ν)/x^k, with
//! A_k(ν) = (1/(8^k k!)) Π_{n=1..k} (4ν² − (2n−1)²).
//!
//! The series is divergent; we truncate at the smallest term and report the
//! magnitude of the first omitted term as the error estimate. This module
//! exists as an independent cross-check regime for the engine — production
//! evaluation goes through `engine::bessel_ik` everywhere.

use crate::error::{Error, Result};
use crate::scaled::Scaled;

/// Coefficients A_0..A_{kmax} of the large-argument expansion.
#[derive(Debug, Clone)]
pub struct LargeArgCoeffs {
    pub a_coeffs: Vec<f64>,
}

impl LargeArgCoeffs {
    pub fn new(order: f64, kmax: usize) -> Self {
        let mut a = Vec::with_capacity(kmax + 1);
        let four_nu2 = 4.0 * order * order;
        let mut c = 1.0;
        a.push(c);
        for k in 1..=kmax {
            let odd = (2 * k - 1) as f64;
            c *= (four_nu2 - odd * odd) / (8.0 * k as f64);
            a.push(c);
        }
        LargeArgCoeffs { a_coeffs: a }
    }
}

/// Sum Σ s^k A_k/x^k truncating at the smallest term; returns the partial
/// sum and the first omitted term (relative), used as the error estimate.
fn asymptotic_sum(coeffs: &LargeArgCoeffs, x: f64, sign: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut omitted = 0.0;
    let mut s = 1.0;
    for (k, &a) in coeffs.a_coeffs.iter().enumerate() {
        let term = s * a / x.powi(k as i32);
        if term.abs() > prev {
            omitted = term.abs();
            break;
        }
        sum += term;
        prev = term.abs();
        omitted = prev; // if we exhaust the table, the bound is the last term
        s *= sign;
    }
    (sum, omitted / sum.abs().max(f64::MIN_POSITIVE))
}

/// K_ν(x) by the large-argument expansion; requires x ≳ max(10, ν²/2) for
/// useful accuracy. Returns the scaled value and a relative error estimate.
pub fn k_large_arg(order: f64, x: f64, kmax: usize) -> Result<(Scaled, f64)> {
    if x <= 0.0 || order < 0.0 {
        return Err(Error::domain("k_large_arg requires order >= 0, x > 0"));
    }
    let coeffs = LargeArgCoeffs::new(order, kmax);
    let (sum, est) = asymptotic_sum(&coeffs, x, 1.0);
    let prefactor = (std::f64::consts::PI / (2.0 * x)).sqrt();
    Ok((Scaled::new(prefactor * sum, -x), est))
}

/// I_ν(x) by the large-argument expansion (the exponentially small
/// reflection term is neglected, valid for x ≫ 1).
pub fn i_large_arg(order: f64, x: f64, kmax: usize) -> Result<(Scaled, f64)> {
    if x <= 0.0 || order < 0.0 {
        return Err(Error::domain("i_large_arg requires order >= 0, x > 0"));
    }
    let coeffs = LargeArgCoeffs::new(order, kmax);
    let (sum, est) = asymptotic_sum(&coeffs, x, -1.0);
    let prefactor = 1.0 / (2.0 * std::f64::consts::PI * x).sqrt();
    Ok((Scaled::new(prefactor * sum, x), est))
}
