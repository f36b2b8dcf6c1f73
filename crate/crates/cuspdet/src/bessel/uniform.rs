//! Olver uniform large-order expansions of I_ν(νx) and K_ν(νx).
//!
//! With p(x) = (1+x²)^{−1/2} and ξ(x) = √(1+x²) + log(x/(1+√(1+x²))),
//!
//!   I_ν(νx) ~ e^{νξ} / (√(2πν) (1+x²)^{1/4}) · Σ_k  U_k(p)/ν^k,
//!   K_ν(νx) ~ √(π/(2ν)) e^{−νξ} / (1+x²)^{1/4} · Σ_k (−1)^k U_k(p)/ν^k,
//!
//! uniformly in x > 0. The product I_ν(νx)K_ν(νx) follows by the Cauchy
//! product; odd powers of 1/ν cancel, leaving
//!
//!   I_ν(νx)K_ν(νx) = (1/(2ν√(1+x²))) (1 + (2U₂ − U₁²)/ν² + O(ν⁻⁴)).
//!
//! U₁..U₃ are hardcoded from the classical recursion and validated against
//! a high-precision oracle in the test suite.

use crate::error::{Error, Result};
use crate::scaled::Scaled;

/// Highest stored U_k polynomial.
pub const K_MAX_STORED: usize = 3;

/// The geometry of the uniform expansion at a single point x.
#[derive(Debug, Clone)]
pub struct UniformCoeffs {
    /// ξ(x) = √(1+x²) + log(x/(1+√(1+x²))).
    pub xi: f64,
    /// p(x) = (1+x²)^{−1/2}.
    pub p: f64,
    /// Coefficient vectors of U_k in ascending powers of p, k = 1..=3.
    /// U_k has degree exactly 3k.
    pub u_polys: Vec<Vec<f64>>,
}

impl UniformCoeffs {
    pub fn new(x: f64) -> Result<Self> {
        if x <= 0.0 {
            return Err(Error::domain("uniform expansion requires x > 0"));
        }
        let root = (1.0 + x * x).sqrt();
        Ok(UniformCoeffs {
            xi: root + (x / (1.0 + root)).ln(),
            p: 1.0 / root,
            u_polys: vec![
                // U1 = (3p - 5p^3)/24
                vec![0.0, 3.0 / 24.0, 0.0, -5.0 / 24.0],
                // U2 = (81p^2 - 462p^4 + 385p^6)/1152
                vec![0.0, 0.0, 81.0 / 1152.0, 0.0, -462.0 / 1152.0, 0.0, 385.0 / 1152.0],
                // U3 = (30375p^3 - 369603p^5 + 765765p^7 - 425425p^9)/414720
                vec![
                    0.0,
                    0.0,
                    0.0,
                    30375.0 / 414720.0,
                    0.0,
                    -369603.0 / 414720.0,
                    0.0,
                    765765.0 / 414720.0,
                    0.0,
                    -425425.0 / 414720.0,
                ],
            ],
        })
    }

    /// Evaluate U_k(p), k = 1..=K_MAX_STORED.
    pub fn u(&self, k: usize) -> f64 {
        let poly = &self.u_polys[k - 1];
        poly.iter().rev().fold(0.0, |acc, &c| acc * self.p + c)
    }
}

fn check_kmax(kmax: usize) -> Result<()> {
    if kmax > K_MAX_STORED {
        return Err(Error::spec(format!(
            "uniform expansion truncation {kmax} exceeds stored coefficients {K_MAX_STORED}"
        )));
    }
    Ok(())
}

/// I_ν(νx) via the uniform expansion through k = kmax terms.
/// Returns the scaled value and a relative truncation estimate.
pub fn uniform_i(order: f64, x: f64, kmax: usize) -> Result<(Scaled, f64)> {
    check_kmax(kmax)?;
    if order <= 0.0 {
        return Err(Error::domain("uniform expansion requires order > 0"));
    }
    let g = UniformCoeffs::new(x)?;
    let mut sum = 1.0;
    let mut last = 1.0;
    for k in 1..=kmax {
        last = g.u(k) / order.powi(k as i32);
        sum += last;
    }
    let pref = 1.0 / ((2.0 * std::f64::consts::PI * order).sqrt() * (1.0 + x * x).powf(0.25));
    Ok((Scaled::new(pref * sum, order * g.xi), (last / sum).abs().max(1e-16)))
}

/// K_ν(νx) via the uniform expansion through k = kmax terms.
pub fn uniform_k(order: f64, x: f64, kmax: usize) -> Result<(Scaled, f64)> {
    check_kmax(kmax)?;
    if order <= 0.0 {
        return Err(Error::domain("uniform expansion requires order > 0"));
    }
    let g = UniformCoeffs::new(x)?;
    let mut sum = 1.0;
    let mut last = 1.0;
    let mut sign = 1.0;
    for k in 1..=kmax {
        sign = -sign;
        last = sign * g.u(k) / order.powi(k as i32);
        sum += last;
    }
    let pref = (std::f64::consts::PI / (2.0 * order)).sqrt() / (1.0 + x * x).powf(0.25);
    Ok((Scaled::new(pref * sum, -order * g.xi), (last / sum).abs().max(1e-16)))
}

/// I_ν(νx)·K_ν(νx) via the Cauchy product of the two expansions. The ξ
/// exponentials cancel exactly, so the result is an ordinary f64.
pub fn uniform_product(order: f64, x: f64, kmax: usize) -> Result<(f64, f64)> {
    check_kmax(kmax)?;
    if order <= 0.0 {
        return Err(Error::domain("uniform expansion requires order > 0"));
    }
    let g = UniformCoeffs::new(x)?;
    let mut sum = 1.0;
    let mut last = 0.0;
    if kmax >= 2 {
        let u1 = g.u(1);
        let u2 = g.u(2);
        last = (2.0 * u2 - u1 * u1) / (order * order);
        sum += last;
    }
    // The 1/ν and 1/ν³ Cauchy coefficients vanish identically.
    let pref = 1.0 / (2.0 * order * (1.0 + x * x).sqrt());
    let est = if kmax >= 2 { (last / sum).abs() / (order * order) } else { 1.0 / (order * order) };
    Ok((pref * sum, est.max(1e-16)))
}
