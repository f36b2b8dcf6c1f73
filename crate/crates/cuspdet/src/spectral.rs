//! Independent eigenvalue oracle: three-point finite-difference
//! discretization of H on a truncated interval [a, R] with Dirichlet
//! right end, Sturm-sequence bisection for the low spectrum, the Weyl
//! counting-function comparison N(λ) ~ √λ·log λ/(2π), and the Fredholm
//! product tail estimate.

use crate::error::{Error, Result};
use crate::operator::{BoundaryCondition, OperatorSpec};
use crate::quad;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    ThreePointLiouville,
}

/// A certified truncated-domain discretization with its spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct Discretization {
    pub r: f64,
    pub n: usize,
    pub scheme: Scheme,
    /// Richardson-extrapolated eigenvalues, strictly increasing.
    pub eigs: Vec<f64>,
    /// Per-eigenvalue error estimates |λ_{2n} − λ_n|/3.
    pub tolerances: Vec<f64>,
}

/// Symmetric tridiagonal assembly of −(x²f′)′ + (x²μ² − ¼ + V)f on a
/// uniform grid over [a, R], divergence form with midpoint coefficients
/// x_{i±½}². Left boundary per spec (generalized Neumann by half-cell
/// symmetrization), Dirichlet at R. Returns (diagonal, off-diagonal).
fn assemble(spec: &OperatorSpec, r: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(r > spec.a) || n < 16 {
        return Err(Error::domain("assemble requires R > a and n >= 16"));
    }
    let a = spec.a;
    let h = (r - a) / n as f64;
    let p = |x: f64| x * x;
    let q = |x: f64| x * x * spec.mu * spec.mu - 0.25 + spec.potential.value(x);
    let node = |i: usize| a + h * i as f64;

    match spec.bc {
        BoundaryCondition::Dirichlet => {
            // Unknowns at nodes 1..n-1.
            let m = n - 1;
            let mut diag = Vec::with_capacity(m);
            let mut off = Vec::with_capacity(m - 1);
            for i in 1..n {
                let x = node(i);
                diag.push((p(x - 0.5 * h) + p(x + 0.5 * h)) / (h * h) + q(x));
                if i < n - 1 {
                    off.push(-p(x + 0.5 * h) / (h * h));
                }
            }
            Ok((diag, off))
        }
        BoundaryCondition::GeneralizedNeumann { alpha } => {
            // Unknowns at nodes 0..n-1; node 0 carries the half cell
            // [a, a+h/2] and the boundary form term α·p(a)·f(a)², with
            // the symmetrizing substitution g₀ = √(h/2)·f₀.
            let m = n;
            let mut diag = Vec::with_capacity(m);
            let mut off = Vec::with_capacity(m - 1);
            diag.push(2.0 * p(a + 0.5 * h) / (h * h) + 2.0 * alpha * p(a) / h + q(a));
            off.push(-p(a + 0.5 * h) / (h * h) * std::f64::consts::SQRT_2);
            for i in 1..n {
                let x = node(i);
                diag.push((p(x - 0.5 * h) + p(x + 0.5 * h)) / (h * h) + q(x));
                if i < n - 1 {
                    off.push(-p(x + 0.5 * h) / (h * h));
                }
            }
            Ok((diag, off))
        }
    }
}

/// Number of eigenvalues of the symmetric tridiagonal (diag, off) that
/// are strictly below x (Sturm sequence / LDLᵀ inertia count).
pub fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0usize;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let denom = if q == 0.0 { 1e-300 } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `count` lowest eigenvalues by bisection on the inertia count.
fn lowest_eigs(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let bound = diag
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i < off.len() { off[i].abs() } else { 0.0 };
            (d - left - right, d + left + right)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (l, h)| (lo.min(l), hi.max(h)));
    (0..count)
        .into_par_iter()
        .map(|k| {
            let (mut lo, mut hi) = bound;
            // Invariant: count_below(lo) <= k < count_below(hi).
            for _ in 0..120 {
                let mid = 0.5 * (lo + hi);
                if count_below(diag, off, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Lowest `count` eigenvalues of the truncated, discretized operator,
/// Richardson-extrapolated over the grid pair (n, 2n).
///
/// The truncation guard requires the confining potential at R to exceed
/// the largest requested eigenvalue by a factor ≥ 4, so that the
/// eigenfunction mass beyond R is negligible.
pub fn fd_eigenvalues(spec: &OperatorSpec, r: f64, n: usize, count: usize) -> Result<Discretization> {
    let d = fd_eigenvalues_unguarded(spec, r, n, count)?;
    let lam_top = *d.eigs.last().ok_or_else(|| Error::domain("count must be >= 1"))?;
    if r * r * spec.mu * spec.mu < 4.0 * lam_top {
        return Err(Error::domain(format!(
            "truncation guard violated: R²μ² = {:.3e} < 4·λ_{count} = {:.3e}; suggest R >= {:.1}",
            r * r * spec.mu * spec.mu,
            4.0 * lam_top,
            2.0 * lam_top.sqrt() / spec.mu
        )));
    }
    Ok(d)
}

/// As [`fd_eigenvalues`] but without the truncation guard, for
/// diagnostics and for reproducing externally pinned (R, n) setups.
pub fn fd_eigenvalues_unguarded(
    spec: &OperatorSpec,
    r: f64,
    n: usize,
    count: usize,
) -> Result<Discretization> {
    if count == 0 {
        return Err(Error::domain("count must be >= 1"));
    }
    let (d1, e1) = assemble(spec, r, n)?;
    let (d2, e2) = assemble(spec, r, 2 * n)?;
    if count >= d1.len() {
        return Err(Error::domain("count exceeds the discretization size"));
    }
    let coarse = lowest_eigs(&d1, &e1, count);
    let fine = lowest_eigs(&d2, &e2, count);
    let mut eigs = Vec::with_capacity(count);
    let mut tolerances = Vec::with_capacity(count);
    for (lc, lf) in coarse.iter().zip(&fine) {
        eigs.push((4.0 * lf - lc) / 3.0);
        tolerances.push((lf - lc).abs() / 3.0);
    }
    for w in eigs.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::numerical("extrapolated eigenvalues are not strictly increasing"));
        }
    }
    Ok(Discretization { r, n, scheme: Scheme::ThreePointLiouville, eigs, tolerances })
}

/// The Weyl asymptotic counting curve N(λ) ~ √λ·log λ/(2π).
pub fn weyl_model_curve(lambda: f64) -> f64 {
    lambda.sqrt() * lambda.ln() / (2.0 * std::f64::consts::PI)
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylCheck {
    /// (λ, N(λ), model curve) samples.
    pub samples: Vec<(f64, f64, f64)>,
    /// N·2π/(√λ log λ) at the largest sampled λ.
    pub ratio_at_top: f64,
}

/// Eigenvalue counting function against the Weyl curve, up to λ_max.
/// The counting is done directly with the Sturm inertia count — no
/// individual eigenvalue extraction — on a grid sized so that the
/// three-point dispersion error shifts counts by ≪ 1 at λ_max.
pub fn weyl_check(spec: &OperatorSpec, lambda_max: f64) -> Result<WeylCheck> {
    if !(lambda_max > 10.0) {
        return Err(Error::domain("weyl_check requires lambda_max > 10"));
    }
    // Turning point √λ/μ, kept well inside the domain.
    let r = 2.2 * lambda_max.sqrt() / spec.mu + spec.a;
    // Local wavenumber at x is √(λ − q)/x ≤ √λ/a; resolve it to kh ≲ 0.1.
    let h_target = 0.1 * spec.a / lambda_max.sqrt();
    let n = (((r - spec.a) / h_target).ceil() as usize).clamp(2_000, 2_000_000);
    let (diag, off) = assemble(spec, r, n)?;
    let n_pts = 24;
    let samples: Vec<(f64, f64, f64)> = (1..=n_pts)
        .into_par_iter()
        .map(|i| {
            let lam = lambda_max * i as f64 / n_pts as f64;
            let count = count_below(&diag, &off, lam) as f64;
            (lam, count, weyl_model_curve(lam))
        })
        .collect();
    let (lam_top, n_top, model_top) = *samples.last().unwrap();
    let _ = lam_top;
    Ok(WeylCheck { ratio_at_top: n_top / model_top, samples })
}

/// Tail of the Fredholm product beyond the certified spectrum:
/// Σ_{λ_n > cut} log(1 + z/λ_n) ≈ ∫_cut^∞ log(1 + z/λ) dN(λ) with the
/// Weyl density dN = (log λ + 2)/(4π√λ) dλ.
pub fn fredholm_tail(z: f64, lambda_cut: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::domain("fredholm_tail requires z > 0"));
    }
    if !(lambda_cut > 1.0) {
        return Err(Error::domain("fredholm_tail requires lambda_cut > 1"));
    }
    let integrand = |lam: f64| {
        (z / lam).ln_1p() * (lam.ln() + 2.0) / (4.0 * std::f64::consts::PI * lam.sqrt())
    };
    // Doubling windows until the increment is negligible; the integrand
    // decays like z·log λ·λ^{-3/2}.
    let mut total = 0.0;
    let mut lo = lambda_cut;
    for _ in 0..100 {
        let hi = 2.0 * lo;
        let (inc, _) = quad::adaptive(integrand, lo, hi, 1e-15, 1e-10)?;
        total += inc;
        // Remaining windows are geometrically smaller (ratio ~1/√2), so
        // the dropped remainder is ≲ 3.5·inc.
        if 3.5 * inc < 1e-12 + 1e-10 * total {
            return Ok(total);
        }
        lo = hi;
    }
    Err(Error::QuadratureConvergence { est: total, tol: 1e-12 })
}

/// Eigenvector of the tridiagonal (diag, off) for an isolated eigenvalue
/// estimate, by two rounds of inverse iteration; used for property tests.
#[cfg(test)]
fn eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    let mut v: Vec<f64> = (0..n).map(|i| ((i * 2654435761 + 1) % 1000) as f64 / 1000.0 - 0.5).collect();
    for _ in 0..3 {
        // Thomas solve of (T − λI + tiny) w = v.
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let shift = lambda * (1.0 + 1e-12) + 1e-14;
        let mut denom = diag[0] - shift;
        if denom.abs() < 1e-280 {
            denom = 1e-280;
        }
        c[0] = if n > 1 { off[0] / denom } else { 0.0 };
        d[0] = v[0] / denom;
        for i in 1..n {
            let e = off[i - 1];
            let mut m = diag[i] - shift - e * c[i - 1];
            if m.abs() < 1e-280 {
                m = 1e-280;
            }
            if i < n - 1 {
                c[i] = off[i] / m;
            }
            d[i] = (v[i] - e * d[i - 1]) / m;
        }
        let mut w = vec![0.0; n];
        w[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            w[i] = d[i] - c[i] * w[i + 1];
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    v
}
