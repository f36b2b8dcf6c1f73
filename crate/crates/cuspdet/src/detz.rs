//! The determinant engine: det_ζ(H(R_a) + ν²) by the Wronskian closed
//! form √(2/π)·a²·W(ψ_ν, φ_ν)(a), by the regularized resolvent-trace
//! integral log det_ζ = −2 ∫̶_ν^∞ z·Tr(H+z²)^{-1} dz, and the associated
//! identities: the regularized-limit constant log√(π/2), the
//! Dirichlet/Neumann ratio λ_α, the variation formula, and the Fredholm
//! eigenvalue-product comparison.

use crate::bessel::engine::bessel_ik;
use crate::error::{Error, Result};
use crate::operator::{
    boundary_initial_data, model_psi, solve_phi, solve_psi, wronskian_scaled, BoundaryCondition,
    OperatorSpec, Potential, Solution,
};
use crate::quad;
use crate::regfit::{self, ExpansionBasis};
use crate::scaled::Scaled;
use rayon::prelude::*;
use serde::Serialize;

/// √(2/π), the universal constant of the Wronskian formula.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// log √(π/2), the regularized limit of log(a²W(ψ_z, φ_z)(a)) as z → ∞.
pub const LOG_SQRT_PI_OVER_2: f64 = 0.225_791_352_644_727_43;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Wronskian,
    TraceIntegral,
    EigProduct,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DetDiagnostics {
    /// Fitted regularized-limit constant, when a fit was involved.
    pub lim_constant: Option<f64>,
    /// Condition number of the tail-expansion fit.
    pub fit_condition: Option<f64>,
    /// Residual of the tail-expansion fit (absolute rms).
    pub tail_bound: Option<f64>,
    /// Max relative drift of x²W(ψ, φ) over the sampled interval; the
    /// Wronskian is exactly constant, so this measures solver error.
    pub wronskian_drift: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetResult {
    pub value: f64,
    pub log_value: f64,
    pub method: Method,
    /// a²·W(ψ_ν, φ_ν)(a)
    pub wronskian_at_a: f64,
    /// False when the Wronskian vanishes (ν² at an eigenvalue); then
    /// value = 0 by convention.
    pub invertible: bool,
    pub diagnostics: DetDiagnostics,
}

/// a²W(ψ_z, φ_z)(a) computed from ψ alone: the Wronskian is constant in
/// x, and at x = a the φ data is the exact boundary data, so
/// a²W = ψ(a)·(x²φ′)(a) − ψ′(a)·a²·φ(a).
fn a2_wronskian_from_psi(spec: &OperatorSpec, psi: &Solution) -> Result<Scaled> {
    let (psi_a, psi_ap) = psi.eval(spec.a)?;
    let (f_a, g_a) = boundary_initial_data(spec);
    Ok(psi_a.scale(g_a).sub(psi_ap.scale(spec.a * spec.a * f_a)))
}

fn psi_at(spec: &OperatorSpec, z: f64) -> Result<Solution> {
    if spec.potential.is_zero() {
        model_psi(z, spec)
    } else {
        solve_psi(spec, z)
    }
}

/// det_ζ(H + ν²) = √(2/π)·a²·W(ψ_ν, φ_ν)(a), with ψ from the Volterra
/// construction and φ from the boundary-value ODE integration.
pub fn detz_wronskian(spec: &OperatorSpec) -> Result<DetResult> {
    let nu = spec.nu;
    let psi = solve_psi(spec, nu)?;
    let phi = solve_phi(spec, nu)?;
    let w = wronskian_scaled(&psi, &phi, spec.a)?;

    // Drift of the (exactly constant) Wronskian across the interval.
    let x_hi = psi.valid_interval.1.min(phi.valid_interval.1).min(spec.a + 8.0);
    let w_ref = w.value();
    let mut drift: f64 = 0.0;
    for i in 1..=4 {
        let x = spec.a + (x_hi - spec.a) * i as f64 / 4.0;
        let wx = wronskian_scaled(&psi, &phi, x)?.value();
        drift = drift.max(((wx - w_ref) / w_ref.abs().max(f64::MIN_POSITIVE)).abs());
    }

    // Invertibility: compare against the same combination with all signs
    // positive.
    let (f1, f1p) = psi.eval(spec.a)?;
    let (f2, f2p) = phi.eval(spec.a)?;
    let scale = f1
        .abs()
        .mul(f2p.abs())
        .add(f1p.abs().mul(f2.abs()))
        .scale(spec.a * spec.a)
        .value()
        .max(f64::MIN_POSITIVE);
    let invertible = (w_ref / scale).abs() > 1e-10;

    let value = if invertible { SQRT_2_OVER_PI * w_ref } else { 0.0 };
    Ok(DetResult {
        value,
        log_value: if invertible { value.abs().ln() } else { f64::NEG_INFINITY },
        method: Method::Wronskian,
        wronskian_at_a: w_ref,
        invertible,
        diagnostics: DetDiagnostics { wronskian_drift: Some(drift), ..Default::default() },
    })
}

/// Basis for z·Tr(H+z²)^{-1}: the trace expansion multiplied by z, with
/// two extra expansion rungs so the z^{-3} remainder does not alias into
/// the leading finite-part terms.
fn z_trace_basis() -> Result<ExpansionBasis> {
    ExpansionBasis::new(
        vec![
            (0.0, 1),
            (0.0, 0),
            (-1.0, 0),
            (-2.0, 1),
            (-2.0, 0),
            (-3.0, 1),
            (-3.0, 0),
            (-4.0, 1),
            (-4.0, 0),
        ],
        -5.0,
    )
}

/// Split point of the regularized z-integral: well inside the asymptotic
/// regime of the trace expansion.
fn z_split(spec: &OperatorSpec) -> f64 {
    40.0 * (spec.mu * spec.a).max(1.0)
}

/// log det_ζ(H + ν²) = −2 ∫̶_ν^∞ z·Tr(H + z²)^{-1} dz, evaluated with
/// adaptive quadrature up to the split and a fitted finite-part tail.
pub fn detz_trace_integral(spec: &OperatorSpec) -> Result<DetResult> {
    if !spec.potential.is_zero() {
        // Split off the perturbation: its determinant ratio against the
        // model operator is an absolutely convergent integral, which
        // avoids pushing the small O(z^{-2}) correction signal through
        // the ill-conditioned regularization fit.
        let model = OperatorSpec::model(spec.a, spec.mu, spec.bc, spec.nu);
        let base = detz_trace_integral(&model)?;
        let (ratio, tail) = perturbation_log_ratio(spec)?;
        let log_value = base.log_value + ratio;
        return Ok(DetResult {
            value: log_value.exp(),
            log_value,
            method: Method::TraceIntegral,
            wronskian_at_a: log_value.exp() / SQRT_2_OVER_PI,
            invertible: true,
            diagnostics: DetDiagnostics {
                fit_condition: base.diagnostics.fit_condition,
                tail_bound: Some(base.diagnostics.tail_bound.unwrap_or(0.0) + tail),
                ..Default::default()
            },
        });
    }
    let basis = z_trace_basis()?;
    let split = z_split(spec);
    // The integrand closure cannot return Result; record the first trace
    // failure and surface it after the integration.
    let failed: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
    let f = |z: f64| match crate::trace::resolvent_trace(spec, z) {
        Ok(t) => z * t,
        Err(e) => {
            let mut slot = failed.lock().unwrap();
            if slot.is_none() {
                *slot = Some(Error::numerical(format!("trace at z = {z}: {e}")));
            }
            0.0
        }
    };
    let integrated = regfit::reg_int_semiinf_detailed(f, spec.nu, &basis, split, 1e-9, 1e-9);
    if let Some(e) = failed.lock().unwrap().take() {
        return Err(e);
    }
    let (reg, model) = integrated?;
    let log_value = -2.0 * reg;
    Ok(DetResult {
        value: log_value.exp(),
        log_value,
        method: Method::TraceIntegral,
        wronskian_at_a: log_value.exp() / SQRT_2_OVER_PI,
        invertible: true,
        diagnostics: DetDiagnostics {
            fit_condition: Some(model.condition_number),
            tail_bound: Some(model.residual_rms),
            ..Default::default()
        },
    })
}

/// log det_ζ(H^V + ν²) − log det_ζ(H⁰ + ν²) = −2 ∫_ν^∞ z·ΔTr(z) dz with
/// ΔTr(z) = Tr(H^V+z²)^{-1} − Tr(H⁰+z²)^{-1} = O(z^{-3}): integrate over
/// doubling windows and close with a geometric remainder estimate once
/// the window increments decay steadily. Returns (value, tail bound).
fn perturbation_log_ratio(spec: &OperatorSpec) -> Result<(f64, f64)> {
    let failed: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
    let f = |z: f64| match crate::trace::trace_correction(spec, z) {
        Ok(d) => z * d,
        Err(e) => {
            let mut slot = failed.lock().unwrap();
            if slot.is_none() {
                *slot = Some(Error::numerical(format!("trace correction at z = {z}: {e}")));
            }
            0.0
        }
    };
    let mut lo = spec.nu;
    let mut hi = (2.0 * lo).max(8.0);
    let mut partials: Vec<f64> = Vec::new();
    let mut total = 0.0;
    // z·ΔTr ~ z^{-2} makes the octave increments nearly geometric with
    // ratio 1/2; Aitken Δ² on the partial sums removes the dominant
    // geometric tail, so the loop can stop once successive extrapolants
    // agree instead of integrating the tail out explicitly.
    let aitken = |s: &[f64]| -> Option<f64> {
        let n = s.len();
        if n < 3 {
            return None;
        }
        let (d1, d2) = (s[n - 1] - s[n - 2], s[n - 1] - 2.0 * s[n - 2] + s[n - 3]);
        if d2.abs() < 1e-300 {
            return Some(s[n - 1]);
        }
        Some(s[n - 1] - d1 * d1 / d2)
    };
    let mut prev_extrap: Option<f64> = None;
    let mut prev_inc: Option<f64> = None;
    for _ in 0..16 {
        // 0.1% per octave increment is ample for the extrapolation;
        // asking for more chases the inner quadrature's noise floor.
        let abs_tol = prev_inc.map_or(1e-9, |p: f64| (1e-3 * p.abs()).max(1e-11));
        let (inc, _) = quad::adaptive(&f, lo, hi, abs_tol, 1e-7)?;
        prev_inc = Some(inc);
        if let Some(e) = failed.lock().unwrap().take() {
            return Err(e);
        }
        total += inc;
        partials.push(total);
        if let Some(extrap) = aitken(&partials) {
            if let Some(p) = prev_extrap {
                let step = (extrap - p).abs();
                if step < (5e-6_f64).max(2e-4 * extrap.abs()) {
                    return Ok((-2.0 * extrap, 2.0 * step));
                }
            }
            prev_extrap = Some(extrap);
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(Error::numerical(format!(
        "perturbation ratio integral did not converge by z = {lo}"
    )))
}

/// Plain (convergent) log-ratio log det_ζ(H+ν₁²) − log det_ζ(H+ν₀²)
/// = 2 ∫_{ν₀}^{ν₁} z·Tr(H+z²)^{-1} dz; the divergent regularization
/// pieces cancel in the difference.
pub fn det_ratio_trace(spec: &OperatorSpec, nu0: f64, nu1: f64) -> Result<f64> {
    if !(nu0 >= 0.0 && nu1 >= nu0) {
        return Err(Error::domain("det_ratio_trace requires 0 <= nu0 <= nu1"));
    }
    let failed: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
    let f = |z: f64| match crate::trace::resolvent_trace(spec, z) {
        Ok(t) => z * t,
        Err(e) => {
            let mut slot = failed.lock().unwrap();
            if slot.is_none() {
                *slot = Some(Error::numerical(format!("trace at z = {z}: {e}")));
            }
            0.0
        }
    };
    let int = quad::adaptive(f, nu0, nu1, 1e-11, 1e-10);
    if let Some(e) = failed.lock().unwrap().take() {
        return Err(e);
    }
    Ok(2.0 * int?.0)
}

/// The regularized limit LIM_{z→∞} log(a²W(ψ_z, φ_z)(a)).
///
/// The fit keeps the four leading terms {z log z, z, log z, 1} and two
/// inverse-power rungs {z^{-1}, z^{-2}} to keep the Stirling-type O(1/z)
/// correction of log K_z from aliasing into the constant.
pub fn lim_log_wronskian(spec: &OperatorSpec) -> Result<f64> {
    let grid = crate::trace::default_z_grid(spec);
    let samples: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&z| {
            let psi = psi_at(spec, z)?;
            let w = a2_wronskian_from_psi(spec, &psi)?;
            if w.is_zero() {
                return Err(Error::numerical("vanishing Wronskian on the LIM z-grid"));
            }
            Ok((z, w.ln_abs()))
        })
        .collect::<Result<_>>()?;
    let basis = ExpansionBasis::new(
        vec![(1.0, 1), (1.0, 0), (0.0, 1), (0.0, 0), (-1.0, 0), (-2.0, 0)],
        -3.0,
    )?;
    let model = regfit::fit_expansion(&samples, &basis)?;
    regfit::reg_lim(&model)
}

/// λ_α = −√(p(a))·(α + ψ′_ν(a)/ψ_ν(a)) = det_ζ(Neumann)/det_ζ(Dirichlet).
/// ψ is fixed by its behavior at infinity and does not depend on the
/// boundary condition.
pub fn dirichlet_neumann_ratio(spec: &OperatorSpec, alpha: f64, nu: f64) -> Result<f64> {
    let psi = psi_at(spec, nu)?;
    let (psi_a, psi_ap) = psi.eval(spec.a)?;
    if psi_a.is_zero() {
        return Err(Error::numerical("psi(a) = 0: lambda_alpha undefined"));
    }
    Ok(-spec.a * (alpha + psi_ap.ratio(psi_a)))
}

/// The three independent computations of d/dt log det_ζ(H_t + ν²) at
/// t = 0 for H_t = H + t·direction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VariationCheck {
    /// Central finite difference of the trace-integral log-determinant.
    pub fd_trace_integral: f64,
    /// Central finite difference of log(a²W(ψ, φ)).
    pub fd_wronskian: f64,
    /// Tr(V̇·(H+ν²)^{-1}) = ∫ V̇(x)·G_ν(x) dx (Green-diagonal pairing).
    pub green_pairing: f64,
}

pub fn variation_check(
    spec: &OperatorSpec,
    direction: &Potential,
    t_step: f64,
) -> Result<VariationCheck> {
    if !(t_step > 0.0) {
        return Err(Error::domain("variation_check requires t_step > 0"));
    }
    if direction.is_zero() {
        return Ok(VariationCheck {
            fd_trace_integral: 0.0,
            fd_wronskian: 0.0,
            green_pairing: 0.0,
        });
    }
    let spec_at = |t: f64| -> OperatorSpec {
        let mut s = spec.clone();
        s.potential = spec.potential.add_scaled(direction, t, spec.a);
        s
    };
    let sp = spec_at(t_step);
    let sm = spec_at(-t_step);

    let fd_trace_integral = (detz_trace_integral(&sp)?.log_value
        - detz_trace_integral(&sm)?.log_value)
        / (2.0 * t_step);

    let wp = a2_wronskian_from_psi(&sp, &solve_psi(&sp, spec.nu)?)?;
    let wm = a2_wronskian_from_psi(&sm, &solve_psi(&sm, spec.nu)?)?;
    let fd_wronskian = (wp.ln_abs() - wm.ln_abs()) / (2.0 * t_step);

    let g = crate::trace::green_diag(spec, spec.nu)?;
    let cut = spec_at(1.0)
        .x_max()?
        .min(g.psi_valid_to());
    let (green_pairing, _) =
        quad::adaptive(|x| direction.value(x) * g.eval(x).unwrap_or(0.0), spec.a, cut, 1e-12, 1e-10)?;

    Ok(VariationCheck { fd_trace_integral, fd_wronskian, green_pairing })
}

/// Friedlander comparison: det_F(I + z·H^{-1}) = det_ζ(H+z)/det_ζ(H).
///
/// lhs = Π_{n≤N}(1 + z/λ_n) times the first-order tail correction
/// exp(z·Σ_{n>N} λ_n^{-1}), with the tail sum obtained from the exact
/// resolvent trace at z = 0 minus the partial sum. rhs is the ratio of
/// Wronskian determinants at ν = √z and ν = 0.
pub fn friedlander_check(spec: &OperatorSpec, z: f64, eigs: &[f64]) -> Result<(f64, f64)> {
    if z < 0.0 {
        return Err(Error::domain("friedlander_check requires z >= 0"));
    }
    if eigs.iter().any(|&l| l <= 0.0) {
        return Err(Error::domain("friedlander_check requires positive eigenvalues"));
    }
    let log_product: f64 = eigs.iter().map(|&l| (1.0 + z / l).ln()).sum();
    let partial_inv_sum: f64 = eigs.iter().map(|&l| 1.0 / l).sum();
    let trace_at_zero = crate::trace::resolvent_trace(spec, 0.0)?;
    let tail_sum = trace_at_zero - partial_inv_sum;
    let lhs = (log_product + z * tail_sum).exp();

    let mut s0 = spec.clone();
    s0.nu = 0.0;
    let mut sz = spec.clone();
    sz.nu = z.sqrt();
    let d0 = detz_wronskian(&s0)?;
    let dz = detz_wronskian(&sz)?;
    if !d0.invertible {
        return Err(Error::numerical("det at shift 0 vanishes; ratio undefined"));
    }
    Ok((lhs, dz.value / d0.value))
}

/// Closed-form model determinant for cross-checks: √(2/π)·K_ν(μa) for
/// Dirichlet, times λ_α for generalized Neumann.
pub fn model_det_closed_form(spec: &OperatorSpec) -> Result<f64> {
    let ba = bessel_ik(spec.nu, spec.mu * spec.a)?;
    let d = SQRT_2_OVER_PI * ba.k.value();
    match spec.bc {
        BoundaryCondition::Dirichlet => Ok(d),
        BoundaryCondition::GeneralizedNeumann { alpha } => {
            // ψ = x^{-1/2}K_ν(μx): ψ′/ψ(a) = −1/(2a) + μK′/K.
            let lam = -spec.a * (alpha - 0.5 / spec.a + spec.mu * ba.kp.ratio(ba.k));
            Ok(d * lam)
        }
    }
}
