//! Acceptance battery: one test per release criterion, each printing a
//! single `[criterion N] pass/fail` line with the pinned tolerance it
//! enforces. Tolerances here are contractual — do not loosen them to
//! make a run green; a red line means the underlying claim failed.

mod common;

use std::time::Instant;

use cuspdet::bessel::{self, engine::bessel_ik};
use cuspdet::detz::{
    detz_trace_integral, detz_wronskian, dirichlet_neumann_ratio, friedlander_check,
    lim_log_wronskian, variation_check,
};
use cuspdet::operator::{solve_psi, BoundaryCondition, OperatorSpec, Potential};
use cuspdet::spectral::{fd_eigenvalues_unguarded, weyl_check};
use cuspdet::trace::fit_trace_expansion;
use rayon::prelude::*;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
/// log √(π/2).
const LOG_SQRT_PI_OVER_2: f64 = 0.225_791_352_644_727_43;

/// Print the verdict line and panic on failure, keeping the printed
/// record even when the assertion fires.
fn verdict(n: usize, name: &str, ok: bool, detail: &str) {
    let tag = if ok { "pass" } else { "FAIL" };
    println!("[criterion {n}] {tag} — {name}: {detail}");
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

/// Criterion 1 — model determinant closed form.
///
/// det_ζ(H + ν²) from the Wronskian of the constructed solutions equals
/// √(2/π)·K_ν(μa) within 1e-8 relative, over (μ, a) ∈ {½,1,2}×{½,1},
/// ν ∈ {1, 2}, Dirichlet. Runtime under 5 s.
#[test]
fn criterion_01_model_determinant_closed_form() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for &mu in &[0.5, 1.0, 2.0] {
        for &a in &[0.5, 1.0] {
            for &nu in &[1.0, 2.0] {
                let spec = OperatorSpec::model(a, mu, BoundaryCondition::Dirichlet, nu);
                let det = detz_wronskian(&spec).unwrap();
                let want = SQRT_2_OVER_PI * bessel_ik(nu, mu * a).unwrap().k.value();
                worst = worst.max(common::rel_err(det.value, want));
            }
        }
    }
    let dt = start.elapsed().as_secs_f64();
    verdict(
        1,
        "model determinant vs closed form",
        worst < 1e-8 && dt < 5.0,
        &format!("worst rel err {worst:.3e} (tol 1e-8), runtime {dt:.2}s (budget 5s)"),
    );
}

/// Criterion 2 — trace-expansion coefficients at μ = a = 1.
///
/// Fitted (b₀, a₀) = (0.5, ½·log 2) within 2e-3 and a₁ = +0.25
/// (Dirichlet) / −0.25 (Neumann) within 2e-2 on the z-grid [20, 400].
/// Runtime under 60 s.
#[test]
fn criterion_02_trace_expansion_coefficients() {
    let start = Instant::now();
    let b0_want = 0.5;
    let a0_want = 0.5 * 2.0_f64.ln();
    let mut detail = String::new();
    let mut ok = true;
    for (bc, a1_want) in [
        (BoundaryCondition::Dirichlet, 0.25),
        (BoundaryCondition::GeneralizedNeumann { alpha: 0.0 }, -0.25),
    ] {
        let spec = OperatorSpec::model(1.0, 1.0, bc, 1.0);
        let fit = fit_trace_expansion(&spec, &[]).unwrap();
        let (db0, da0, da1) =
            ((fit.b0 - b0_want).abs(), (fit.a0 - a0_want).abs(), (fit.a1 - a1_want).abs());
        ok &= db0 < 2e-3 && da0 < 2e-3 && da1 < 2e-2;
        detail.push_str(&format!(
            "{bc:?}: |Δb0| {db0:.2e}, |Δa0| {da0:.2e} (tol 2e-3), a1 {:.4} vs {a1_want} \
             → |Δa1| {da1:.2e} (tol 2e-2); ",
            fit.a1
        ));
    }
    let dt = start.elapsed().as_secs_f64();
    detail.push_str(&format!("runtime {dt:.1}s (budget 60s)"));
    verdict(2, "trace expansion coefficients", ok && dt < 60.0, &detail);
}

/// Criterion 3 — cross-method consistency across the full matrix.
///
/// Trace-integral and Wronskian determinants agree within 1e-3 relative
/// on every cell of the consistency matrix, including the perturbed
/// potentials. Runtime under 10 min.
#[test]
fn criterion_03_cross_method_consistency() {
    let start = Instant::now();
    let specs = cuspdet::cli::comparison_matrix();
    let worst = specs
        .par_iter()
        .map(|spec| {
            let dw = detz_wronskian(spec).unwrap();
            let dti = detz_trace_integral(spec).unwrap();
            common::rel_err(dti.value, dw.value)
        })
        .reduce(|| 0.0, f64::max);
    let dt = start.elapsed().as_secs_f64();
    verdict(
        3,
        "cross-method consistency",
        worst < 1e-3 && dt < 600.0,
        &format!(
            "{} cells, worst rel diff {worst:.3e} (tol 1e-3), runtime {dt:.1}s (budget 600s)",
            specs.len()
        ),
    );
}

/// Criterion 4 — regularized limit of the log Wronskian.
///
/// LIM_{z→∞} [log a²W(ψ_z, φ_z)(a) + (counterterms)] = log √(π/2)
/// within 1e-3 for Dirichlet, Neumann(0), Neumann(1), and a perturbed
/// potential.
#[test]
fn criterion_04_lim_constant() {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for (label, bc, pot) in [
        ("D", BoundaryCondition::Dirichlet, Potential::zero()),
        ("N(0)", BoundaryCondition::GeneralizedNeumann { alpha: 0.0 }, Potential::zero()),
        ("N(1)", BoundaryCondition::GeneralizedNeumann { alpha: 1.0 }, Potential::zero()),
        ("D+V", BoundaryCondition::Dirichlet, Potential::power_exp(0.3, 0.5, 1.0)),
    ] {
        let mut spec = OperatorSpec::model(1.0, 1.0, bc, 1.0);
        spec.potential = pot;
        let lim = lim_log_wronskian(&spec).unwrap();
        let d = (lim - LOG_SQRT_PI_OVER_2).abs();
        worst = worst.max(d);
        detail.push_str(&format!("{label}: |Δ| {d:.2e}; "));
    }
    detail.push_str("(tol 1e-3)");
    verdict(4, "lim of log Wronskian = log sqrt(pi/2)", worst < 1e-3, &detail);
}

/// Criterion 5 — Dirichlet/Neumann determinant ratio.
///
/// det_ζ,N / det_ζ,D = λ_α = −a(α + ψ′/ψ(a)) within 1e-8 from the
/// Wronskian determinants, and within 1e-3 when both determinants come
/// from the regularized trace integral.
#[test]
fn criterion_05_dirichlet_neumann_ratio() {
    let mut worst_w: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for &alpha in &[0.0, 1.0] {
        let spec_d = OperatorSpec::model(1.0, 1.0, BoundaryCondition::Dirichlet, 1.0);
        let spec_n =
            OperatorSpec::model(1.0, 1.0, BoundaryCondition::GeneralizedNeumann { alpha }, 1.0);
        let lambda = dirichlet_neumann_ratio(&spec_d, alpha, spec_d.nu).unwrap();
        let rw = detz_wronskian(&spec_n).unwrap().value / detz_wronskian(&spec_d).unwrap().value;
        let rt =
            detz_trace_integral(&spec_n).unwrap().value / detz_trace_integral(&spec_d).unwrap().value;
        worst_w = worst_w.max(common::rel_err(rw, lambda));
        worst_t = worst_t.max(common::rel_err(rt, lambda));
    }
    verdict(
        5,
        "Dirichlet/Neumann ratio = lambda_alpha",
        worst_w < 1e-8 && worst_t < 1e-3,
        &format!(
            "Wronskian route worst {worst_w:.3e} (tol 1e-8), trace route worst {worst_t:.3e} (tol 1e-3)"
        ),
    );
}

/// Criterion 6 — variation formula.
///
/// d/dt log det_ζ(H_t + ν²) at t = 0 along V̇ = 0.3·x^{1/2}e^{−x}, by
/// (i) finite differences of the trace-integral determinant, (ii) finite
/// differences of the log Wronskian, (iii) the Green-diagonal pairing
/// Tr(V̇·(H+ν²)^{-1}); pairwise within 1e-4.
#[test]
fn criterion_06_variation_formula() {
    let spec = OperatorSpec::model(1.0, 1.0, BoundaryCondition::Dirichlet, 1.0);
    let direction = Potential::power_exp(0.3, 0.5, 1.0);
    let v = variation_check(&spec, &direction, 0.25).unwrap();
    let d12 = (v.fd_trace_integral - v.fd_wronskian).abs();
    let d13 = (v.fd_trace_integral - v.green_pairing).abs();
    let d23 = (v.fd_wronskian - v.green_pairing).abs();
    let worst = d12.max(d13).max(d23);
    verdict(
        6,
        "variation formula, three routes",
        worst < 1e-4,
        &format!(
            "fd-trace {:.8}, fd-wronskian {:.8}, green-pairing {:.8}; worst pairwise {worst:.3e} (tol 1e-4)",
            v.fd_trace_integral, v.fd_wronskian, v.green_pairing
        ),
    );
}

/// Criterion 7 — Fredholm determinant vs eigenvalue product.
///
/// At z = 4 for the μ = a = 1 Dirichlet model, the product over the 200
/// lowest finite-difference eigenvalues (R = 40, n = 8000, Richardson),
/// completed by the exact-trace tail factor, matches
/// det_ζ(H+z)/det_ζ(H) within 1e-3. Runtime under 2 min.
#[test]
fn criterion_07_fredholm_eigenproduct() {
    let start = Instant::now();
    let spec = OperatorSpec::model(1.0, 1.0, BoundaryCondition::Dirichlet, 1.0);
    let disc = fd_eigenvalues_unguarded(&spec, 40.0, 8000, 200).unwrap();
    let (lhs, rhs) = friedlander_check(&spec, 4.0, &disc.eigs).unwrap();
    let rel = (lhs / rhs - 1.0).abs();
    let dt = start.elapsed().as_secs_f64();
    verdict(
        7,
        "Fredholm product vs determinant ratio",
        rel < 1e-3 && dt < 120.0,
        &format!(
            "product {lhs:.8}, ratio {rhs:.8}, |lhs/rhs - 1| {rel:.3e} (tol 1e-3), \
             runtime {dt:.1}s (budget 120s)"
        ),
    );
}

/// Criterion 8 — Weyl counting law.
///
/// N(λ)·2π/(√λ·log λ) lies in [0.7, 1.3] at the largest certified
/// λ ≥ 1e4 and trends toward 1 over the top of the range; documented
/// fallback to λ ≥ 1e3 with [0.6, 1.4] if the 1e4 run exceeds 5 min.
#[test]
fn criterion_08_weyl_law() {
    let spec = OperatorSpec::model(1.0, 1.0, BoundaryCondition::Dirichlet, 1.0);
    let start = Instant::now();
    let wc = weyl_check(&spec, 1.0e4).unwrap();
    let dt = start.elapsed().as_secs_f64();
    let (band, lam_top) = if dt <= 300.0 {
        ((0.7, 1.3), 1.0e4)
    } else {
        // Documented fallback: the full-range run blew the 5-minute
        // budget on this host; certify the smaller range instead.
        println!("[criterion 8] note: 1e4 run took {dt:.0}s; falling back to lambda = 1e3");
        ((0.6, 1.4), 1.0e3)
    };
    let wc = if lam_top < 1.0e4 { weyl_check(&spec, lam_top).unwrap() } else { wc };
    let ratio = wc.ratio_at_top;
    // Trend: the ratio at the top must be at least as close to 1 as a
    // sample a quarter of the way up the grid (with mild slack).
    let quarter = &wc.samples[wc.samples.len() / 4];
    let ratio_quarter = quarter.1 / quarter.2;
    let trending = (ratio - 1.0).abs() <= (ratio_quarter - 1.0).abs() + 0.05;
    verdict(
        8,
        "Weyl counting ratio",
        ratio >= band.0 && ratio <= band.1 && trending,
        &format!(
            "ratio {ratio:.4} at lambda = {lam_top:.0} (band [{}, {}]), \
             ratio {ratio_quarter:.4} at lambda = {:.0}, runtime {dt:.1}s",
            band.0, band.1, quarter.0
        ),
    );
}

/// Criterion 9 — Bessel property battery on fixed grids.
///
/// Wronskian identity within 1e-10 over the sampled (ν, x) rectangle;
/// cross-regime overlap (engine vs large-argument and uniform
/// expansions) within 1e-8; monotonicity in x and ν.
#[test]
fn criterion_09_bessel_property_suite() {
    let orders = [0.0, 0.25, 0.5, 1.0, 1.5, 2.5, 5.0, 10.0, 20.0, 35.0];
    let xs: Vec<f64> =
        (0..20).map(|i| 0.05 * (250.0_f64 / 0.05).powf(i as f64 / 19.0)).collect();

    let mut worst_w: f64 = 0.0;
    for &nu in &orders {
        for &x in &xs {
            let b = bessel_ik(nu, x).unwrap();
            let w = b.i.mul(b.kp).sub(b.ip.mul(b.k)).value();
            worst_w = worst_w.max(common::rel_err(w, -1.0 / x));
        }
    }

    // Overlap 1: series/CF engine vs the large-argument expansion deep
    // in the joint regime.
    let mut worst_o: f64 = 0.0;
    for &nu in &[0.0, 0.5, 1.0, 2.0, 3.5] {
        for &x in &[60.0, 120.0, 250.0] {
            let b = bessel_ik(nu, x).unwrap();
            let (i, _) = bessel::i_large_arg(nu, x, 14).unwrap();
            let (k, _) = bessel::k_large_arg(nu, x, 14).unwrap();
            worst_o = worst_o.max((b.i.ln_abs() - i.ln_abs()).abs());
            worst_o = worst_o.max((b.k.ln_abs() - k.ln_abs()).abs());
        }
    }
    // Overlap 2: engine vs the uniform large-order expansion at orders
    // where its truncation estimate is below the overlap tolerance.
    for &nu in &[500.0, 1000.0] {
        for &t in &[0.7, 1.3] {
            let b = bessel_ik(nu, nu * t).unwrap();
            let (i, ei) = bessel::uniform_i(nu, t, 3).unwrap();
            let (k, ek) = bessel::uniform_k(nu, t, 3).unwrap();
            assert!(ei < 1e-9 && ek < 1e-9, "uniform estimate too loose at ({nu}, {t})");
            worst_o = worst_o.max((b.i.ln_abs() - i.ln_abs()).abs());
            worst_o = worst_o.max((b.k.ln_abs() - k.ln_abs()).abs());
        }
    }

    // Monotonicity on the same grids: K falls and I rises in x; K rises
    // and I falls in ν.
    let mut mono = true;
    for &nu in &orders {
        for w in xs.windows(2) {
            let (b1, b2) = (bessel_ik(nu, w[0]).unwrap(), bessel_ik(nu, w[1]).unwrap());
            mono &= b2.k.ln_abs() < b1.k.ln_abs() && b2.i.ln_abs() > b1.i.ln_abs();
        }
    }
    for &x in &xs {
        for w in orders.windows(2) {
            let (b1, b2) = (bessel_ik(w[0], x).unwrap(), bessel_ik(w[1], x).unwrap());
            mono &= b2.k.ln_abs() > b1.k.ln_abs() && b2.i.ln_abs() < b1.i.ln_abs();
        }
    }

    verdict(
        9,
        "Bessel property battery",
        worst_w < 1e-10 && worst_o < 1e-8 && mono,
        &format!(
            "Wronskian worst {worst_w:.3e} (tol 1e-10), overlap worst {worst_o:.3e} (tol 1e-8), \
             monotonicity {}",
            if mono { "holds" } else { "VIOLATED" }
        ),
    );
}

/// Criterion 10 — Volterra convergence envelope.
///
/// For potentials with ‖W‖₁ = ∫|V|/x² ∈ {0.05, 0.2, 0.5}, the sup-norm
/// Neumann-iteration increments sit under the factorial envelope
/// ρ^{k+1}/(k+1)! with ρ = ∫ |W(y)|·y·I_z(μy)K_z(μy) dy.
#[test]
fn criterion_10_volterra_envelope() {
    let z = 1.0;
    let mut ok = true;
    let mut detail = String::new();
    for &target in &[0.05, 0.2, 0.5] {
        let mut spec = OperatorSpec::model(1.0, 1.0, BoundaryCondition::Dirichlet, z);
        let unit = Potential::power_exp(1.0, 0.5, 1.0);
        let (norm_unit, _) = cuspdet::quad::adaptive(
            |x| unit.value(x) / (x * x),
            spec.a,
            60.0,
            1e-12,
            1e-10,
        )
        .unwrap();
        spec.potential = Potential::power_exp(target / norm_unit, 0.5, 1.0);

        // ρ = ∫ |W|·y·I K dy bounds each Volterra kernel application.
        let (rho, _) = cuspdet::quad::adaptive(
            |y| {
                let b = bessel_ik(z, spec.mu * y).unwrap();
                (spec.potential.value(y) / (y * y)).abs() * y * b.i.mul(b.k).value()
            },
            spec.a,
            60.0,
            1e-12,
            1e-10,
        )
        .unwrap();

        let sol = solve_psi(&spec, z).unwrap();
        let mut fact = 1.0;
        let mut worst_ratio: f64 = 0.0;
        for (k, &inc) in sol.diagnostics.volterra_increments.iter().enumerate() {
            fact *= (k + 1) as f64;
            let envelope = rho.powi(k as i32 + 1) / fact;
            // Slack for grid quadrature error; the floor keeps the
            // terminal ~1e-13 increments from tripping on roundoff.
            worst_ratio = worst_ratio.max(inc / (1.2 * envelope + 1e-12));
        }
        ok &= worst_ratio <= 1.0;
        detail.push_str(&format!(
            "|W|_1 = {target}: rho {rho:.3}, {} increments, worst inc/envelope {worst_ratio:.3}; ",
            sol.diagnostics.volterra_increments.len()
        ));
    }
    verdict(10, "Volterra factorial envelope", ok, &detail);
}
