//! The Bessel engine against two independent oracles: a pinned
//! high-precision table and in-test 512-bit evaluations of the
//! half-integer closed forms.

mod common;

use astro_float::Consts;
use cuspdet::bessel::{self, engine::bessel_ik};
use common::oracle;

/// Tolerance on log values; a difference of t in logs is a relative
/// error of about t in the values.
const LN_TOL: f64 = 1e-11;

#[test]
fn engine_matches_pinned_table() {
    let mut worst: f64 = 0.0;
    for &(order, x, ln_i, ln_k, ln_ip, ln_km) in oracle::LN_IK_TABLE {
        let b = bessel_ik(order, x).unwrap();
        for (name, got, want) in [
            ("I", b.i.ln_abs(), ln_i),
            ("K", b.k.ln_abs(), ln_k),
            ("I'", b.ip.ln_abs(), ln_ip),
            ("-K'", b.kp.neg().ln_abs(), ln_km),
        ] {
            let d = (got - want).abs();
            worst = worst.max(d);
            assert!(
                d < LN_TOL,
                "ln {name} at (nu, x) = ({order}, {x}): engine {got}, oracle {want}"
            );
        }
        assert!(b.i.value().is_sign_positive() || b.i.is_zero());
        assert!(b.kp.value() < 0.0, "K' must be negative at ({order}, {x})");
    }
    println!("pinned-table worst log deviation: {worst:.3e}");
}

#[test]
fn engine_matches_half_integer_closed_forms() {
    let mut cc = Consts::new().unwrap();
    let mut worst: f64 = 0.0;
    for n in 0..=5 {
        let order = n as f64 + 0.5;
        for &x in &[0.05, 0.7, 3.1, 12.0, 80.0] {
            let (ln_i, ln_k, ln_ip, ln_km) = oracle::half_integer_ln_ik(n, x, &mut cc);
            let b = bessel_ik(order, x).unwrap();
            for (name, got, want) in [
                ("I", b.i.ln_abs(), ln_i),
                ("K", b.k.ln_abs(), ln_k),
                ("I'", b.ip.ln_abs(), ln_ip),
                ("-K'", b.kp.neg().ln_abs(), ln_km),
            ] {
                let d = (got - want).abs();
                worst = worst.max(d);
                assert!(
                    d < LN_TOL,
                    "ln {name} at (nu, x) = ({order}, {x}): engine {got}, closed form {want}"
                );
            }
        }
    }
    println!("half-integer worst log deviation: {worst:.3e}");
}

/// The two oracle sources agree with each other where they overlap,
/// which certifies both generation paths.
#[test]
fn oracle_sources_agree() {
    let mut cc = Consts::new().unwrap();
    for &(order, x, ln_i, ln_k, _, _) in oracle::LN_IK_TABLE {
        if order.fract() != 0.5 {
            continue;
        }
        let n = (order - 0.5) as usize;
        let (oi, ok, _, _) = oracle::half_integer_ln_ik(n, x, &mut cc);
        assert!((oi - ln_i).abs() < 1e-13, "ln I oracle mismatch at ({order}, {x})");
        assert!((ok - ln_k).abs() < 1e-13, "ln K oracle mismatch at ({order}, {x})");
    }
}

#[test]
fn large_argument_expansion_matches_table() {
    for &(order, x, ln_i, ln_k, _, _) in oracle::LN_IK_TABLE {
        if x < 40.0 || x < 4.0 * order * order {
            continue;
        }
        let (i, _) = bessel::i_large_arg(order, x, 12).unwrap();
        let (k, _) = bessel::k_large_arg(order, x, 12).unwrap();
        assert!((i.ln_abs() - ln_i).abs() < 1e-10, "large-arg I at ({order}, {x})");
        assert!((k.ln_abs() - ln_k).abs() < 1e-10, "large-arg K at ({order}, {x})");
    }
}

#[test]
fn uniform_expansion_matches_table_at_large_order() {
    for &(order, x, ln_i, ln_k, _, _) in oracle::LN_IK_TABLE {
        if order < 20.0 {
            continue;
        }
        let t = x / order;
        let (i, ei) = bessel::uniform_i(order, t, 3).unwrap();
        let (k, ek) = bessel::uniform_k(order, t, 3).unwrap();
        let (p, ep) = bessel::uniform_product(order, t, 2).unwrap();
        // The expansion's own error estimate must bound the true error
        // (with headroom for the estimate being asymptotic itself).
        for (name, diff, est) in [
            ("I", (i.ln_abs() - ln_i).abs(), ei),
            ("K", (k.ln_abs() - ln_k).abs(), ek),
            ("product", (p.ln() - (ln_i + ln_k)).abs(), ep),
        ] {
            assert!(est < 1e-4, "uniform {name} estimate too loose at ({order}, {x})");
            assert!(
                diff < 10.0 * est + 1e-9,
                "uniform {name} at ({order}, {x}): diff {diff:.3e} vs estimate {est:.3e}"
            );
        }
    }
}
