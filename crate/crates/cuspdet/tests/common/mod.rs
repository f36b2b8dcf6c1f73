//! Shared helpers for the integration tests.
#![allow(dead_code)]

pub mod oracle;

/// |a − b| relative to max(|a|, |b|, floor).
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
