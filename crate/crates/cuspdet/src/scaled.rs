//! Exponentially scaled floating point values.
//!
//! Bessel functions of large order or argument overflow/underflow f64 long
//! before the quantities we actually need (Wronskians, Green functions,
//! ratios) do. All internal special-function work therefore carries values
//! as `mantissa * exp(log_scale)` and only collapses to plain f64 at the end.

/// A nonnegative quantity represented as `mantissa * exp(log_scale)`.
///
/// The mantissa is kept in roughly `[1/e, e)` by `normalize`; zero is
/// represented as `(0.0, 0.0)`. Negative quantities carry a negative
/// mantissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mantissa: 0.0, log_scale: 0.0 };

    pub fn new(mantissa: f64, log_scale: f64) -> Self {
        Scaled { mantissa, log_scale }.normalize()
    }

    pub fn from_f64(v: f64) -> Self {
        Scaled { mantissa: v, log_scale: 0.0 }.normalize()
    }

    /// Value as `exp(log_value)` for a positive quantity given in log form.
    pub fn from_ln(ln: f64) -> Self {
        Scaled { mantissa: 1.0, log_scale: ln }
    }

    pub fn normalize(self) -> Self {
        if self.mantissa == 0.0 {
            return Scaled::ZERO;
        }
        let a = self.mantissa.abs();
        if (0.36787944117144233..2.718281828459045).contains(&a) {
            return self;
        }
        let shift = a.ln();
        Scaled {
            mantissa: self.mantissa / shift.exp(),
            log_scale: self.log_scale + shift,
        }
    }

    /// Collapse to f64; returns `inf`/`0` on over/underflow of the exponent.
    pub fn value(self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    /// Natural log of the absolute value.
    pub fn ln_abs(self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0.0
    }

    pub fn abs(self) -> Self {
        Scaled { mantissa: self.mantissa.abs(), log_scale: self.log_scale }
    }

    pub fn neg(self) -> Self {
        Scaled { mantissa: -self.mantissa, log_scale: self.log_scale }
    }

    pub fn mul(self, other: Scaled) -> Self {
        Scaled {
            mantissa: self.mantissa * other.mantissa,
            log_scale: self.log_scale + other.log_scale,
        }
        .normalize()
    }

    pub fn div(self, other: Scaled) -> Self {
        Scaled {
            mantissa: self.mantissa / other.mantissa,
            log_scale: self.log_scale - other.log_scale,
        }
        .normalize()
    }

    pub fn scale(self, factor: f64) -> Self {
        Scaled { mantissa: self.mantissa * factor, log_scale: self.log_scale }.normalize()
    }

    pub fn add(self, other: Scaled) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        // Align to the larger exponent; the smaller contribution may flush
        // to zero, which is the correct rounding.
        let (hi, lo) = if self.log_scale >= other.log_scale {
            (self, other)
        } else {
            (other, self)
        };
        let m = hi.mantissa + lo.mantissa * (lo.log_scale - hi.log_scale).exp();
        Scaled { mantissa: m, log_scale: hi.log_scale }.normalize()
    }

    pub fn sub(self, other: Scaled) -> Self {
        self.add(other.neg())
    }

    /// Ratio self/other collapsed to f64.
    pub fn ratio(self, other: Scaled) -> f64 {
        self.div(other).value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_arithmetic() {
        let a = Scaled::from_f64(3.5);
        let b = Scaled::from_f64(-1.25);
        assert!((a.mul(b).value() + 4.375).abs() < 1e-15);
        assert!((a.add(b).value() - 2.25).abs() < 1e-15);
        assert!((a.div(b).value() + 2.8).abs() < 1e-15);
    }

    #[test]
    fn huge_exponents() {
        let a = Scaled::new(1.3, 2000.0);
        let b = Scaled::new(0.9, -1990.0);
        let p = a.mul(b);
        assert!((p.ln_abs() - (1.3f64 * 0.9).ln() - 10.0).abs() < 1e-12);
        assert_eq!(a.value(), f64::INFINITY);
        assert!((a.div(a).value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn add_disparate_scales() {
        let a = Scaled::new(1.0, 100.0);
        let b = Scaled::new(1.0, 0.0);
        let s = a.add(b);
        assert!((s.ln_abs() - 100.0).abs() < 1e-12);
    }
}
