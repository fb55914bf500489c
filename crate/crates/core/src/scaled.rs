//! Extended-range non-negative numbers `m · 2^e`.
//!
//! The growing algorithms keep unnormalized weights whose magnitudes drift
//! without bound over long horizons. Storing a mantissa in `[0.5, 1)` with a
//! separate integer exponent avoids underflow, and multiplying every prior by
//! a power of two only shifts the exponents, leaving every prediction
//! bit-identical.

use std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Scaled {
    m: f64,
    e: i64,
}

const EXP_SPLIT: f64 = 600.0;

impl Scaled {
    pub const ZERO: Scaled = Scaled { m: 0.0, e: 0 };

    pub fn new(x: f64) -> Self {
        debug_assert!(x >= 0.0 && x.is_finite());
        let (m, e) = frexp(x);
        Scaled { m, e }
    }

    pub fn is_zero(self) -> bool {
        self.m == 0.0
    }

    /// `self · c` for a finite `c ≥ 0`.
    pub fn mul(self, c: f64) -> Self {
        if self.m == 0.0 || c == 0.0 {
            return Scaled::ZERO;
        }
        let (m, e) = frexp(self.m * c);
        Scaled { m, e: self.e + e }
    }

    /// `self · exp(f)`; `f = −∞` gives zero.
    pub fn mul_exp(self, f: f64) -> Self {
        if self.m == 0.0 || f == f64::NEG_INFINITY {
            return Scaled::ZERO;
        }
        if f.abs() <= EXP_SPLIT {
            return self.mul(f.exp());
        }
        let q = (f / LN_2).round();
        let r = f - q * LN_2;
        let mut out = self.mul(r.exp());
        out.e += q as i64;
        out
    }

    pub fn add(self, other: Scaled) -> Self {
        if self.m == 0.0 {
            return other;
        }
        if other.m == 0.0 {
            return self;
        }
        let e = self.e.max(other.e);
        let (m, de) = frexp(ldexp(self.m, self.e - e) + ldexp(other.m, other.e - e));
        Scaled { m, e: e + de }
    }

    /// The value relative to `2^reference`, as a plain float.
    pub fn relative_to(self, reference: i64) -> f64 {
        ldexp(self.m, self.e - reference)
    }

    pub fn ln(self) -> f64 {
        self.m.ln() + self.e as f64 * LN_2
    }
}

/// Largest exponent among non-zero entries.
pub(crate) fn max_exponent(xs: impl IntoIterator<Item = Scaled>) -> Option<i64> {
    xs.into_iter().filter(|x| !x.is_zero()).map(|x| x.e).max()
}

/// Splits a finite non-negative `x` into `m ∈ [0.5, 1)` and `e` with `x = m · 2^e`.
pub(crate) fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 {
        return (0.0, 0);
    }
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal
        let (m, e) = frexp(x * f64::from_bits(0x43f0_0000_0000_0000)); // 2^64
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, raw - 1022)
}

/// `x · 2^n`, exact unless the result leaves the normal range.
pub(crate) fn ldexp(mut x: f64, mut n: i64) -> f64 {
    const STEP: i64 = 1000;
    let up = f64::from_bits(((1023 + STEP) as u64) << 52);
    let down = f64::from_bits(((1023 - STEP) as u64) << 52);
    while n > STEP {
        x *= up;
        n -= STEP;
        if x.is_infinite() {
            return x;
        }
    }
    while n < -STEP {
        x *= down;
        n += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * f64::from_bits(((1023 + n) as u64) << 52)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frexp_round_trip() {
        for &x in &[1.0, 0.75, 3.0, 1e-300, 5e-320, 1e300, f64::MIN_POSITIVE] {
            let (m, e) = frexp(x);
            assert!((0.5..1.0).contains(&m), "{x}");
            assert_eq!(ldexp(m, e), x);
        }
    }

    #[test]
    fn arithmetic() {
        let a = Scaled::new(3.0).mul_exp(-2000.0);
        assert!(!a.is_zero());
        assert!((a.ln() - (3f64.ln() - 2000.0)).abs() < 1e-9);
        let b = a.add(a);
        assert!((b.ln() - (6f64.ln() - 2000.0)).abs() < 1e-9);
        assert_eq!(Scaled::new(2.0).relative_to(1), 1.0);
        assert!(Scaled::new(1.0).mul_exp(f64::NEG_INFINITY).is_zero());
    }

    #[test]
    fn power_of_two_scaling_only_shifts_exponent() {
        let x = Scaled::new(0.3).mul_exp(-1.7).add(Scaled::new(0.9));
        let y = Scaled::new(0.3 * 1024.0).mul_exp(-1.7).add(Scaled::new(0.9 * 1024.0));
        assert_eq!(x.m, y.m);
        assert_eq!(x.e + 10, y.e);
    }
}
