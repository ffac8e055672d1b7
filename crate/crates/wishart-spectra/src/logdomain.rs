//! Sign + log-magnitude scalars and compensated accumulation.
//!
//! Prefactors in the closed-form densities multiply eigenvalue products,
//! factorials and powers spanning hundreds of orders of magnitude; every such
//! factor is carried as `sign * exp(ln)` and sums are accumulated linearly
//! relative to a running reference exponent, with the total absolute mass
//! tracked so the caller can estimate how many digits were lost to
//! cancellation.

use crate::dd::Dd;

/// A real number represented as `sign * exp(ln)`. `sign == 0` means exactly 0.
#[derive(Clone, Copy, Debug)]
pub struct SignedLog {
    pub sign: i8,
    pub ln: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        ln: f64::NEG_INFINITY,
    };
    pub const ONE: SignedLog = SignedLog { sign: 1, ln: 0.0 };

    pub fn from_f64(x: f64) -> SignedLog {
        if x == 0.0 {
            SignedLog::ZERO
        } else {
            SignedLog {
                sign: if x > 0.0 { 1 } else { -1 },
                ln: x.abs().ln(),
            }
        }
    }

    pub fn from_parts(sign: i8, ln: f64) -> SignedLog {
        if sign == 0 {
            SignedLog::ZERO
        } else {
            SignedLog { sign, ln }
        }
    }

    pub fn to_f64(self) -> f64 {
        self.sign as f64 * self.ln.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    #[must_use]
    pub fn mul(self, o: SignedLog) -> SignedLog {
        if self.sign == 0 || o.sign == 0 {
            return SignedLog::ZERO;
        }
        SignedLog {
            sign: self.sign * o.sign,
            ln: self.ln + o.ln,
        }
    }

    #[must_use]
    pub fn div(self, o: SignedLog) -> SignedLog {
        debug_assert!(o.sign != 0, "division by log-domain zero");
        if self.sign == 0 {
            return SignedLog::ZERO;
        }
        SignedLog {
            sign: self.sign * o.sign,
            ln: self.ln - o.ln,
        }
    }

    #[must_use]
    pub fn neg(self) -> SignedLog {
        SignedLog {
            sign: -self.sign,
            ln: self.ln,
        }
    }

    #[must_use]
    pub fn powi(self, k: i32) -> SignedLog {
        if self.sign == 0 {
            return if k == 0 { SignedLog::ONE } else { SignedLog::ZERO };
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        SignedLog {
            sign,
            ln: self.ln * k as f64,
        }
    }
}

/// ln(k!) by direct product; exact-ish for the small k used here.
pub fn ln_factorial(k: usize) -> f64 {
    let mut acc = 0.0;
    for i in 2..=k {
        acc += (i as f64).ln();
    }
    acc
}

/// Compensated accumulator for sums of `SignedLog` terms.
///
/// Terms are rescaled to the largest exponent seen so far and summed with
/// Neumaier compensation; `abs_mass` collects the sum of magnitudes so the
/// relative cancellation can be reported.
#[derive(Clone, Debug)]
pub struct LogAccumulator {
    ln_ref: f64,
    sum: f64,
    comp: f64,
    abs_mass: f64,
    terms: usize,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        LogAccumulator {
            ln_ref: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
            abs_mass: 0.0,
            terms: 0,
        }
    }

    fn rescale(&mut self, new_ref: f64) {
        if self.ln_ref.is_finite() {
            let f = (self.ln_ref - new_ref).exp();
            self.sum *= f;
            self.comp *= f;
            self.abs_mass *= f;
        }
        self.ln_ref = new_ref;
    }

    pub fn add(&mut self, t: SignedLog) {
        if t.sign == 0 || t.ln == f64::NEG_INFINITY {
            return;
        }
        if t.ln > self.ln_ref {
            self.rescale(t.ln);
        }
        let v = t.sign as f64 * (t.ln - self.ln_ref).exp();
        // Neumaier
        let s = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - s) + v;
        } else {
            self.comp += (v - s) + self.sum;
        }
        self.sum = s;
        self.abs_mass += v.abs();
        self.terms += 1;
    }

    pub fn value(&self) -> SignedLog {
        let v = self.sum + self.comp;
        if v == 0.0 || !self.ln_ref.is_finite() {
            return SignedLog::ZERO;
        }
        SignedLog {
            sign: if v > 0.0 { 1 } else { -1 },
            ln: self.ln_ref + v.abs().ln(),
        }
    }

    /// Estimated relative rounding error of the accumulated value:
    /// (sum of |terms| / |sum|) * machine epsilon.
    pub fn relative_error_estimate(&self) -> f64 {
        let v = (self.sum + self.comp).abs();
        if v == 0.0 {
            return f64::INFINITY;
        }
        (self.abs_mass / v) * f64::EPSILON * (1.0 + (self.terms as f64).sqrt() * 0.1)
    }
}

/// Linear-domain double-double accumulator with the same cancellation report.
#[derive(Clone, Debug, Default)]
pub struct DdAccumulator {
    sum: Dd,
    abs_mass: f64,
}

impl DdAccumulator {
    pub fn new() -> Self {
        DdAccumulator {
            sum: Dd::ZERO,
            abs_mass: 0.0,
        }
    }

    pub fn add(&mut self, t: Dd) {
        self.sum = self.sum.add(t);
        self.abs_mass += t.to_f64().abs();
    }

    pub fn value(&self) -> Dd {
        self.sum
    }

    /// Double-double carries ~1e-31 relative accuracy per operation.
    pub fn relative_error_estimate(&self) -> f64 {
        let v = self.sum.to_f64().abs();
        if v == 0.0 {
            return f64::INFINITY;
        }
        (self.abs_mass / v) * 1e-31
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_products() {
        let a = SignedLog::from_f64(-3.5);
        let b = SignedLog::from_f64(2.0);
        assert!((a.mul(b).to_f64() + 7.0).abs() < 1e-14);
        assert!((a.div(b).to_f64() + 1.75).abs() < 1e-14);
        assert!((a.powi(2).to_f64() - 12.25).abs() < 1e-13);
        assert_eq!(SignedLog::from_f64(0.0).mul(a).sign, 0);
    }

    #[test]
    fn accumulator_handles_wide_scales() {
        let mut acc = LogAccumulator::new();
        // 1e300 - 1e300 + 5  =>  5
        acc.add(SignedLog::from_parts(1, 300.0 * std::f64::consts::LN_10));
        acc.add(SignedLog::from_parts(-1, 300.0 * std::f64::consts::LN_10));
        acc.add(SignedLog::from_f64(5.0));
        let v = acc.value();
        assert_eq!(v.sign, 1);
        assert!((v.to_f64() - 5.0).abs() < 1e-10, "{}", v.to_f64());
        // and the cancellation estimate knows this was a terrible sum
        assert!(acc.relative_error_estimate() > 1e2);
    }

    #[test]
    fn accumulator_is_accurate_for_benign_sums() {
        let mut acc = LogAccumulator::new();
        let mut direct = 0.0;
        for i in 1..=1000 {
            let t = 1.0 / (i as f64 * i as f64);
            acc.add(SignedLog::from_f64(t));
            direct += t;
        }
        assert!((acc.value().to_f64() - direct).abs() < 1e-14);
        assert!(acc.relative_error_estimate() < 1e-12);
    }

    #[test]
    fn ln_factorial_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
        assert!((ln_factorial(20) - 2.432902008176640e18f64.ln()).abs() < 1e-12);
    }
}
