//! Double-double arithmetic: unevaluated sums `hi + lo` of two f64, giving
//! roughly 32 significant digits. Used as the extended-precision escape hatch
//! where alternating sums exhaust double precision (symmetric-function tables,
//! the closed-form density at small x, determinants of the character formula).
//!
//! Based on the classical error-free transformations (Dekker/Knuth two-sum,
//! FMA two-product).

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision.
    pub const LN2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, o: f64) -> Dd {
        let (s, e) = two_sum(self.hi, o);
        let e = e + self.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, o: f64) -> Dd {
        let (p, e) = two_prod(self.hi, o);
        let e = e + self.lo * o;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r2 = r.sub(o.mul_f64(q2));
        let q3 = r2.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add_f64(q3)
    }

    #[inline]
    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }

    pub fn powi(self, mut n: i32) -> Dd {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        if n < 0 {
            n = -n;
        }
        let mut acc = Dd::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        // Newton step on the double-precision start value.
        let y = self.hi.sqrt();
        let y = Dd::from_f64(y);
        let half = Dd::from_f64(0.5);
        let y = y.add(self.div(y)).mul(half);
        y.add(self.div(y)).mul(half)
    }

    /// exp with double-double accuracy via range reduction to |r| <= ln2/2
    /// and a Taylor series.
    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = self.sub(Dd::LN2.mul_f64(k));
        // Taylor sum; |r| <= 0.347 so ~24 terms reach 1e-35. Divide by the
        // exact integer rather than multiplying by a rounded reciprocal.
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for i in 1..26 {
            term = term.mul(r).div(Dd::from_f64(i as f64));
            sum = sum.add(term);
            if term.hi.abs() < 1e-35 * sum.hi.abs() {
                break;
            }
        }
        let scale = (k as i32).clamp(-1074, 1023);
        let f = f64::powi(2.0, scale);
        Dd {
            hi: sum.hi * f,
            lo: sum.lo * f,
        }
    }

    /// Natural log of |self| via Newton iteration on exp.
    pub fn ln_abs(self) -> Dd {
        let a = self.abs();
        if a.hi == 0.0 {
            return Dd::from_f64(f64::NEG_INFINITY);
        }
        let mut y = Dd::from_f64(a.hi.ln());
        // y_{k+1} = y_k + a*exp(-y_k) - 1, two steps suffice
        for _ in 0..2 {
            let e = y.neg().exp();
            y = y.add(a.mul(e)).add_f64(-1.0);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_add_roundtrip() {
        let a = Dd::from_f64(1.0).div(Dd::from_f64(3.0));
        let b = a.mul_f64(3.0);
        assert!((b.to_f64() - 1.0).abs() < 1e-30);
        assert!(b.sub(Dd::ONE).hi.abs() < 1e-31);
    }

    #[test]
    fn exp_matches_known() {
        // exp(1) = 2.718281828459045235360287...
        let e = Dd::ONE.exp();
        assert!((e.hi - 2.718281828459045).abs() < 1e-15);
        let resid = e.sub(Dd::new(2.718281828459045, 1.4456468917292501e-16));
        assert!(resid.hi.abs() < 1e-29, "resid {:?}", resid);
        // exp(-20)*exp(20) = 1
        let p = Dd::from_f64(20.0).exp().mul(Dd::from_f64(-20.0).exp());
        assert!(p.sub(Dd::ONE).hi.abs() < 1e-29);
    }

    #[test]
    fn ln_inverts_exp() {
        for &x in &[1e-8, 0.1, 1.0, 3.5, 123.456, 1e12] {
            let l = Dd::from_f64(x).ln_abs();
            let back = l.exp();
            assert!(
                (back.to_f64() - x).abs() <= 1e-28 * x,
                "x={x} back={}",
                back.to_f64()
            );
        }
    }

    #[test]
    fn division_exact_cancellation() {
        // (1e16 + 1) - 1e16 = 1 survives in dd
        let big = Dd::from_f64(1e16).add_f64(1.0);
        let diff = big.sub(Dd::from_f64(1e16));
        assert_eq!(diff.to_f64(), 1.0);
    }

    #[test]
    fn sqrt_squares_back() {
        for &x in &[0.25, 2.0, 1e10, 1e-12] {
            let s = Dd::from_f64(x).sqrt();
            let back = s.mul(s);
            assert!((back.to_f64() - x).abs() <= 1e-30 * x);
        }
    }
}
