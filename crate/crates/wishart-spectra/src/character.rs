//! The character-expansion determinant formula for the unitary-class density,
//! as given in the earlier literature and reprinted with an erratum: the
//! as-published form carries a spurious factor a_m b_j in the T-matrix rows,
//! which `corrected = false` reinstates for comparison.
//!
//! The formula is a cross-check of the closed form and a deliberately
//! preserved specimen of numerical instability: its determinants cancel to
//! ~13 digits at large x, so the double-precision path develops sign-flipping
//! fluctuations there while the closed form stays smooth. An extended
//! double-double mode demonstrates the fluctuations are roundoff, not
//! formula error.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::logdomain::{ln_factorial, LogAccumulator, SignedLog};
use crate::model::{Beta, DensityMethod, EnsembleSpec, ValidatedSpec};
use crate::symfunc::vandermonde;

/// Arithmetic the determinant pipeline is generic over: plain f64 or
/// double-double.
pub trait Field: Copy {
    fn from_f64(x: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn abs_f64(self) -> f64;
    fn exp(self) -> Self;
    fn signed_log(self) -> SignedLog;
}

impl Field for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn abs_f64(self) -> f64 {
        self.abs()
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn signed_log(self) -> SignedLog {
        SignedLog::from_f64(self)
    }
}

impl Field for Dd {
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    fn add(self, o: Self) -> Self {
        Dd::add(self, o)
    }
    fn sub(self, o: Self) -> Self {
        Dd::sub(self, o)
    }
    fn mul(self, o: Self) -> Self {
        Dd::mul(self, o)
    }
    fn div(self, o: Self) -> Self {
        Dd::div(self, o)
    }
    fn abs_f64(self) -> f64 {
        self.hi.abs()
    }
    fn exp(self) -> Self {
        Dd::exp(self)
    }
    fn signed_log(self) -> SignedLog {
        if self.hi == 0.0 {
            return SignedLog::ZERO;
        }
        let sign = if self.hi > 0.0 { 1 } else { -1 };
        SignedLog::from_parts(sign, self.abs().ln_abs().to_f64())
    }
}

/// g(x; α, z) = x^{n−α} (α−1)! Σ_{m=0}^{α−1} (−z x)^m / m!
pub fn g_kernel(x: f64, alpha: usize, z: f64, n: usize) -> f64 {
    g_kernel_t::<f64>(x, alpha, z, n)
}

fn g_kernel_t<F: Field>(x: f64, alpha: usize, z: f64, n: usize) -> F {
    debug_assert!(alpha >= 1 && n >= alpha);
    let xv = F::from_f64(x);
    let neg_zx = F::from_f64(-z).mul(xv);
    let mut term = F::from_f64(1.0);
    let mut sum = term;
    for m in 1..alpha {
        term = term.mul(neg_zx).mul(F::from_f64(1.0 / m as f64));
        sum = sum.add(term);
    }
    let mut power = F::from_f64(1.0);
    for _ in 0..(n - alpha) {
        power = power.mul(xv);
    }
    power
        .mul(F::from_f64(ln_factorial(alpha - 1).exp()))
        .mul(sum)
}

/// Plan for the character-expansion density: a_i = 1/Γ_i, b_j = 1/Λ_j and
/// the x-independent prefactor pieces in log domain.
#[derive(Clone, Debug)]
pub struct CharacterPlan {
    a: Vec<f64>,
    b: Vec<f64>,
    p: usize,
    n: usize,
    pub corrected: bool,
    /// Π(n−j)^{n−j−p} / (p Δ_n(a) Δ_p(b) Π j^j); the remaining
    /// (−x)^{−p(p−1)/2} is applied per evaluation.
    static_prefactor: SignedLog,
    spec: EnsembleSpec,
}

impl CharacterPlan {
    pub fn new(validated: &ValidatedSpec, corrected: bool) -> Result<Self> {
        let spec = &validated.spec;
        if spec.beta != Beta::Two {
            return Err(Error::MethodBetaMismatch {
                method: DensityMethod::Character,
                required: 2,
                got: spec.beta.as_u32(),
            });
        }
        let (p, n) = (spec.p, spec.n);
        if n <= p {
            return Err(Error::InvalidConfig(format!(
                "character formula requires n > p (got p={p}, n={n})"
            )));
        }
        let a: Vec<f64> = spec.gamma.iter().map(|g| 1.0 / g).collect();
        let b: Vec<f64> = spec.lambda.iter().map(|l| 1.0 / l).collect();
        let va = vandermonde(&a);
        let vb = vandermonde(&b);
        if va.is_zero() || vb.is_zero() {
            return Err(Error::SingularPrefactor(
                "degenerate eigenvalues make the Vandermonde prefactor vanish",
            ));
        }
        // ln Π_{j=1}^{n-p-1} (n-j)^{n-j-p}  (empty when n <= p+1)
        let mut ln_np = 0.0;
        for j in 1..n.saturating_sub(p) {
            ln_np += ((n - j - p) as f64) * ((n - j) as f64).ln();
        }
        // ln Π_{j=1}^{n-1} j^j
        let mut ln_jj = 0.0;
        for j in 1..n {
            ln_jj += (j as f64) * (j as f64).ln();
        }
        let ln_total = ln_np - ln_jj - (p as f64).ln();
        if !ln_total.is_finite() || ln_total.abs() > 1e15 {
            return Err(Error::Overflow(ln_total));
        }
        let static_prefactor = SignedLog::from_parts(1, ln_total).div(va).div(vb);
        Ok(CharacterPlan {
            a,
            b,
            p,
            n,
            corrected,
            static_prefactor,
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    fn sum_of_determinants<F: Field>(&self, x: f64) -> SignedLog {
        let (p, n) = (self.p, self.n);
        let fact_nm1 = ln_factorial(n - 1).exp();
        let mut acc = LogAccumulator::new();
        let mut mat: Vec<F> = vec![F::from_f64(0.0); n * n];
        let shift = (p * (p - 1)) as f64 / (2.0 * x);
        for k in 0..n {
            // K~^{(k)}
            for i in 0..n {
                for j in 0..n {
                    mat[i * n + j] = if i == k {
                        if j < p {
                            F::from_f64(self.a[k] * self.b[j] + shift)
                                .mul(F::from_f64(-self.a[k] * self.b[j] * x).exp())
                                .mul(F::from_f64(fact_nm1))
                        } else {
                            F::from_f64(0.0)
                        }
                    } else {
                        generic_entry::<F>(self.a[i], self.b.get(j).copied(), j, p, x, n)
                    };
                }
            }
            acc.add(det_scaled_columns(&mut mat, n));
            // T^{(k,m)} for m != k
            for m in 0..n {
                if m == k {
                    continue;
                }
                for i in 0..n {
                    for j in 0..n {
                        mat[i * n + j] = if i == k {
                            if j < p {
                                F::from_f64(-self.a[k] * self.b[j] * x)
                                    .exp()
                                    .mul(F::from_f64(fact_nm1))
                            } else {
                                F::from_f64(0.0)
                            }
                        } else if i == m {
                            if j < p {
                                let g = g_kernel_t::<F>(self.a[m] * self.b[j], n - 1, x, n)
                                    .mul(F::from_f64((n - 1) as f64));
                                if self.corrected {
                                    g
                                } else {
                                    // as-published erratum: spurious a_m b_j
                                    g.mul(F::from_f64(self.a[m] * self.b[j]))
                                }
                            } else {
                                F::from_f64(0.0)
                            }
                        } else {
                            generic_entry::<F>(self.a[i], self.b.get(j).copied(), j, p, x, n)
                        };
                    }
                }
                acc.add(det_scaled_columns(&mut mat, n));
            }
        }
        acc.value()
    }

    fn density_t<F: Field>(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "density requires x > 0, got {x}"
            )));
        }
        let dets = self.sum_of_determinants::<F>(x);
        // (−x)^{−p(p−1)/2}
        let e = (self.p * (self.p - 1) / 2) as i32;
        let xpow = SignedLog::from_f64(-x).powi(-e);
        Ok(dets.mul(self.static_prefactor).mul(xpow).to_f64())
    }
}

fn generic_entry<F: Field>(
    a_i: f64,
    b_j: Option<f64>,
    j: usize,
    p: usize,
    x: f64,
    n: usize,
) -> F {
    if j < p {
        g_kernel_t::<F>(a_i * b_j.unwrap(), n, x, n)
    } else {
        // a_i^{j}  (column j is the paper's column j+1 > p)
        let mut pw = F::from_f64(1.0);
        for _ in 0..j {
            pw = pw.mul(F::from_f64(a_i));
        }
        pw
    }
}

/// Determinant by LU with partial pivoting, with per-column scale factors
/// extracted into the log magnitude first (delays overflow; the hyperfactorial
/// prefactor alone would overflow doubles near n = 20).
fn det_scaled_columns<F: Field>(mat: &mut [F], n: usize) -> SignedLog {
    let mut ln_scale = 0.0f64;
    for j in 0..n {
        let mut mx = 0.0f64;
        for i in 0..n {
            mx = mx.max(mat[i * n + j].abs_f64());
        }
        if mx == 0.0 {
            return SignedLog::ZERO;
        }
        let inv = F::from_f64(1.0 / mx);
        for i in 0..n {
            mat[i * n + j] = mat[i * n + j].mul(inv);
        }
        ln_scale += mx.ln();
    }
    let mut sign = 1i8;
    let mut ln_det = ln_scale;
    for col in 0..n {
        // pivot
        let mut piv = col;
        let mut best = mat[col * n + col].abs_f64();
        for r in col + 1..n {
            let v = mat[r * n + col].abs_f64();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return SignedLog::ZERO;
        }
        if piv != col {
            for j in 0..n {
                mat.swap(piv * n + j, col * n + j);
            }
            sign = -sign;
        }
        let d = mat[col * n + col];
        let dl = d.signed_log();
        sign *= dl.sign;
        ln_det += dl.ln;
        for r in col + 1..n {
            let f = mat[r * n + col].div(d);
            for j in col + 1..n {
                let sub = f.mul(mat[col * n + j]);
                mat[r * n + j] = mat[r * n + j].sub(sub);
            }
        }
    }
    SignedLog::from_parts(sign, ln_det)
}

/// Character-expansion density in plain double precision (exhibits the
/// documented large-x fluctuations).
pub fn density_character(plan: &CharacterPlan, x: f64) -> Result<f64> {
    plan.density_t::<f64>(x)
}

/// Extended-precision (double-double) evaluation of the same formula.
pub fn density_character_dd(plan: &CharacterPlan, x: f64) -> Result<f64> {
    plan.density_t::<Dd>(x)
}
