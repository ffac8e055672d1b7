//! Large-n and large-(n,p) limit densities: the effective-mean reduction of
//! the time correlations, the saddle-point data, and the Marchenko-Pastur
//! law.

use crate::complex_exact::DegenerateEvaluator;
use crate::error::Result;
use crate::model::{Beta, EnsembleSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Parameters of the asymptotic regimes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticSpec {
    pub p: usize,
    pub n: usize,
    pub lambda_bar: f64,
    pub gamma_bar: f64,
    /// full position spectrum, for the n → ∞, p-fixed mode
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<Vec<f64>>,
}

/// Σ v / len — the effective mean that replaces the full time spectrum at
/// large n. (The replacement is exact at leading order in 1/n.)
pub fn effective_mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    values.iter().sum::<f64>() / values.len() as f64
}

/// Density at large n with p fixed: the time eigenvalues coalesce at their
/// mean, so this is the fully Γ-degenerate ensemble (unitary class), handled
/// by the confluent-limit evaluator.
pub struct LargeNEvaluator {
    inner: DegenerateEvaluator,
}

impl LargeNEvaluator {
    pub fn new(lambda: &[f64], gamma_bar: f64, n: usize) -> Result<Self> {
        let spec = EnsembleSpec::new(Beta::Two, lambda.to_vec(), vec![gamma_bar; n]);
        let validated = spec.validate()?;
        Ok(LargeNEvaluator {
            inner: DegenerateEvaluator::new(&validated)?,
        })
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        self.inner.density(x)
    }
}

/// One-shot evaluation of the large-n density.
pub fn density_large_n(lambda: &[f64], gamma_bar: f64, n: usize, x: f64) -> Result<f64> {
    LargeNEvaluator::new(lambda, gamma_bar, n)?.density(x)
}

/// The stationary point (σ₀, ρ₀) of the asymptotic generating function:
/// ρ₀ = (n−p)Γ̄/2 + x/(2Λ̄) + i√(nΓ̄x/Λ̄ − ((n−p)Γ̄/2 + x/(2Λ̄))²),
/// with n σ₀⁻¹ = i ρ₀ by construction. A negative radicand continues the
/// square root through the principal branch.
pub fn stationary_point(
    x: Complex64,
    n: usize,
    p: usize,
    lambda_bar: f64,
    gamma_bar: f64,
) -> (Complex64, Complex64) {
    let a = (n - p) as f64 * gamma_bar / 2.0 + x / (2.0 * lambda_bar);
    let radicand = x * (n as f64 * gamma_bar / lambda_bar) - a * a;
    // force the branch approached from Im > 0 for real arguments
    let radicand = if radicand.im == 0.0 {
        Complex64::new(radicand.re, 0.0)
    } else {
        radicand
    };
    let rho0 = a + Complex64::i() * radicand.sqrt();
    let sigma0 = Complex64::new(n as f64, 0.0) / (Complex64::i() * rho0);
    (sigma0, rho0)
}

/// Support of the Marchenko-Pastur law in the (unrescaled) WW† variable:
/// [n(1−√(p/n))² Λ̄Γ̄, n(1+√(p/n))² Λ̄Γ̄].
pub fn marchenko_pastur_support(
    p: usize,
    n: usize,
    lambda_bar: f64,
    gamma_bar: f64,
) -> (f64, f64) {
    let q = (p as f64 / n as f64).sqrt();
    let c = n as f64 * lambda_bar * gamma_bar;
    ((1.0 - q) * (1.0 - q) * c, (1.0 + q) * (1.0 + q) * c)
}

/// The Marchenko-Pastur density for WW† scaled by the mean correlations:
/// S(x) = n/(2π p x Λ̄Γ̄) · Re √[(x/n − a₋)(a₊ − x/n)], zero off-support.
pub fn marchenko_pastur(x: f64, p: usize, n: usize, lambda_bar: f64, gamma_bar: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let q = (p as f64 / n as f64).sqrt();
    let c = lambda_bar * gamma_bar;
    let lo = (1.0 - q) * (1.0 - q) * c;
    let hi = (1.0 + q) * (1.0 + q) * c;
    let y = x / n as f64;
    let radicand = (y - lo) * (hi - y);
    if radicand <= 0.0 {
        return 0.0;
    }
    n as f64 / (2.0 * std::f64::consts::PI * p as f64 * x * c) * radicand.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logdomain::ln_factorial;
    use crate::quadrature::adaptive;

    #[test]
    fn effective_mean_examples() {
        assert_eq!(effective_mean(&[1.0, 1.0, 1.0]), 1.0);
        let m = effective_mean(&[0.3, 2.7, 2.5, 2.8, 5.6, 1.0]);
        assert!((m - 2.483333333333333).abs() < 1e-14);
        assert_eq!(effective_mean(&[4.2]), 4.2);
    }

    #[test]
    fn large_n_p1_is_gamma_density() {
        // p = 1: S(x) = x^{n-1} e^{-x/(L G)} / ((n-1)! (L G)^n)
        for &(n, lg, x) in &[(2usize, 1.0, 2.0), (6, 0.8, 3.0)] {
            let v = density_large_n(&[lg], 1.0, n, x).unwrap();
            let expect = ((n - 1) as f64 * (x / lg).ln() - x / lg - ln_factorial(n - 1)).exp() / lg;
            assert!(
                (v - expect).abs() < 1e-10 * expect,
                "n={n}: {v} vs {expect}"
            );
        }
        // spec example: n=2, scale 1, x=2 -> 2 e^{-2}
        let v = density_large_n(&[1.0], 1.0, 2, 2.0).unwrap();
        assert!((v - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn stationary_point_identities() {
        // n sigma0^{-1} = i rho0 for random inputs
        for &(x, n, p, lb, gb) in &[
            (3.0, 8usize, 2usize, 1.3, 0.7),
            (0.5, 5, 5, 2.0, 0.4),
            (12.0, 40, 10, 1.0, 1.0),
        ] {
            let (s0, r0) = stationary_point(Complex64::new(x, 0.0), n, p, lb, gb);
            let lhs = Complex64::new(n as f64, 0.0) / s0;
            let rhs = Complex64::i() * r0;
            assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
        }
        // discriminant vanishes exactly at the support edges
        let (p, n, lb, gb) = (3usize, 12usize, 1.4, 0.9);
        let (lo, hi) = marchenko_pastur_support(p, n, lb, gb);
        for edge in [lo, hi] {
            let (_, r0) = stationary_point(Complex64::new(edge, 0.0), n, p, lb, gb);
            assert!(r0.im.abs() < 1e-6 * r0.re.abs(), "edge {edge}: {r0}");
        }
        // p = n, x = 2 n for unit means: rho0 = n(1 + i)
        let nn = 7usize;
        let (_, r0) = stationary_point(Complex64::new(2.0 * nn as f64, 0.0), nn, nn, 1.0, 1.0);
        assert!((r0 - Complex64::new(nn as f64, nn as f64)).norm() < 1e-10);
    }

    #[test]
    fn marchenko_pastur_values_and_support() {
        // p=n=100, unit means, x=200: 1/(200 pi)
        let v = marchenko_pastur(200.0, 100, 100, 1.0, 1.0);
        assert!((v - 1.0 / (200.0 * std::f64::consts::PI)).abs() < 1e-15);
        let (lo, hi) = marchenko_pastur_support(100, 400, 1.0, 1.0);
        assert_eq!(marchenko_pastur(lo * 0.99, 100, 400, 1.0, 1.0), 0.0);
        assert_eq!(marchenko_pastur(hi * 1.01, 100, 400, 1.0, 1.0), 0.0);
        assert_eq!(marchenko_pastur(lo, 100, 400, 1.0, 1.0), 0.0);
        assert_eq!(marchenko_pastur(hi, 100, 400, 1.0, 1.0), 0.0);
    }

    #[test]
    fn marchenko_pastur_normalization_and_moment() {
        let (p, n, lb, gb) = (100usize, 400usize, 1.1, 0.9);
        let (lo, hi) = marchenko_pastur_support(p, n, lb, gb);
        // substitute x = lo + (hi-lo) sin^2 t to remove the edge square roots
        let f = |t: f64| {
            let s = t.sin();
            let x = lo + (hi - lo) * s * s;
            let jac = (hi - lo) * 2.0 * s * t.cos();
            marchenko_pastur(x, p, n, lb, gb) * jac
        };
        let (mass, _) = adaptive(f, 0.0, std::f64::consts::FRAC_PI_2, 1e-10, 0.0, 2000).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
        let g = |t: f64| {
            let s = t.sin();
            let x = lo + (hi - lo) * s * s;
            let jac = (hi - lo) * 2.0 * s * t.cos();
            x * marchenko_pastur(x, p, n, lb, gb) * jac
        };
        let (m1, _) = adaptive(g, 0.0, std::f64::consts::FRAC_PI_2, 1e-10, 0.0, 2000).unwrap();
        let expect = n as f64 * lb * gb;
        assert!((m1 - expect).abs() < 1e-4 * expect, "m1 {m1} vs {expect}");
    }
}
