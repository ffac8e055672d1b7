//! Real-case (β = 1) eigenvalue density.
//!
//! The density is a sum of three fourfold oscillatory integrals over
//! (S, s, R, r). Direct tensor quadrature is hopeless (the e^{iSR/4} and
//! J₀(sr/4) couplings demand astronomically fine grids), so the engine:
//!
//! 1. performs the S-integral by wrapping the integration contour onto the
//!    vertical branch cuts of the time-correlation square root (exact for
//!    R > 0; the R < 0 half vanishes by closing the contour downward), which
//!    factors K(R, s) = Σ_± e^{±isR/4} C_±(R, s) with smooth slowly-varying
//!    amplitudes C_±;
//! 2. integrates s against the Bessel kernels by Filon-type quadrature:
//!    oscillations are handled exactly through Legendre moments of e^{iωs},
//!    with the Bessel functions split into their large-argument wave parts
//!    and a localized remainder (for a single time eigenvalue the transform
//!    additionally develops a nascent delta + principal-value pair at
//!    r = ±R, which is integrated analytically);
//! 3. does the remaining (R, r) integrals by panel quadrature with splits at
//!    the ε-regularized singular radii |2x/Λ_j − R|.
//!
//! Evaluation runs at a decreasing ε sequence and extrapolates linearly to
//! ε → 0. The two-dimensional non-oscillatory reduction for twofold
//! degenerate spectra lives in [`reduced`].

mod engine;
mod reduced;

pub use engine::brute_sigma_kernel_for_tests;
pub use reduced::{reduced_s11_degenerate, DegeneratePairSpec};

use crate::error::{Error, Result};
use crate::model::{Beta, DensityMethod, ValidatedSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Cost guard: the fourfold route is for desk-scale spectra only.
pub const MAX_QUAD_DIM: usize = 4;

/// Configuration of the fourfold quadrature.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RealQuadConfig {
    /// x⁻ = x − iε regularization.
    pub eps: f64,
    /// Truncation of the S axis (the wrapped contour integral).
    #[serde(rename = "S_cut")]
    pub big_s_cut: f64,
    /// Truncation of the s axis.
    #[serde(rename = "s_cut")]
    pub small_s_cut: f64,
    /// Truncation of the R axis.
    #[serde(rename = "R_cut")]
    pub big_r_cut: f64,
    /// Truncation of the r axis.
    #[serde(rename = "r_cut")]
    pub small_r_cut: f64,
    /// Base Gauss-Legendre resolution knob (nodes per panel bundle).
    pub nodes_per_axis: usize,
    /// Convergence tolerance for the ε / refinement checks.
    pub tolerance: f64,
    /// Optional extra exponential damping of the oscillatory tails
    /// (Abel-style regulator used by the brute-force reference integrator).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub damping: Option<f64>,
}

impl RealQuadConfig {
    /// Defaults scaled to the spectrum: ε = 10⁻² of the coarse eigenvalue
    /// scale, truncations from the decay envelopes.
    pub fn default_for(validated: &ValidatedSpec) -> Self {
        let spec = &validated.spec;
        let max_l = spec.lambda.iter().cloned().fold(f64::MIN, f64::max);
        let max_g = spec.gamma.iter().cloned().fold(f64::MIN, f64::max);
        let scale = max_l * max_g;
        RealQuadConfig {
            eps: 0.01 * scale,
            big_s_cut: 3000.0,
            small_s_cut: 1600.0,
            big_r_cut: 60.0 * max_g,
            small_r_cut: 150.0 * max_l.max(1.0),
            nodes_per_axis: 16,
            tolerance: 5e-3,
            damping: None,
        }
    }
}

/// A density value with its error estimate and the ε ladder used.
#[derive(Clone, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub est_error: f64,
    pub eps_used: Vec<f64>,
}

// ------------------------------------------------------------------------
// Pointwise integrands (the summands of the three fourfold integrals),
// exposed for direct inspection and tests. The complex square roots are
// assembled per linear factor through principal logarithms: every
// time-side factor has real part 1 and every position-side factor has
// imaginary part −ε·(scale), so each factor stays off the branch cut and the
// per-factor principal continuation is the continuous branch anchored at the
// S = 0 / R = 0 reference where the product is manifestly positive.
// ------------------------------------------------------------------------

fn gamma_sqrt_inv(gamma: &[f64], s_big: Complex64, s_small: f64) -> Result<Complex64> {
    let mut ln_sum = Complex64::new(0.0, 0.0);
    for &g in gamma {
        for sign in [1.0, -1.0] {
            let w = Complex64::new(1.0, 0.0) + Complex64::i() * 0.5 * g * (s_big + sign * s_small);
            if !(w.re > 0.0) || !w.re.is_finite() {
                return Err(Error::BranchTrackingFailure(
                    "time-side factor left the right half-plane",
                ));
            }
            ln_sum += w.ln();
        }
    }
    Ok((-0.5 * ln_sum).exp())
}

fn lambda_sqrt_inv(lambda: &[f64], x: f64, eps: f64, r_big: f64, r_small: f64) -> Result<Complex64> {
    let xm = Complex64::new(x, -eps);
    let mut ln_sum = Complex64::new(0.0, 0.0);
    for &l in lambda {
        for sign in [1.0, -1.0] {
            let v = xm - 0.5 * l * (r_big + sign * r_small);
            if !(v.im < 0.0) || !v.im.is_finite() {
                return Err(Error::BranchTrackingFailure(
                    "position-side factor crossed the real axis",
                ));
            }
            ln_sum += v.ln();
        }
    }
    Ok((-0.5 * ln_sum).exp())
}

fn check_beta_one(validated: &ValidatedSpec) -> Result<()> {
    if validated.spec.beta != Beta::One {
        return Err(Error::MethodBetaMismatch {
            method: DensityMethod::RealQuad,
            required: 1,
            got: validated.spec.beta.as_u32(),
        });
    }
    Ok(())
}

/// The full integrand of the first term: |r||s| J₀(sr/4) e^{iSR/4} times the
/// u-sum, divided by both square-root products. The 1/(512pπ²) prefactor and
/// the Im{} are applied by the density assembler, not here.
pub fn integrand_s11(
    s_big: f64,
    s_small: f64,
    r_big: f64,
    r_small: f64,
    validated: &ValidatedSpec,
    x: f64,
    eps: f64,
) -> Result<Complex64> {
    check_beta_one(validated)?;
    let spec = &validated.spec;
    let (p, n) = (spec.p, spec.n);
    let mut u_sum = 0.0;
    for u in 0..p {
        let e_l = crate::symfunc::elementary_symmetric(&spec.lambda, u, &[]);
        let e_g = crate::symfunc::elementary_symmetric(&spec.gamma, u, &[]);
        let sign = if u % 2 == 0 { 1.0 } else { -1.0 };
        u_sum += sign
            * x.powi((p - u - 1) as i32)
            * e_l
            * e_g
            * crate::logdomain::ln_factorial(u).exp()
            * (p - u) as f64;
    }
    let _ = n;
    let gf = gamma_sqrt_inv(&spec.gamma, Complex64::new(s_big, 0.0), s_small)?;
    let lf = lambda_sqrt_inv(&spec.lambda, x, eps, r_big, r_small)?;
    let phase = (Complex64::i() * 0.25 * s_big * r_big).exp();
    let j0 = crate::specfun::bessel_j0(s_small * r_small / 4.0);
    Ok(r_small.abs() * s_small.abs() * u_sum * j0 * phase * gf * lf)
}

/// Second-term integrand: the Σ_{k,l} summand structure with
/// [J₀ − iJ₁](sr/4), the extra 1/[1 + iΓ_k(S−s)/2] and 1/[x⁻ − Λ_l(R−r)/2]
/// factors, and the single-exclusion symmetric functions.
pub fn integrand_s12(
    s_big: f64,
    s_small: f64,
    r_big: f64,
    r_small: f64,
    validated: &ValidatedSpec,
    x: f64,
    eps: f64,
) -> Result<Complex64> {
    check_beta_one(validated)?;
    let spec = &validated.spec;
    let (p, n) = (spec.p, spec.n);
    if p < 2 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let gf = gamma_sqrt_inv(&spec.gamma, Complex64::new(s_big, 0.0), s_small)?;
    let lf = lambda_sqrt_inv(&spec.lambda, x, eps, r_big, r_small)?;
    let phase = (Complex64::i() * 0.25 * s_big * r_big).exp();
    let z = s_small * r_small / 4.0;
    let jk = Complex64::new(crate::specfun::bessel_j0(z), -crate::specfun::bessel_j1(z));
    let xm = Complex64::new(x, -eps);
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let dk = Complex64::new(1.0, 0.0)
            + Complex64::i() * 0.5 * spec.gamma[k] * (s_big - s_small);
        for l in 0..p {
            let el = xm - 0.5 * spec.lambda[l] * (r_big - r_small);
            let mut u_sum = 0.0;
            for u in 0..=(p - 2) {
                let e_l = crate::symfunc::elementary_symmetric(&spec.lambda, u, &[l]);
                let e_g = crate::symfunc::elementary_symmetric(&spec.gamma, u, &[k]);
                let sign = if u % 2 == 0 { 1.0 } else { -1.0 };
                u_sum += sign
                    * x.powi((p - u - 2) as i32)
                    * crate::logdomain::ln_factorial(u).exp()
                    * e_l
                    * e_g
                    * (p - u - 1) as f64;
            }
            let c = spec.gamma[k] * spec.gamma[k] * spec.lambda[l] * spec.lambda[l];
            total += c * u_sum / (dk * el);
        }
    }
    Ok(r_small.abs() * s_small.abs() * total * jk * phase * gf * lf)
}

/// Third-term integrand: the double-excluded sums over k≠l (time side) and
/// m₁≠m₂ (position side).
#[allow(clippy::too_many_arguments)]
pub fn integrand_s13(
    s_big: f64,
    s_small: f64,
    r_big: f64,
    r_small: f64,
    validated: &ValidatedSpec,
    x: f64,
    eps: f64,
) -> Result<Complex64> {
    check_beta_one(validated)?;
    let spec = &validated.spec;
    let (p, n) = (spec.p, spec.n);
    if p < 3 || n < 2 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let gf = gamma_sqrt_inv(&spec.gamma, Complex64::new(s_big, 0.0), s_small)?;
    let lf = lambda_sqrt_inv(&spec.lambda, x, eps, r_big, r_small)?;
    let phase = (Complex64::i() * 0.25 * s_big * r_big).exp();
    let j0 = crate::specfun::bessel_j0(s_small * r_small / 4.0);
    let xm = Complex64::new(x, -eps);
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let dk = Complex64::new(1.0, 0.0)
            + Complex64::i() * 0.5 * spec.gamma[k] * (s_big + s_small);
        for l in 0..n {
            if l == k {
                continue;
            }
            let dl = Complex64::new(1.0, 0.0)
                + Complex64::i() * 0.5 * spec.gamma[l] * (s_big - s_small);
            for m1 in 0..p {
                for m2 in 0..p {
                    if m1 == m2 {
                        continue;
                    }
                    let em1 = xm - 0.5 * spec.lambda[m1] * (r_big - r_small);
                    let em2 = xm - 0.5 * spec.lambda[m2] * (r_big + r_small);
                    let mut u_sum = 0.0;
                    for u in 0..=(p - 3) {
                        let e_l =
                            crate::symfunc::elementary_symmetric(&spec.lambda, u, &[m1, m2]);
                        let e_g = crate::symfunc::elementary_symmetric(&spec.gamma, u, &[k, l]);
                        let sign = if u % 2 == 0 { 1.0 } else { -1.0 };
                        u_sum += sign
                            * x.powi((p - u - 3) as i32)
                            * crate::logdomain::ln_factorial(u).exp()
                            * e_l
                            * e_g
                            * (p - u - 2) as f64;
                    }
                    let c2 = (spec.gamma[k] * spec.gamma[l] * spec.lambda[m1] * spec.lambda[m2])
                        .powi(2);
                    total += c2 * u_sum / (dk * dl * em1 * em2);
                }
            }
        }
    }
    Ok(r_small.abs() * s_small.abs() * total * j0 * phase * gf * lf)
}

/// S₁(x) by the fourfold quadrature with ε extrapolation.
pub fn density_quad_r1(
    validated: &ValidatedSpec,
    x: f64,
    config: &RealQuadConfig,
) -> Result<QuadResult> {
    check_beta_one(validated)?;
    let spec = &validated.spec;
    if spec.p > MAX_QUAD_DIM || spec.n > MAX_QUAD_DIM {
        return Err(Error::CostGuard {
            what: "fourfold quadrature",
            p: spec.p,
            n: spec.n,
            limit: MAX_QUAD_DIM,
        });
    }
    if !(x > 0.0) {
        return Err(Error::InvalidConfig(format!("x must be positive, got {x}")));
    }
    if !(config.eps > 0.0) || config.nodes_per_axis < 16 {
        return Err(Error::InvalidConfig(
            "eps must be positive and nodes_per_axis >= 16".into(),
        ));
    }
    // epsilon ladder: eps, eps/2 -> linear extrapolation; a refined-node run
    // at eps/2 estimates the truncation error.
    let v1 = engine::evaluate(validated, x, config.eps, config, 1.0)?;
    let v2 = engine::evaluate(validated, x, config.eps * 0.5, config, 1.0)?;
    let v2f = engine::evaluate(validated, x, config.eps * 0.5, config, 1.4)?;
    let extrapolated = 2.0 * v2 - v1;
    let eps_err = (v2 - v1).abs();
    let node_err = (v2f - v2).abs();
    let value = 2.0 * v2f - v1;
    Ok(QuadResult {
        value,
        est_error: eps_err.max(node_err) + 0.2 * (eps_err + node_err) + (extrapolated - value).abs(),
        eps_used: vec![config.eps, config.eps * 0.5],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EnsembleSpec;

    fn scalar_spec() -> ValidatedSpec {
        EnsembleSpec::new(Beta::One, vec![1.0], vec![1.0])
            .validate()
            .unwrap()
    }

    #[test]
    fn integrand_vanishes_at_origin() {
        let v = integrand_s11(0.0, 0.0, 0.0, 0.0, &scalar_spec(), 1.0, 0.01).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn integrand_sign_symmetry() {
        // (s, r) -> (-s, -r) leaves the S11 integrand unchanged
        let spec = EnsembleSpec::new(Beta::One, vec![1.0, 2.0], vec![1.0, 3.0])
            .validate()
            .unwrap();
        for &(sb, ss, rb, rs) in &[
            (0.7, 1.3, 2.0, 0.4),
            (-1.1, 0.2, 0.9, 3.0),
            (2.2, -0.8, 4.0, -1.7),
        ] {
            let a = integrand_s11(sb, ss, rb, rs, &spec, 1.5, 0.05).unwrap();
            let b = integrand_s11(sb, -ss, rb, -rs, &spec, 1.5, 0.05).unwrap();
            assert!((a - b).norm() <= 1e-14 * a.norm().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn integrand_scalar_case_matches_direct_formula() {
        // p = n = 1: |r||s| J0(sr/4) e^{iSR/4} /
        //   (sqrt[(1+i(S+s)/2)(1+i(S-s)/2)] sqrt[(x- -(R+r)/2)(x- -(R-r)/2)])
        let spec = scalar_spec();
        let (sb, ss, rb, rs, x, eps) = (1.2, 0.6, 2.5, 1.1, 1.0, 0.02);
        let got = integrand_s11(sb, ss, rb, rs, &spec, x, eps).unwrap();
        let xm = Complex64::new(x, -eps);
        let w1 = Complex64::new(1.0, 0.5 * (sb + ss));
        let w2 = Complex64::new(1.0, 0.5 * (sb - ss));
        let v1 = xm - 0.5 * (rb + rs);
        let v2 = xm - 0.5 * (rb - rs);
        // per-factor principal roots give the continuous branch (the naive
        // principal root of the product wraps when the argument sum passes π)
        let expect = rs.abs() * ss.abs() * crate::specfun::bessel_j0(ss * rs / 4.0)
            * (Complex64::i() * 0.25 * sb * rb).exp()
            / (w1.sqrt() * w2.sqrt() * v1.sqrt() * v2.sqrt());
        assert!((got - expect).norm() < 1e-12 * expect.norm(), "{got} vs {expect}");
    }

    #[test]
    fn low_dimension_terms_vanish() {
        let spec = scalar_spec();
        assert_eq!(
            integrand_s12(1.0, 0.5, 1.0, 0.5, &spec, 1.0, 0.01).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(
            integrand_s13(1.0, 0.5, 1.0, 0.5, &spec, 1.0, 0.01).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn cost_guard_and_beta_guard() {
        let big = EnsembleSpec::new(Beta::One, vec![1.0; 5], vec![1.0, 2.0, 3.0, 4.0, 5.0])
            .validate()
            .unwrap();
        let cfg = RealQuadConfig::default_for(&big);
        assert!(matches!(
            density_quad_r1(&big, 1.0, &cfg),
            Err(Error::CostGuard { .. })
        ));
        let b2 = EnsembleSpec::new(Beta::Two, vec![1.0], vec![1.0])
            .validate()
            .unwrap();
        assert!(matches!(
            density_quad_r1(&b2, 1.0, &RealQuadConfig::default_for(&b2)),
            Err(Error::MethodBetaMismatch { .. })
        ));
    }

    #[test]
    fn config_round_trips_through_json() {
        let spec = scalar_spec();
        let cfg = RealQuadConfig::default_for(&spec);
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"S_cut\"") && s.contains("\"r_cut\""));
        let back: RealQuadConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
    }
}
