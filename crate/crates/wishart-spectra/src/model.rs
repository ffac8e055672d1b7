//! Ensemble definition, parameter validation, the normalization constant and
//! the pure-algebra density transforms.

use crate::error::{Error, Result};
use crate::symfunc::DEFAULT_DELTA_GAP;
use serde::{Deserialize, Serialize};

/// Symmetry index: 1 for real ensembles (orthogonal class), 2 for complex
/// (unitary class).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Beta {
    One,
    Two,
}

impl Beta {
    pub fn as_u32(self) -> u32 {
        match self {
            Beta::One => 1,
            Beta::Two => 2,
        }
    }
    pub fn as_f64(self) -> f64 {
        self.as_u32() as f64
    }
}

impl TryFrom<u32> for Beta {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        match v {
            1 => Ok(Beta::One),
            2 => Ok(Beta::Two),
            other => Err(Error::BadBeta(other)),
        }
    }
}

impl From<Beta> for u32 {
    fn from(b: Beta) -> u32 {
        b.as_u32()
    }
}

/// The doubly correlated Wishart ensemble: p observables, n time steps,
/// symmetry index beta, and the eigenvalues Λ, Γ of the two empirical
/// correlation matrices C (p×p) and D (n×n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub p: usize,
    pub n: usize,
    pub beta: Beta,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl EnsembleSpec {
    pub fn new(beta: Beta, lambda: Vec<f64>, gamma: Vec<f64>) -> Self {
        EnsembleSpec {
            p: lambda.len(),
            n: gamma.len(),
            beta,
            lambda,
            gamma,
        }
    }

    /// Validate positivity and dimensions, and annotate with distinctness
    /// flags and multiplicity tables.
    pub fn validate(&self) -> Result<ValidatedSpec> {
        self.validate_with_gap(DEFAULT_DELTA_GAP)
    }

    pub fn validate_with_gap(&self, delta_gap: f64) -> Result<ValidatedSpec> {
        if self.lambda.len() != self.p {
            return Err(Error::DimensionMismatch {
                what: "lambda",
                expected: self.p,
                got: self.lambda.len(),
            });
        }
        if self.gamma.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "gamma",
                expected: self.n,
                got: self.gamma.len(),
            });
        }
        if self.p == 0 || self.n == 0 {
            return Err(Error::DimensionMismatch {
                what: "p and n must be positive",
                expected: 1,
                got: 0,
            });
        }
        for (index, &value) in self.lambda.iter().chain(self.gamma.iter()).enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveEigenvalue { index, value });
            }
        }
        let lambda_groups = multiplicity_groups(&self.lambda, delta_gap);
        let gamma_groups = multiplicity_groups(&self.gamma, delta_gap);
        Ok(ValidatedSpec {
            lambda_distinct: lambda_groups.iter().all(|g| g.len() == 1),
            gamma_distinct: gamma_groups.iter().all(|g| g.len() == 1),
            lambda_groups,
            gamma_groups,
            delta_gap,
            spec: self.clone(),
        })
    }

    /// ln K_beta, the log of the Gaussian normalization constant.
    pub fn log_normalization_constant(&self) -> f64 {
        let beta = self.beta.as_f64();
        let (p, n) = (self.p as f64, self.n as f64);
        let sum_ln_lambda: f64 = self.lambda.iter().map(|v| v.ln()).sum();
        let sum_ln_gamma: f64 = self.gamma.iter().map(|v| v.ln()).sum();
        -(beta * n * p / 2.0) * (2.0 * std::f64::consts::PI / beta).ln()
            - (beta / 2.0) * (n * sum_ln_lambda + p * sum_ln_gamma)
    }

    /// (ΣΛ)(ΣΓ)/p — the exact first moment of the eigenvalue density of WW†.
    pub fn first_moment(&self) -> f64 {
        let sl: f64 = self.lambda.iter().sum();
        let sg: f64 = self.gamma.iter().sum();
        sl * sg / self.p as f64
    }
}

/// Group indices whose values coincide up to a relative gap. Indices are
/// sorted by value inside each group; groups are sorted by value.
fn multiplicity_groups(values: &[f64], delta_gap: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some(g) => {
                let rep = values[*g.last().unwrap()];
                let v = values[idx];
                if (v - rep).abs() / v.abs().max(rep.abs()) < delta_gap {
                    g.push(idx);
                } else {
                    groups.push(vec![idx]);
                }
            }
            None => groups.push(vec![idx]),
        }
    }
    groups
}

/// An `EnsembleSpec` that passed validation, with multiplicity annotations.
#[derive(Clone, Debug)]
pub struct ValidatedSpec {
    pub spec: EnsembleSpec,
    pub lambda_distinct: bool,
    pub gamma_distinct: bool,
    pub lambda_groups: Vec<Vec<usize>>,
    pub gamma_groups: Vec<Vec<usize>>,
    pub delta_gap: f64,
}

impl ValidatedSpec {
    pub fn all_distinct(&self) -> bool {
        self.lambda_distinct && self.gamma_distinct
    }
}

/// Which engine produced a density curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityMethod {
    ComplexExact,
    Character,
    RealQuad,
    RealDegenerate,
    LargeN,
    MarchenkoPastur,
    MonteCarlo,
}

impl DensityMethod {
    /// The symmetry class an engine is restricted to, if any.
    pub fn required_beta(self) -> Option<u32> {
        match self {
            DensityMethod::ComplexExact | DensityMethod::Character | DensityMethod::LargeN => {
                Some(2)
            }
            DensityMethod::RealQuad | DensityMethod::RealDegenerate => Some(1),
            DensityMethod::MarchenkoPastur | DensityMethod::MonteCarlo => None,
        }
    }

    pub fn check_beta(self, beta: Beta) -> Result<()> {
        if let Some(required) = self.required_beta() {
            if beta.as_u32() != required {
                return Err(Error::MethodBetaMismatch {
                    method: self,
                    required,
                    got: beta.as_u32(),
                });
            }
        }
        Ok(())
    }
}

/// A sampled density: strictly increasing grid, non-negative values, an
/// optional point mass at zero (for dual densities), and enough metadata to
/// re-check normalization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub method: DensityMethod,
    pub delta_mass_at_zero: f64,
    pub spec: EnsembleSpec,
    /// Tolerance at which the trapezoidal mass of this curve may be checked
    /// against 1 (depends on grid coverage and the producing method).
    pub norm_tolerance: f64,
    /// Per-point error estimates (counting errors for Monte Carlo histograms,
    /// truncation estimates for quadrature methods).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value_errors: Option<Vec<f64>>,
}

impl DensityCurve {
    pub fn new(
        grid: Vec<f64>,
        values: Vec<f64>,
        method: DensityMethod,
        spec: EnsembleSpec,
        norm_tolerance: f64,
    ) -> Result<Self> {
        let curve = DensityCurve {
            grid,
            values,
            method,
            delta_mass_at_zero: 0.0,
            spec,
            norm_tolerance,
            value_errors: None,
        };
        curve.check_shape()?;
        Ok(curve)
    }

    fn check_shape(&self) -> Result<()> {
        if self.grid.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                what: "density values",
                expected: self.grid.len(),
                got: self.values.len(),
            });
        }
        if !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("grid must be strictly increasing".into()));
        }
        if let Some(&x0) = self.grid.first() {
            if x0 <= 0.0 {
                return Err(Error::InvalidConfig("grid must be positive".into()));
            }
        }
        for (&x, &v) in self.grid.iter().zip(&self.values) {
            if v < -self.norm_tolerance {
                return Err(Error::NegativeDensity {
                    x,
                    value: v,
                    tol: self.norm_tolerance,
                });
            }
        }
        Ok(())
    }

    /// Trapezoidal integral over the grid plus the point mass at zero.
    pub fn trapezoid_mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values) + self.delta_mass_at_zero
    }

    /// Trapezoidal first moment over the grid (the zero mass contributes 0).
    pub fn trapezoid_first_moment(&self) -> f64 {
        let weighted: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| x * v)
            .collect();
        trapezoid(&self.grid, &weighted)
    }

    /// S̃(x) = (p/n) S(x) + (1 − p/n) δ(x): the dual density for W†W.
    pub fn dual_density_transform(&self) -> Result<DensityCurve> {
        let (p, n) = (self.spec.p, self.spec.n);
        if p > n {
            return Err(Error::PGreaterThanN { p, n });
        }
        let ratio = p as f64 / n as f64;
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= ratio;
        }
        if let Some(errs) = &mut out.value_errors {
            for e in errs {
                *e *= ratio;
            }
        }
        out.delta_mass_at_zero = self.delta_mass_at_zero * ratio + (1.0 - ratio);
        Ok(out)
    }

    /// Change of variables y = x / divisor: output value at y is
    /// divisor * S(divisor * y), so the density of WW†/n is obtained with
    /// divisor = n. Normalization is preserved exactly.
    pub fn rescale_density(&self, divisor: f64) -> Result<DensityCurve> {
        if !(divisor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rescale divisor must be positive, got {divisor}"
            )));
        }
        let mut out = self.clone();
        for x in &mut out.grid {
            *x /= divisor;
        }
        for v in &mut out.values {
            *v *= divisor;
        }
        if let Some(errs) = &mut out.value_errors {
            for e in errs {
                *e *= divisor;
            }
        }
        Ok(out)
    }
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum()
}

/// Heuristic upper edge of the support: 1.2 · max(Λ_j Γ_k) · (√p + √n)²,
/// from Marchenko-Pastur scaling.
pub fn support_upper_bound(spec: &EnsembleSpec) -> f64 {
    let max_l = spec.lambda.iter().cloned().fold(f64::MIN, f64::max);
    let max_g = spec.gamma.iter().cloned().fold(f64::MIN, f64::max);
    let root = (spec.p as f64).sqrt() + (spec.n as f64).sqrt();
    1.2 * max_l * max_g * root * root
}

/// Default support-covering grid: log-spaced near zero, linear across the
/// bulk, `count` points in total.
pub fn default_grid(spec: &EnsembleSpec, count: usize) -> Vec<f64> {
    let x_max = support_upper_bound(spec);
    grid_on_range(x_max * 1e-4, x_max, count)
}

/// Mixed log/linear grid on [lo, hi].
pub fn grid_on_range(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let knee = (hi / 10.0).max(lo *
        1.000001);
    if knee <= lo * 1.01 {
        // narrow range: plain linear
        return (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect();
    }
    let n_log = count / 3;
    let n_lin = count - n_log;
    let mut g = Vec::with_capacity(count);
    let (l0, l1) = (lo.ln(), knee.ln());
    for i in 0..n_log {
        g.push((l0 + (l1 - l0) * i as f64 / n_log as f64).exp());
    }
    for i in 0..n_lin {
        g.push(knee + (hi - knee) * i as f64 / (n_lin - 1) as f64);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_spec() -> EnsembleSpec {
        EnsembleSpec::new(
            Beta::Two,
            vec![5.9, 1.1],
            vec![0.3, 2.7, 2.5, 2.8, 5.6],
        )
    }

    #[test]
    fn validation_examples() {
        let v = fig1_spec().validate().unwrap();
        assert!(v.all_distinct());
        assert_eq!(v.lambda_groups.len(), 2);

        let tiny = EnsembleSpec::new(Beta::Two, vec![1.0], vec![1.0]);
        assert!(tiny.validate().unwrap().all_distinct());

        let bad = EnsembleSpec::new(Beta::Two, vec![-1.0, 2.0], vec![1.0]);
        assert!(matches!(
            bad.validate(),
            Err(Error::NonPositiveEigenvalue { .. })
        ));

        let mismatched = EnsembleSpec {
            p: 3,
            ..fig1_spec()
        };
        assert!(matches!(
            mismatched.validate(),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn multiplicity_grouping() {
        let spec = EnsembleSpec::new(Beta::Two, vec![2.0, 1.0, 2.0, 5.0], vec![1.0]);
        let v = spec.validate().unwrap();
        assert!(!v.lambda_distinct);
        let sizes: Vec<usize> = v.lambda_groups.iter().map(|g| g.len()).collect();
        assert_eq!(sizes, vec![1, 2, 1]);
    }

    #[test]
    fn beta_json_round_trip() {
        let spec = fig1_spec();
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"beta\":2"));
        let back: EnsembleSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let bad: std::result::Result<EnsembleSpec, _> =
            serde_json::from_str(&s.replace("\"beta\":2", "\"beta\":3"));
        assert!(bad.is_err());
    }

    #[test]
    fn normalization_constant_values() {
        let k = |beta, l: Vec<f64>, g: Vec<f64>| {
            EnsembleSpec::new(beta, l, g).log_normalization_constant()
        };
        assert!((k(Beta::Two, vec![1.0], vec![1.0]) - (1.0 / std::f64::consts::PI).ln()).abs() < 1e-14);
        assert!(
            (k(Beta::One, vec![1.0], vec![1.0]) - (2.0 * std::f64::consts::PI).ln() * -0.5).abs()
                < 1e-14
        );
        assert!(
            (k(Beta::Two, vec![2.0], vec![3.0]) - (1.0 / (6.0 * std::f64::consts::PI)).ln()).abs()
                < 1e-14
        );
        // finite up to p = n = 64
        let l: Vec<f64> = (1..=64).map(|i| 0.3 + i as f64).collect();
        let g: Vec<f64> = (1..=64).map(|i| 0.1 + 0.5 * i as f64).collect();
        assert!(k(Beta::One, l, g).is_finite());
    }

    #[test]
    fn dual_transform_examples() {
        let spec = EnsembleSpec::new(Beta::Two, vec![1.0, 2.0], vec![0.5, 1.0, 2.0, 3.0]);
        let grid = vec![0.5, 1.0, 1.5];
        let curve = DensityCurve::new(
            grid,
            vec![0.5, 0.5, 0.5],
            DensityMethod::ComplexExact,
            spec,
            1e-9,
        )
        .unwrap();
        let dual = curve.dual_density_transform().unwrap();
        assert!((dual.values[0] - 0.25).abs() < 1e-15);
        assert!((dual.delta_mass_at_zero - 0.5).abs() < 1e-15);

        // p = n: identity
        let sq = EnsembleSpec::new(Beta::Two, vec![1.0, 2.0], vec![0.5, 1.0]);
        let curve = DensityCurve::new(
            vec![1.0, 2.0],
            vec![0.3, 0.3],
            DensityMethod::ComplexExact,
            sq,
            1e-9,
        )
        .unwrap();
        let dual = curve.dual_density_transform().unwrap();
        assert_eq!(dual.values, curve.values);
        assert_eq!(dual.delta_mass_at_zero, 0.0);

        // p > n rejected
        let wide = EnsembleSpec::new(Beta::Two, vec![1.0, 2.0, 3.0], vec![0.5, 1.0]);
        let curve = DensityCurve::new(
            vec![1.0, 2.0],
            vec![0.3, 0.3],
            DensityMethod::ComplexExact,
            wide,
            1e-9,
        )
        .unwrap();
        assert!(matches!(
            curve.dual_density_transform(),
            Err(Error::PGreaterThanN { .. })
        ));
    }

    #[test]
    fn rescale_examples() {
        let spec = EnsembleSpec::new(Beta::Two, vec![1.0], vec![1.0]);
        let curve = DensityCurve::new(
            vec![2.0, 4.0],
            vec![0.3, 0.1],
            DensityMethod::ComplexExact,
            spec,
            1e-9,
        )
        .unwrap();
        let same = curve.rescale_density(1.0).unwrap();
        assert_eq!(same.values, curve.values);
        let scaled = curve.rescale_density(2.0).unwrap();
        // S(4) = 0.1 maps to value 0.2 at y = 2
        assert!((scaled.grid[1] - 2.0).abs() < 1e-15);
        assert!((scaled.values[1] - 0.2).abs() < 1e-15);
        // mass preserved
        assert!((scaled.trapezoid_mass() - curve.trapezoid_mass()).abs() < 1e-12);
    }

    #[test]
    fn method_beta_compatibility() {
        assert!(DensityMethod::ComplexExact.check_beta(Beta::One).is_err());
        assert!(DensityMethod::RealQuad.check_beta(Beta::One).is_ok());
        assert!(DensityMethod::MarchenkoPastur.check_beta(Beta::One).is_ok());
        assert!(DensityMethod::LargeN.check_beta(Beta::Two).is_ok());
    }

    #[test]
    fn grids_are_increasing_and_cover() {
        let g = default_grid(&fig1_spec(), 100);
        assert_eq!(g.len(), 100);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] > 0.0);
        assert!(g[99] >= support_upper_bound(&fig1_spec()) * 0.999);
    }
}
