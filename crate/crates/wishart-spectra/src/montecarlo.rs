//! Seeded Monte Carlo oracle: sampling of doubly correlated Wishart
//! matrices, histogram densities with counting errors, and curve-vs-curve
//! comparison metrics.
//!
//! A draw forms W = √Λ G √Γ with G standard Gaussian (real for β = 1,
//! complex with E|G|² = 1 for β = 2), so E[(WW†)_ii] = Λ_i ΣΓ_k, and
//! diagonalizes WW†. Randomness is addressed per draw through the
//! counter-based generator, so results are independent of the thread count.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Beta, DensityCurve, DensityMethod, EnsembleSpec};
use crate::rng::GaussianStream;
use crate::threads::parallel_map;
use serde::{Deserialize, Serialize};

/// How many counting-error standard deviations make up an "error bar" when
/// comparing a histogram against a reference curve.
pub const ERROR_BAR_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum BinSpec {
    /// `count` uniform bins from 0 to a small margin above the largest sample.
    Count(usize),
    /// Uniform bins over an explicit range.
    Range { lo: f64, hi: f64, count: usize },
    /// Explicit strictly increasing bin edges.
    Edges(Vec<f64>),
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::Count(60)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McConfig {
    pub spec: EnsembleSpec,
    pub samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub bins: BinSpec,
}

/// Eigenvalues of one draw, sorted ascending, all non-negative.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueSample {
    pub values: Vec<f64>,
}

/// Draw `config.samples` correlated Wishart matrices and return their
/// eigenvalue samples. Deterministic in (spec, seed) alone.
pub fn sample_wishart(config: &McConfig) -> Result<Vec<EigenvalueSample>> {
    let validated = config.spec.validate()?;
    let spec = &validated.spec;
    let sqrt_l: Vec<f64> = spec.lambda.iter().map(|v| v.sqrt()).collect();
    let sqrt_g: Vec<f64> = spec.gamma.iter().map(|v| v.sqrt()).collect();
    let (p, n) = (spec.p, spec.n);
    let results = parallel_map(config.samples as usize, |draw| {
        let mut rng = GaussianStream::new(config.seed, draw as u64);
        match spec.beta {
            Beta::One => {
                let mut w = vec![0.0f64; p * n];
                for i in 0..p {
                    for k in 0..n {
                        w[i * n + k] = sqrt_l[i] * sqrt_g[k] * rng.next_normal();
                    }
                }
                let mut m = vec![0.0f64; p * p];
                for i in 0..p {
                    for j in 0..=i {
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += w[i * n + k] * w[j * n + k];
                        }
                        m[i * p + j] = acc;
                        m[j * p + i] = acc;
                    }
                }
                linalg::sym_eigenvalues(&mut m, p)
            }
            Beta::Two => {
                let scale = std::f64::consts::FRAC_1_SQRT_2;
                let mut wr = vec![0.0f64; p * n];
                let mut wi = vec![0.0f64; p * n];
                for i in 0..p {
                    for k in 0..n {
                        let c = sqrt_l[i] * sqrt_g[k] * scale;
                        wr[i * n + k] = c * rng.next_normal();
                        wi[i * n + k] = c * rng.next_normal();
                    }
                }
                let mut mr = vec![0.0f64; p * p];
                let mut mi = vec![0.0f64; p * p];
                for i in 0..p {
                    for j in 0..=i {
                        let mut ar = 0.0;
                        let mut ai = 0.0;
                        for k in 0..n {
                            // (W W†)_{ij} = sum_k W_ik conj(W_jk)
                            ar += wr[i * n + k] * wr[j * n + k] + wi[i * n + k] * wi[j * n + k];
                            ai += wi[i * n + k] * wr[j * n + k] - wr[i * n + k] * wi[j * n + k];
                        }
                        mr[i * p + j] = ar;
                        mr[j * p + i] = ar;
                        mi[i * p + j] = ai;
                        mi[j * p + i] = -ai;
                    }
                }
                linalg::herm_eigenvalues(&mr, &mi, p)
            }
        }
        .map(|mut vals| {
            for v in &mut vals {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            EigenvalueSample { values: vals }
        })
    });
    results.into_iter().collect()
}

/// A histogram density with exact bin bookkeeping alongside the curve view.
#[derive(Clone, Debug)]
pub struct Histogram {
    pub curve: DensityCurve,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_in_range: u64,
}

impl Histogram {
    /// Σ density_i * width_i — equals 1 exactly by construction.
    pub fn bin_mass(&self) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.curve.values)
            .map(|(e, v)| v * (e[1] - e[0]))
            .sum()
    }
}

/// Bin the samples into a normalized density curve with 1-sigma counting
/// errors per bin.
pub fn histogram_density(
    samples: &[EigenvalueSample],
    bins: &BinSpec,
    spec: &EnsembleSpec,
) -> Result<Histogram> {
    let mut values: Vec<f64> = samples.iter().flat_map(|s| s.values.clone()).collect();
    if values.is_empty() {
        return Err(Error::EmptyRange);
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let edges: Vec<f64> = match bins {
        BinSpec::Count(c) => {
            let hi = values.last().unwrap() * 1.0001 + 1e-12;
            uniform_edges(0.0, hi, *c)
        }
        BinSpec::Range { lo, hi, count } => uniform_edges(*lo, *hi, *count),
        BinSpec::Edges(e) => e.clone(),
    };
    if edges.len() < 2 || !edges.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidConfig("bin edges must be increasing".into()));
    }
    let nbins = edges.len() - 1;
    let mut counts = vec![0u64; nbins];
    let mut total = 0u64;
    for &v in &values {
        if v < edges[0] || v >= edges[nbins] {
            continue;
        }
        // binary search for the bin
        let mut lo = 0usize;
        let mut hi = nbins;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if v >= edges[mid] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        counts[lo] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptyRange);
    }
    let mut grid = Vec::with_capacity(nbins);
    let mut dens = Vec::with_capacity(nbins);
    let mut errs = Vec::with_capacity(nbins);
    for (i, w) in edges.windows(2).enumerate() {
        let width = w[1] - w[0];
        grid.push(0.5 * (w[0] + w[1]));
        dens.push(counts[i] as f64 / (total as f64 * width));
        errs.push((counts[i] as f64).sqrt().max(1.0) / (total as f64 * width));
    }
    let mut curve = DensityCurve::new(grid, dens, DensityMethod::MonteCarlo, spec.clone(), 0.05)?;
    curve.value_errors = Some(errs);
    Ok(Histogram {
        curve,
        edges,
        counts,
        total_in_range: total,
    })
}

fn uniform_edges(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| lo + (hi - lo) * i as f64 / count as f64)
        .collect()
}

/// Distance metrics between two density curves on their overlapping support.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub l1_distance: f64,
    pub sup_distance: f64,
    pub moment1_delta: f64,
    pub moment2_delta: f64,
    /// Fraction of error-bar-carrying grid points where |a - b| exceeds
    /// `ERROR_BAR_SIGMAS` counting-sigmas. None when neither curve carries
    /// error bars.
    pub frac_outside_error_bars: Option<f64>,
    pub overlap: (f64, f64),
}

fn interp(grid: &[f64], values: &[f64], x: f64) -> f64 {
    match grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
        Ok(i) => values[i],
        Err(0) => values[0],
        Err(i) if i >= grid.len() => *values.last().unwrap(),
        Err(i) => {
            let t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
            values[i - 1] * (1.0 - t) + values[i] * t
        }
    }
}

/// Compare two curves: L1 and sup distance, first/second moment deltas, and
/// the fraction of bins outside counting-error bars.
pub fn compare_densities(a: &DensityCurve, b: &DensityCurve) -> Result<ComparisonReport> {
    let lo = a.grid[0].max(b.grid[0]);
    let hi = a.grid[a.grid.len() - 1].min(b.grid[b.grid.len() - 1]);
    if !(hi > lo) {
        return Err(Error::DisjointSupports);
    }
    let mut pts: Vec<f64> = a
        .grid
        .iter()
        .chain(b.grid.iter())
        .copied()
        .filter(|&x| (lo..=hi).contains(&x))
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    if pts.len() < 2 {
        return Err(Error::DisjointSupports);
    }
    let av: Vec<f64> = pts.iter().map(|&x| interp(&a.grid, &a.values, x)).collect();
    let bv: Vec<f64> = pts.iter().map(|&x| interp(&b.grid, &b.values, x)).collect();
    let mut l1 = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for i in 1..pts.len() {
        let h = pts[i] - pts[i - 1];
        let d0 = av[i - 1] - bv[i - 1];
        let d1 = av[i] - bv[i];
        l1 += 0.5 * h * (d0.abs() + d1.abs());
        m1 += 0.5 * h * (pts[i - 1] * d0 + pts[i] * d1);
        m2 += 0.5 * h * (pts[i - 1] * pts[i - 1] * d0 + pts[i] * pts[i] * d1);
    }
    let sup = av
        .iter()
        .zip(&bv)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    // error-bar exceedances on the native grids of curves that carry bars
    let frac = {
        let mut checked = 0usize;
        let mut outside = 0usize;
        let mut handle = |with_err: &DensityCurve, other: &DensityCurve| {
            if let Some(errs) = &with_err.value_errors {
                for ((&x, &v), &e) in with_err.grid.iter().zip(&with_err.values).zip(errs) {
                    if !(lo..=hi).contains(&x) {
                        continue;
                    }
                    let o = interp(&other.grid, &other.values, x);
                    checked += 1;
                    if (v - o).abs() > ERROR_BAR_SIGMAS * e {
                        outside += 1;
                    }
                }
            }
        };
        if a.value_errors.is_some() {
            handle(a, b);
        } else if b.value_errors.is_some() {
            handle(b, a);
        }
        if checked > 0 {
            Some(outside as f64 / checked as f64)
        } else {
            None
        }
    };

    Ok(ComparisonReport {
        l1_distance: l1,
        sup_distance: sup,
        moment1_delta: m1,
        moment2_delta: m2,
        frac_outside_error_bars: frac,
        overlap: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_config(beta: Beta, samples: u64) -> McConfig {
        McConfig {
            spec: EnsembleSpec::new(beta, vec![1.0], vec![1.0]),
            samples,
            seed: 20240917,
            bins: BinSpec::Count(40),
        }
    }

    #[test]
    fn determinism_same_seed_same_stream() {
        let cfg = McConfig {
            spec: EnsembleSpec::new(Beta::Two, vec![5.9, 1.1], vec![0.3, 2.7, 2.5, 2.8, 5.6]),
            samples: 64,
            seed: 7,
            bins: BinSpec::Count(10),
        };
        let a = sample_wishart(&cfg).unwrap();
        let b = sample_wishart(&cfg).unwrap();
        assert_eq!(a, b);
        // and independent of the thread count
        std::env::set_var("WISHART_SPECTRA_THREADS", "1");
        let c = sample_wishart(&cfg).unwrap();
        std::env::remove_var("WISHART_SPECTRA_THREADS");
        assert_eq!(a, c);
    }

    #[test]
    fn scalar_complex_mean_is_one() {
        // p = n = 1, beta = 2: eigenvalue is exponential with mean 1
        let cfg = scalar_config(Beta::Two, 100_000);
        let samples = sample_wishart(&cfg).unwrap();
        let mean: f64 =
            samples.iter().map(|s| s.values[0]).sum::<f64>() / cfg.samples as f64;
        let stderr = 1.0 / (cfg.samples as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * stderr, "mean {mean}");
    }

    #[test]
    fn scalar_real_is_chi_square() {
        // p = n = 1, beta = 1: lambda = W^2, mean 1, variance 2
        let cfg = scalar_config(Beta::One, 100_000);
        let samples = sample_wishart(&cfg).unwrap();
        let xs: Vec<f64> = samples.iter().map(|s| s.values[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        assert!((var - 2.0).abs() < 0.15, "var {var}");
    }

    #[test]
    fn trace_moment_identity() {
        // E[sum lambda / p] = (sum Lambda)(sum Gamma)/p for both betas
        for beta in [Beta::One, Beta::Two] {
            let spec = EnsembleSpec::new(beta, vec![1.5, 0.5, 2.0], vec![0.7, 1.3, 2.2, 0.4]);
            let cfg = McConfig {
                spec: spec.clone(),
                samples: 40_000,
                seed: 99,
                bins: BinSpec::Count(10),
            };
            let samples = sample_wishart(&cfg).unwrap();
            let mean: f64 = samples
                .iter()
                .map(|s| s.values.iter().sum::<f64>() / spec.p as f64)
                .sum::<f64>()
                / cfg.samples as f64;
            let expect = spec.first_moment();
            // rough std error: per-draw variance is O(expect^2 / p)
            let se = expect / (spec.p as f64 * cfg.samples as f64).sqrt() * 2.0;
            assert!(
                (mean - expect).abs() < 4.0 * se,
                "beta {:?}: {mean} vs {expect}",
                beta
            );
        }
    }

    #[test]
    fn histogram_single_sample_single_bin() {
        let spec = EnsembleSpec::new(Beta::Two, vec![1.0], vec![1.0]);
        let samples = vec![EigenvalueSample { values: vec![0.5] }];
        let h = histogram_density(
            &samples,
            &BinSpec::Range {
                lo: 0.0,
                hi: 2.0,
                count: 1,
            },
            &spec,
        )
        .unwrap();
        assert_eq!(h.curve.values, vec![0.5]); // 1/width = 1/2
        assert!((h.bin_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_mass_is_exactly_one() {
        let cfg = scalar_config(Beta::Two, 2000);
        let samples = sample_wishart(&cfg).unwrap();
        let h = histogram_density(&samples, &cfg.bins, &cfg.spec).unwrap();
        assert!((h.bin_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_range_is_an_error() {
        let spec = EnsembleSpec::new(Beta::Two, vec![1.0], vec![1.0]);
        let samples = vec![EigenvalueSample { values: vec![5.0] }];
        let r = histogram_density(
            &samples,
            &BinSpec::Range {
                lo: 0.0,
                hi: 1.0,
                count: 4,
            },
            &spec,
        );
        assert!(matches!(r, Err(Error::EmptyRange)));
    }

    #[test]
    fn compare_identical_curves() {
        let spec = EnsembleSpec::new(Beta::Two, vec![1.0], vec![1.0]);
        let c = DensityCurve::new(
            vec![0.5, 1.0, 2.0],
            vec![0.4, 0.3, 0.1],
            DensityMethod::ComplexExact,
            spec,
            1e-9,
        )
        .unwrap();
        let r = compare_densities(&c, &c).unwrap();
        assert_eq!(r.l1_distance, 0.0);
        assert_eq!(r.sup_distance, 0.0);
        assert_eq!(r.moment1_delta, 0.0);
    }

    #[test]
    fn compare_disjoint_supports() {
        let spec = EnsembleSpec::new(Beta::Two, vec![1.0], vec![1.0]);
        let a = DensityCurve::new(
            vec![0.5, 1.0],
            vec![1.0, 1.0],
            DensityMethod::ComplexExact,
            spec.clone(),
            1e-9,
        )
        .unwrap();
        let b = DensityCurve::new(
            vec![3.0, 4.0],
            vec![1.0, 1.0],
            DensityMethod::ComplexExact,
            spec,
            1e-9,
        )
        .unwrap();
        assert!(matches!(
            compare_densities(&a, &b),
            Err(Error::DisjointSupports)
        ));
    }
}
