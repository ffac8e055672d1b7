//! Elementary symmetric functions, exclusion tables, Δ products and
//! Vandermonde determinants — the combinatorial kernels of the closed-form
//! densities.
//!
//! Tables over positive eigenvalue lists are kept in log domain (every E_k of
//! positive values is a sum of positive products, so the log-add recurrence
//! is cancellation-free). The generic entry point works on arbitrary reals in
//! plain doubles, with an optional double-double mode for long lists.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::logdomain::SignedLog;

/// Default relative gap below which eigenvalues are treated as degenerate.
pub const DEFAULT_DELTA_GAP: f64 = 1e-8;

/// Sum over all k-subsets of the non-excluded values of their products,
/// computed by the Newton-Horner recurrence (never by subset enumeration).
/// `k` larger than the number of remaining values gives 0; `k = 0` gives 1.
pub fn elementary_symmetric(values: &[f64], k: usize, excluded: &[usize]) -> f64 {
    let mut e = vec![0.0f64; k + 1];
    e[0] = 1.0;
    for (idx, &v) in values.iter().enumerate() {
        if excluded.contains(&idx) {
            continue;
        }
        for j in (1..=k).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e[k]
}

/// Double-double variant for long lists whose alternating downstream sums
/// need the extra digits.
pub fn elementary_symmetric_dd(values: &[f64], k: usize, excluded: &[usize]) -> Dd {
    let mut e = vec![Dd::ZERO; k + 1];
    e[0] = Dd::ONE;
    for (idx, &v) in values.iter().enumerate() {
        if excluded.contains(&idx) {
            continue;
        }
        for j in (1..=k).rev() {
            e[j] = e[j].add(e[j - 1].mul_f64(v));
        }
    }
    e[k]
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln E_k for k = 0..=len over a list of positive values.
fn ln_esym_table(values: &[f64], skip: &[usize]) -> Vec<f64> {
    let len = values.len() - skip.len();
    let mut e = vec![f64::NEG_INFINITY; len + 1];
    e[0] = 0.0;
    for (idx, &v) in values.iter().enumerate() {
        if skip.contains(&idx) {
            continue;
        }
        let lv = v.ln();
        for j in (1..=len).rev() {
            e[j] = log_add(e[j], lv + e[j - 1]);
        }
    }
    e
}

/// Precomputed symmetric-function tables for one positive eigenvalue list:
/// the full E_k ladder and every single-exclusion ladder, all as
/// log-magnitudes (E_k > 0 for positive bases).
#[derive(Clone, Debug)]
pub struct SymTable {
    pub base: Vec<f64>,
    ln_full: Vec<f64>,
    ln_excl: Vec<Vec<f64>>,
}

impl SymTable {
    pub fn new(base: &[f64]) -> Result<Self> {
        for (i, &v) in base.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::NonPositiveEigenvalue { index: i, value: v });
            }
        }
        let ln_full = ln_esym_table(base, &[]);
        let ln_excl = (0..base.len())
            .map(|j| ln_esym_table(base, &[j]))
            .collect();
        Ok(SymTable {
            base: base.to_vec(),
            ln_full,
            ln_excl,
        })
    }

    /// ln E_k of the full list (NEG_INFINITY when k exceeds the length).
    pub fn ln_full(&self, k: usize) -> f64 {
        self.ln_full.get(k).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// ln E_k with index `j` excluded.
    pub fn ln_excl(&self, j: usize, k: usize) -> f64 {
        self.ln_excl[j].get(k).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// ln E_k with indices `j` and `l` excluded (computed on demand; only the
    /// small real-case double sums need it).
    pub fn ln_excl_pair(&self, j: usize, l: usize, k: usize) -> f64 {
        debug_assert!(j != l);
        ln_esym_table(&self.base, &[j, l])
            .get(k)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }
}

/// Δ(v, l) = ∏_{j≠l} (1/v_l − 1/v_j) as sign + log-magnitude.
///
/// Near-degenerate pairs are refused: the caller is expected to route such
/// spectra to the degenerate-limit evaluators instead of letting the product
/// blow up.
pub fn delta_product(values: &[f64], l: usize, delta_gap: f64) -> Result<SignedLog> {
    let vl = values[l];
    let mut sign: i8 = 1;
    let mut ln = 0.0f64;
    for (j, &vj) in values.iter().enumerate() {
        if j == l {
            continue;
        }
        let gap = (vl - vj).abs() / vl.abs().max(vj.abs());
        if gap < delta_gap {
            return Err(Error::DegenerateEigenvalues {
                a: vl,
                b: vj,
                gap,
                gap_floor: delta_gap,
            });
        }
        let term = 1.0 / vl - 1.0 / vj;
        sign *= if term > 0.0 { 1 } else { -1 };
        ln += term.abs().ln();
    }
    Ok(SignedLog::from_parts(sign, ln))
}

/// Vandermonde product ∏_{i<j} (x_j − x_i); zero when values repeat.
pub fn vandermonde(values: &[f64]) -> SignedLog {
    let mut sign: i8 = 1;
    let mut ln = 0.0f64;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let d = values[j] - values[i];
            if d == 0.0 {
                return SignedLog::ZERO;
            }
            sign *= if d > 0.0 { 1 } else { -1 };
            ln += d.abs().ln();
        }
    }
    SignedLog::from_parts(sign, ln)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: enumerate all k-subsets.
    pub fn esym_brute(values: &[f64], k: usize, excluded: &[usize]) -> f64 {
        let vals: Vec<f64> = values
            .iter()
            .enumerate()
            .filter(|(i, _)| !excluded.contains(i))
            .map(|(_, &v)| v)
            .collect();
        fn rec(vals: &[f64], k: usize, start: usize) -> f64 {
            if k == 0 {
                return 1.0;
            }
            let mut acc = 0.0;
            for i in start..vals.len() {
                acc += vals[i] * rec(vals, k - 1, i + 1);
            }
            acc
        }
        rec(&vals, k, 0)
    }

    #[test]
    fn spec_examples() {
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 2, &[]), 11.0);
        assert_eq!(elementary_symmetric(&[4.0, 5.0], 0, &[]), 1.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 3, &[2]), 0.0);
    }

    #[test]
    fn matches_brute_force() {
        let vals = [0.3, 1.7, 2.9, 0.05, 4.4, 8.1, 0.9];
        for k in 0..=7 {
            let a = elementary_symmetric(&vals, k, &[]);
            let b = esym_brute(&vals, k, &[]);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "k={k}: {a} vs {b}");
            let a = elementary_symmetric(&vals, k, &[1, 4]);
            let b = esym_brute(&vals, k, &[1, 4]);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn table_matches_direct_and_exclusion_identity() {
        let vals = [0.3, 2.7, 2.5, 2.8, 5.6, 1.0];
        let t = SymTable::new(&vals).unwrap();
        for k in 0..=6 {
            let direct = elementary_symmetric(&vals, k, &[]);
            let tab = t.ln_full(k).exp();
            assert!((tab - direct).abs() <= 1e-12 * direct.max(1.0));
        }
        // E_k = E_k^(j-hat) + v_j E_{k-1}^(j-hat)
        for j in 0..vals.len() {
            for k in 1..=5 {
                let lhs = t.ln_full(k).exp();
                let rhs = t.ln_excl(j, k).exp() + vals[j] * t.ln_excl(j, k - 1).exp();
                assert!((lhs - rhs).abs() <= 1e-12 * lhs, "j={j} k={k}");
            }
        }
        // pair exclusion consistency
        let pair = t.ln_excl_pair(0, 3, 2).exp();
        let brute = esym_brute(&vals, 2, &[0, 3]);
        assert!((pair - brute).abs() <= 1e-12 * brute);
    }

    #[test]
    fn delta_product_examples() {
        let d = delta_product(&[1.0, 2.0], 0, DEFAULT_DELTA_GAP).unwrap();
        assert!((d.to_f64() - 0.5).abs() < 1e-15);
        let single = delta_product(&[3.4], 0, DEFAULT_DELTA_GAP).unwrap();
        assert_eq!(single.to_f64(), 1.0);
        let err = delta_product(&[1.0, 1.0 + 1e-14], 0, DEFAULT_DELTA_GAP);
        assert!(matches!(err, Err(Error::DegenerateEigenvalues { .. })));
    }

    #[test]
    fn vandermonde_examples() {
        assert!((vandermonde(&[1.0, 2.0, 3.0]).to_f64() - 2.0).abs() < 1e-15);
        assert_eq!(vandermonde(&[7.0]).to_f64(), 1.0);
        assert_eq!(vandermonde(&[1.0, 1.0, 2.0]).sign, 0);
        // antisymmetry under a swap
        let a = vandermonde(&[0.5, 1.5, 4.0]);
        let b = vandermonde(&[1.5, 0.5, 4.0]);
        assert_eq!(a.sign, -b.sign);
        assert!((a.ln - b.ln).abs() < 1e-14);
    }
}
