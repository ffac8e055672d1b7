//! Quadrature building blocks: Gauss-Legendre rules, adaptive Gauss-Kronrod,
//! and principal-value helpers used by the density integrators.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x), P'_n(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A reusable panel rule mapped to arbitrary intervals.
#[derive(Clone, Debug)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelRule {
    pub fn gauss(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        PanelRule { nodes, weights }
    }

    /// Accumulate f over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

// Gauss-Kronrod 7-15 pair (QUADPACK constants).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_g = WG[3] * fc;
    let mut res_k = WGK[7] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        res_k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let err = (res_k - res_g).abs() * h;
    (res_k * h, (200.0 * err).powf(1.5).min(err).max(err * 1e-6))
}

/// Adaptive Gauss-Kronrod integration of `f` over [a, b].
///
/// Splits the worst interval until the summed error estimate meets
/// `abs_tol + rel_tol * |integral|` or the subdivision budget is exhausted.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap: Vec<(f64, f64, f64, f64)> = vec![(e, a, b, v)];
    let mut total_v = v;
    let mut total_e = e;
    while total_e > abs_tol + rel_tol * total_v.abs() {
        if heap.len() >= max_intervals {
            return Err(Error::NotConverged {
                what: "adaptive Gauss-Kronrod",
                change: total_e,
                tol: abs_tol + rel_tol * total_v.abs(),
            });
        }
        // take the interval with the largest error
        let (idx, _) = heap
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.partial_cmp(&y.1 .0).unwrap())
            .unwrap();
        let (e0, lo, hi, v0) = heap.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval at floating-point resolution; keep its estimate
            heap.push((0.0, lo, hi, v0));
            total_e -= e0;
            continue;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total_v += v1 + v2 - v0;
        total_e += e1 + e2 - e0;
        heap.push((e1, lo, mid, v1));
        heap.push((e2, mid, hi, v2));
    }
    Ok((total_v, total_e))
}

/// Adaptive integration with interior breakpoints (singular or non-smooth
/// interior locations get their own subintervals).
pub fn adaptive_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64)> {
    let mut pts: Vec<f64> = vec![a, b];
    pts.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut v = 0.0;
    let mut e = 0.0;
    let seg_tol = abs_tol / pts.len() as f64;
    for w in pts.windows(2) {
        let (vi, ei) = adaptive(&mut f, w[0], w[1], seg_tol, rel_tol, max_intervals)?;
        v += vi;
        e += ei;
    }
    Ok((v, e))
}

/// Principal value of ∫ f(t)/(t - pole) dt over [a, b] containing the pole:
/// integrates the symmetric pair exactly and the smooth remainder adaptively.
///
/// Around the pole: PV ∫_{-d}^{d} f(pole+u)/u du = ∫_0^d [f(pole+u)-f(pole-u)]/u du.
pub fn principal_value<F: Fn(f64) -> f64>(
    f: F,
    pole: f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64)> {
    assert!(a < pole && pole < b, "pole must be interior");
    let d = (pole - a).min(b - pole);
    // symmetric window
    let sym = adaptive(
        |u| {
            if u == 0.0 {
                0.0
            } else {
                (f(pole + u) - f(pole - u)) / u
            }
        },
        0.0,
        d,
        abs_tol * 0.5,
        0.0,
        max_intervals,
    )?;
    // remainders outside the window
    let mut v = sym.0;
    let mut e = sym.1;
    if a < pole - d {
        let left = adaptive(
            |t| f(t) / (t - pole),
            a,
            pole - d,
            abs_tol * 0.25,
            0.0,
            max_intervals,
        )?;
        v += left.0;
        e += left.1;
    }
    if pole + d < b {
        let right = adaptive(
            |t| f(t) / (t - pole),
            pole + d,
            b,
            abs_tol * 0.25,
            0.0,
            max_intervals,
        )?;
        v += right.0;
        e += right.1;
    }
    Ok((v, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        // exact for degree <= 15: integrate t^14 over [-1,1] = 2/15
        let s: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_basic() {
        let (v, e) = adaptive(|t: f64| t.sin(), 0.0, std::f64::consts::PI, 1e-12, 0.0, 200).unwrap();
        assert!((v - 2.0).abs() < 1e-11, "v={v} e={e}");
        // integrable sqrt singularity
        let (v, _) = adaptive(|t: f64| t.sqrt().recip(), 1e-300, 1.0, 1e-10, 0.0, 4000).unwrap();
        assert!((v - 2.0).abs() < 1e-6, "v={v}");
    }

    #[test]
    fn principal_value_log_kernel() {
        // PV int_0^2 1/(t-1) dt = 0
        let (v, _) = principal_value(|_| 1.0, 1.0, 0.0, 2.0, 1e-12, 200).unwrap();
        assert!(v.abs() < 1e-12);
        // PV int_0^3 t/(t-1) dt = 3 + ln 2
        let (v, _) = principal_value(|t| t, 1.0, 0.0, 3.0, 1e-12, 400).unwrap();
        assert!((v - 3.0 - 2f64.ln()).abs() < 1e-10, "v={v}");
    }
}
