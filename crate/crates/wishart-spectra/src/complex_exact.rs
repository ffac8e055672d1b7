//! The exact eigenvalue density for the unitary class (β = 2): the closed
//! form for fully distinct spectra, analytic confluent limits for coalesced
//! spectra (one-sided and Laguerre reductions), and an eigenvalue-splitting
//! extrapolation for small multiplicities.
//!
//! Every term is assembled in sign/log-magnitude arithmetic with compensated
//! accumulation; the accumulator reports how much cancellation occurred, and
//! evaluation escalates to double-double when the double-precision digits are
//! exhausted (which happens at small x, where the terms grow like
//! x^{-(p-1)} while the density stays finite).

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::logdomain::{ln_factorial, DdAccumulator, LogAccumulator, SignedLog};
use crate::model::{Beta, EnsembleSpec, ValidatedSpec};
use crate::symfunc::{delta_product, SymTable};

/// Relative-error threshold beyond which the double path defers to
/// double-double.
const ESCALATE_REL_ERR: f64 = 1e-11;

/// Precomputed tables for the closed-form density of one distinct-spectrum
/// ensemble.
#[derive(Clone, Debug)]
pub struct ComplexDensityPlan {
    spec: EnsembleSpec,
    lambda_table: SymTable,
    gamma_table: SymTable,
    delta_lambda: Vec<SignedLog>,
    delta_gamma: Vec<SignedLog>,
    /// 1 / (p (-1)^{p+n} ΠΓ ΠΛ)
    prefactor: SignedLog,
    /// below this x the dominant-term limit is returned instead of the raw sum
    x_floor: f64,
    /// above this x the double-double escape hatch would underflow; the
    /// double path needs no help there anyway
    dd_safe_x: f64,
    // linear double-double tables for the escalation path (the log-domain
    // values above carry only double accuracy, which cancellation would
    // expose)
    dd: DdTables,
}

#[derive(Clone, Debug)]
struct DdTables {
    e_lambda_full: Vec<Dd>,
    e_gamma_full: Vec<Dd>,
    e_lambda_excl: Vec<Vec<Dd>>,
    e_gamma_excl: Vec<Vec<Dd>>,
    delta_lambda: Vec<Dd>,
    delta_gamma: Vec<Dd>,
    /// signed 1 / (p (-1)^{p+n} ΠΓ ΠΛ)
    prefactor: Dd,
}

impl DdTables {
    fn build(spec: &EnsembleSpec) -> DdTables {
        let (p, n) = (spec.p, spec.n);
        let esym_tab = |vals: &[f64], excl: &[usize], upto: usize| -> Vec<Dd> {
            (0..=upto)
                .map(|u| crate::symfunc::elementary_symmetric_dd(vals, u, excl))
                .collect()
        };
        let delta_dd = |vals: &[f64], l: usize| -> Dd {
            let mut acc = Dd::ONE;
            let inv_l = Dd::from_f64(vals[l]).recip();
            for (j, &v) in vals.iter().enumerate() {
                if j != l {
                    acc = acc.mul(inv_l.sub(Dd::from_f64(v).recip()));
                }
            }
            acc
        };
        let mut prefactor = Dd::from_f64(if (p + n) % 2 == 0 { 1.0 } else { -1.0 })
            .div(Dd::from_f64(p as f64));
        for &v in spec.lambda.iter().chain(spec.gamma.iter()) {
            prefactor = prefactor.div(Dd::from_f64(v));
        }
        DdTables {
            e_lambda_full: esym_tab(&spec.lambda, &[], p),
            e_gamma_full: esym_tab(&spec.gamma, &[], p),
            e_lambda_excl: (0..p).map(|m| esym_tab(&spec.lambda, &[m], p)).collect(),
            e_gamma_excl: (0..n).map(|k| esym_tab(&spec.gamma, &[k], p)).collect(),
            delta_lambda: (0..p).map(|l| delta_dd(&spec.lambda, l)).collect(),
            delta_gamma: (0..n).map(|k| delta_dd(&spec.gamma, k)).collect(),
            prefactor,
        }
    }
}

/// A density value with an absolute error estimate.
#[derive(Clone, Copy, Debug)]
pub struct DensityValue {
    pub value: f64,
    pub est_error: f64,
}

impl ComplexDensityPlan {
    pub fn new(validated: &ValidatedSpec) -> Result<Self> {
        let spec = &validated.spec;
        if spec.beta != Beta::Two {
            return Err(Error::MethodBetaMismatch {
                method: crate::model::DensityMethod::ComplexExact,
                required: 2,
                got: spec.beta.as_u32(),
            });
        }
        let delta_lambda = (0..spec.p)
            .map(|l| delta_product(&spec.lambda, l, validated.delta_gap))
            .collect::<Result<Vec<_>>>()?;
        let delta_gamma = (0..spec.n)
            .map(|k| delta_product(&spec.gamma, k, validated.delta_gap))
            .collect::<Result<Vec<_>>>()?;
        let lambda_table = SymTable::new(&spec.lambda)?;
        let gamma_table = SymTable::new(&spec.gamma)?;
        let ln_prod: f64 = spec
            .lambda
            .iter()
            .chain(spec.gamma.iter())
            .map(|v| v.ln())
            .sum();
        let sign = if (spec.p + spec.n) % 2 == 0 { 1 } else { -1 };
        let prefactor = SignedLog::from_parts(sign, -(spec.p as f64).ln() - ln_prod);
        let min_scale = min_product_scale(spec);
        let dd = DdTables::build(spec);
        Ok(ComplexDensityPlan {
            spec: spec.clone(),
            lambda_table,
            gamma_table,
            delta_lambda,
            delta_gamma,
            prefactor,
            x_floor: 1e-8 * min_scale,
            dd_safe_x: 600.0 * min_scale,
            dd,
        })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    /// Enumerate every atomic term of the density at x into `emit(term)`.
    /// The five nested sum groups are fully expanded so the accumulator sees
    /// the true cancellation.
    fn for_each_term<F: FnMut(SignedLog)>(&self, x: f64, mut emit: F) {
        let spec = &self.spec;
        let (p, n) = (spec.p, spec.n);
        let lam = &spec.lambda;
        let gam = &spec.gamma;
        let ln_x = x.ln();

        // group A: sum_{k,l} e^{-x/(G_k L_l)} / (x^{p-1} dL_l dG_k) * U_A
        // with U_A = sum_u E_u^n(G) E_u^p(L) u! (p-u) (-1)^u x^{p-u-1}
        for u in 0..p {
            let ua = SignedLog::from_parts(
                if u % 2 == 0 { 1 } else { -1 },
                self.gamma_table.ln_full(u)
                    + self.lambda_table.ln_full(u)
                    + ln_factorial(u)
                    + ((p - u) as f64).ln()
                    + (p - u - 1) as f64 * ln_x,
            );
            if ua.is_zero() {
                continue;
            }
            for k in 0..n {
                for l in 0..p {
                    let t = ua
                        .mul(SignedLog::from_parts(1, -x / (gam[k] * lam[l])))
                        .mul(SignedLog::from_parts(1, -((p - 1) as f64) * ln_x))
                        .div(self.delta_lambda[l])
                        .div(self.delta_gamma[k]);
                    emit(t);
                }
            }
        }
        if p < 2 {
            return;
        }

        // group B: sum_{k,m} [B1 + B2 + B3] * U_B^{(k,m)}
        for k in 0..n {
            for m in 0..p {
                // U_B atoms: E_u^n(G^k) E_u^p(L^m) u! (-1)^u (p-u-1) x^{p-u-2}
                let ub: Vec<SignedLog> = (0..=p - 2)
                    .map(|u| {
                        SignedLog::from_parts(
                            if u % 2 == 0 { 1 } else { -1 },
                            self.gamma_table.ln_excl(k, u)
                                + self.lambda_table.ln_excl(m, u)
                                + ln_factorial(u)
                                + ((p - u - 1) as f64).ln()
                                + (p - u - 2) as f64 * ln_x,
                        )
                    })
                    .collect();

                let mut bracket: Vec<SignedLog> = Vec::with_capacity(4 * n + 4 * p * n);

                // B1: (L_m G_k / (x^{p-1} dL_m)) * ( ... )
                let coef1 = SignedLog::from_parts(
                    1,
                    lam[m].ln() + gam[k].ln() - ((p - 1) as f64) * ln_x,
                )
                .div(self.delta_lambda[m]);
                for l in 0..n {
                    if l == k {
                        continue;
                    }
                    // + e^{-x/(L_m G_l)} / (dG_l (1 - G_l/G_k))
                    bracket.push(
                        coef1
                            .mul(SignedLog::from_parts(1, -x / (lam[m] * gam[l])))
                            .div(self.delta_gamma[l])
                            .div(SignedLog::from_f64(1.0 - gam[l] / gam[k])),
                    );
                    // - e^{-x/(L_m G_k)} / (dG_k (1 - G_k/G_l))
                    bracket.push(
                        coef1
                            .mul(SignedLog::from_parts(-1, -x / (lam[m] * gam[k])))
                            .div(self.delta_gamma[k])
                            .div(SignedLog::from_f64(1.0 - gam[k] / gam[l])),
                    );
                }
                // - (x/(L_m G_k) - 1) e^{-x/(L_m G_k)} / dG_k  (two atoms)
                let e_mk = SignedLog::from_parts(1, -x / (lam[m] * gam[k]));
                bracket.push(
                    coef1
                        .mul(e_mk)
                        .mul(SignedLog::from_parts(-1, ln_x - (lam[m] * gam[k]).ln()))
                        .div(self.delta_gamma[k]),
                );
                bracket.push(coef1.mul(e_mk).div(self.delta_gamma[k]));

                // B2 and B3 over q != m
                for q in 0..p {
                    if q == m {
                        continue;
                    }
                    let inv_gap = SignedLog::from_f64(1.0 / lam[m] - 1.0 / lam[q]);
                    let base = SignedLog::from_parts(
                        1,
                        lam[m].ln() + gam[k].ln() - (p as f64) * ln_x,
                    )
                    .div(inv_gap);
                    // B2 uses dL_m and exponentials at L_m; B3 uses dL_q and L_q
                    for (coef, lam_e) in [
                        (base.div(self.delta_lambda[m]), lam[m]),
                        (base.div(self.delta_lambda[q]), lam[q]),
                    ] {
                        for l in 0..n {
                            if l == k {
                                continue;
                            }
                            bracket.push(
                                coef.mul(SignedLog::from_parts(1, -x / (lam_e * gam[l])))
                                    .div(self.delta_gamma[l])
                                    .div(SignedLog::from_f64(1.0 / gam[l] - 1.0 / gam[k])),
                            );
                            bracket.push(
                                coef.mul(SignedLog::from_parts(-1, -x / (lam_e * gam[k])))
                                    .div(self.delta_gamma[k])
                                    .div(SignedLog::from_f64(1.0 / gam[k] - 1.0 / gam[l])),
                            );
                        }
                        // - x e^{-x/(L G_k)} / (L dG_k)
                        bracket.push(
                            coef.mul(SignedLog::from_parts(
                                -1,
                                ln_x - x / (lam_e * gam[k]) - lam_e.ln(),
                            ))
                            .div(self.delta_gamma[k]),
                        );
                    }
                }

                for b in &bracket {
                    for u in &ub {
                        emit(b.mul(*u));
                    }
                }
            }
        }
    }

    fn eval_double(&self, x: f64) -> (f64, f64) {
        let mut acc = LogAccumulator::new();
        self.for_each_term(x, |t| acc.add(t));
        let v = acc.value().mul(self.prefactor);
        (v.to_f64(), acc.relative_error_estimate())
    }

    /// Linear double-double re-evaluation; mirrors `for_each_term` exactly
    /// but keeps ~32 digits through the cancellations.
    fn eval_dd(&self, x: f64) -> (f64, f64) {
        let spec = &self.spec;
        let (p, n) = (spec.p, spec.n);
        let t = &self.dd;
        let lam = &spec.lambda;
        let gam = &spec.gamma;
        let xd = Dd::from_f64(x);
        // x^i for i = 0..=p
        let mut xpow = vec![Dd::ONE; p + 1];
        for i in 1..=p {
            xpow[i] = xpow[i - 1].mul(xd);
        }
        let fact = |u: usize| Dd::from_f64(ln_factorial(u).exp());
        let expd = |arg: f64| Dd::from_f64(arg).exp();
        let mut acc = DdAccumulator::new();

        // group A
        let mut ua = Dd::ZERO;
        for u in 0..p {
            let sgn = if u % 2 == 0 { 1.0 } else { -1.0 };
            ua = ua.add(
                t.e_gamma_full[u]
                    .mul(t.e_lambda_full[u])
                    .mul(fact(u))
                    .mul_f64(sgn * (p - u) as f64)
                    .mul(xpow[p - u - 1]),
            );
        }
        let inv_xp1 = xpow[p - 1].recip();
        for k in 0..n {
            for l in 0..p {
                let term = expd(-x / (gam[k] * lam[l]))
                    .mul(ua)
                    .mul(inv_xp1)
                    .div(t.delta_lambda[l])
                    .div(t.delta_gamma[k]);
                acc.add(term);
            }
        }

        if p >= 2 {
            let inv_xp = xpow[p].recip();
            for k in 0..n {
                for m in 0..p {
                    let mut ub = Dd::ZERO;
                    for u in 0..=(p - 2) {
                        let sgn = if u % 2 == 0 { 1.0 } else { -1.0 };
                        ub = ub.add(
                            t.e_gamma_excl[k][u]
                                .mul(t.e_lambda_excl[m][u])
                                .mul(fact(u))
                                .mul_f64(sgn * (p - u - 1) as f64)
                                .mul(xpow[p - u - 2]),
                        );
                    }
                    let mut bracket = Dd::ZERO;
                    // B1
                    let coef1 = Dd::from_f64(lam[m] * gam[k])
                        .mul(inv_xp1)
                        .div(t.delta_lambda[m]);
                    for l in 0..n {
                        if l == k {
                            continue;
                        }
                        bracket = bracket.add(
                            coef1
                                .mul(expd(-x / (lam[m] * gam[l])))
                                .div(t.delta_gamma[l])
                                .div(Dd::ONE.sub(Dd::from_f64(gam[l] / gam[k]))),
                        );
                        bracket = bracket.sub(
                            coef1
                                .mul(expd(-x / (lam[m] * gam[k])))
                                .div(t.delta_gamma[k])
                                .div(Dd::ONE.sub(Dd::from_f64(gam[k] / gam[l]))),
                        );
                    }
                    let e_mk = expd(-x / (lam[m] * gam[k]));
                    bracket = bracket.sub(
                        coef1
                            .mul(e_mk)
                            .mul(xd.div(Dd::from_f64(lam[m] * gam[k])).add_f64(-1.0))
                            .div(t.delta_gamma[k]),
                    );
                    // B2 and B3
                    for q in 0..p {
                        if q == m {
                            continue;
                        }
                        let inv_gap = Dd::from_f64(lam[m])
                            .recip()
                            .sub(Dd::from_f64(lam[q]).recip());
                        let base = Dd::from_f64(lam[m] * gam[k]).mul(inv_xp).div(inv_gap);
                        for (delta_l, lam_e) in [
                            (t.delta_lambda[m], lam[m]),
                            (t.delta_lambda[q], lam[q]),
                        ] {
                            let coef = base.div(delta_l);
                            for l in 0..n {
                                if l == k {
                                    continue;
                                }
                                bracket = bracket.add(
                                    coef.mul(expd(-x / (lam_e * gam[l])))
                                        .div(t.delta_gamma[l])
                                        .div(
                                            Dd::from_f64(gam[l])
                                                .recip()
                                                .sub(Dd::from_f64(gam[k]).recip()),
                                        ),
                                );
                                bracket = bracket.sub(
                                    coef.mul(expd(-x / (lam_e * gam[k])))
                                        .div(t.delta_gamma[k])
                                        .div(
                                            Dd::from_f64(gam[k])
                                                .recip()
                                                .sub(Dd::from_f64(gam[l]).recip()),
                                        ),
                                );
                            }
                            bracket = bracket.sub(
                                coef.mul(xd)
                                    .mul(expd(-x / (lam_e * gam[k])))
                                    .div(Dd::from_f64(lam_e))
                                    .div(t.delta_gamma[k]),
                            );
                        }
                    }
                    acc.add(bracket.mul(ub));
                }
            }
        }
        let rel = acc.relative_error_estimate();
        let v = acc.value().mul(t.prefactor).to_f64();
        (v, rel)
    }

    /// S_2(x) with an absolute error estimate. Escalates to double-double
    /// when cancellation exhausts double precision.
    pub fn density_with_error(&self, x: f64) -> Result<DensityValue> {
        if !(x > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "density requires x > 0, got {x}"
            )));
        }
        // below the floor the x^{p-u-1}/x^{p-1} terms are 0*inf forms;
        // return the limiting evaluation at the floor
        let x = x.max(self.x_floor);
        let (mut value, mut rel) = self.eval_double(x);
        if rel > ESCALATE_REL_ERR && x <= self.dd_safe_x {
            let (v2, rel2) = self.eval_dd(x);
            if rel2 < rel {
                value = v2;
                rel = rel2;
            }
        }
        let est_error = rel * value.abs() + 1e-300;
        if value < 0.0 {
            if value.abs() <= 10.0 * est_error {
                return Ok(DensityValue {
                    value: 0.0,
                    est_error,
                });
            }
            return Err(Error::NegativeDensity {
                x,
                value,
                tol: 10.0 * est_error,
            });
        }
        Ok(DensityValue { value, est_error })
    }
}

fn min_product_scale(spec: &EnsembleSpec) -> f64 {
    let min_l = spec.lambda.iter().cloned().fold(f64::MAX, f64::min);
    let min_g = spec.gamma.iter().cloned().fold(f64::MAX, f64::min);
    min_l * min_g
}

/// S_2(x) for a fully distinct spectrum (the closed form).
pub fn density_exact_c2(plan: &ComplexDensityPlan, x: f64) -> Result<f64> {
    Ok(plan.density_with_error(x)?.value)
}

// ------------------------------------------------------ confluent limits ---

/// One-sided limit: all time eigenvalues coalesced at γ̄ and Λ distinct.
/// This is the biorthogonal-ensemble marginal
///   ρ(x) = (x^{n-p}/p) Σ_k e^{-x/σ_k} σ_k^{-(n-p+1)} Σ_j ℓ_{kj} x^{j-1}/(n-p+j-1)!
/// with σ_k = Λ_k γ̄ and ℓ_k the Lagrange basis coefficients over σ.
pub fn density_onesided_c2(lambda: &[f64], gamma_bar: f64, n: usize, x: f64) -> Result<f64> {
    let p = lambda.len();
    if n < p {
        return Err(Error::CostGuard {
            what: "one-sided confluent form needs n >= p",
            p,
            n,
            limit: p,
        });
    }
    let sigma: Vec<f64> = lambda.iter().map(|&l| l * gamma_bar).collect();
    for (i, &s) in sigma.iter().enumerate() {
        if !(s > 0.0) {
            return Err(Error::NonPositiveEigenvalue { index: i, value: s });
        }
    }
    // Lagrange coefficients for each node: l_k(t) = prod_{m != k} (t - s_m)/(s_k - s_m)
    let ln_x = x.ln();
    let a = n - p;
    let mut acc = LogAccumulator::new();
    for k in 0..p {
        let mut num = vec![0.0f64; p]; // coefficients of prod_{m != k}(t - s_m)
        num[0] = 1.0;
        let mut deg = 0usize;
        let mut denom = 1.0f64;
        for m in 0..p {
            if m == k {
                continue;
            }
            // multiply by (t - s_m)
            deg += 1;
            for j in (1..=deg).rev() {
                num[j] = if j > 0 { num[j - 1] } else { 0.0 } - sigma[m] * num[j];
            }
            num[0] *= -sigma[m];
            denom *= sigma[k] - sigma[m];
        }
        for (j0, &c) in num.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let coeff = c / denom;
            let ln_mag = (a as f64) * ln_x - x / sigma[k]
                - ((a + 1) as f64) * sigma[k].ln()
                + (j0 as f64) * ln_x
                - ln_factorial(a + j0)
                + coeff.abs().ln();
            acc.add(SignedLog::from_parts(if coeff > 0.0 { 1 } else { -1 }, ln_mag));
        }
    }
    let v = acc.value().to_f64() / p as f64;
    Ok(v.max(0.0))
}

/// Fully coalesced limit (Λ = λ̄, Γ = γ̄): the Laguerre ensemble with scale
/// c = λ̄ γ̄, evaluated through normalized Laguerre wavefunctions.
pub fn density_lue_c2(p: usize, n: usize, scale: f64, x: f64) -> Result<f64> {
    if n < p {
        return Err(Error::CostGuard {
            what: "Laguerre confluent form needs n >= p",
            p,
            n,
            limit: p,
        });
    }
    let a = (n - p) as f64;
    let y = x / scale;
    if y <= 0.0 {
        return Ok(0.0);
    }
    // phi_0 = y^{a/2} e^{-y/2} / sqrt(a!)
    let ln_phi0 = 0.5 * (a * y.ln() - ln_factorial(n - p)) - 0.5 * y;
    let phi0 = ln_phi0.exp();
    let mut prev = 0.0f64;
    let mut cur = phi0;
    let mut sum = cur * cur;
    for k in 0..p.saturating_sub(1) {
        let kf = k as f64;
        let c1 = (2.0 * kf + 1.0 + a - y) / ((kf + 1.0) * (kf + 1.0 + a)).sqrt();
        let c2 = (kf * (kf + a)).sqrt() / ((kf + 1.0) * (kf + 1.0 + a)).sqrt();
        let next = c1 * cur - c2 * prev;
        prev = cur;
        cur = next;
        sum += cur * cur;
    }
    Ok(sum / (p as f64 * scale))
}

// ------------------------------------------------ degenerate evaluation ---

enum DegenerateRoute {
    Exact(ComplexDensityPlan),
    OneSided {
        lambda: Vec<f64>,
        gamma_bar: f64,
        n: usize,
    },
    Laguerre {
        p: usize,
        n: usize,
        scale: f64,
    },
    Split(Vec<(f64, ComplexDensityPlan)>),
}

/// Evaluator for spectra with coalescing eigenvalues.
///
/// Distinct spectra fall through to the closed form; full coalescence of one
/// or both lists uses the analytic confluent limits; small mixed
/// multiplicities are handled by evaluating the closed form on ε-split
/// eigenvalues (Λ_j → Λ_j(1 + ε δ_j) with offsets symmetric within each
/// group, so the splitting bias is even in ε) and Richardson-extrapolating
/// in ε² to zero.
pub struct DegenerateEvaluator {
    route: DegenerateRoute,
}

/// Largest multiplicity the ε-splitting route accepts: beyond this the
/// Δ-product cancellations outgrow even double-double precision.
const MAX_SPLIT_MULTIPLICITY: usize = 4;

impl DegenerateEvaluator {
    pub fn new(validated: &ValidatedSpec) -> Result<Self> {
        let spec = &validated.spec;
        if spec.beta != Beta::Two {
            return Err(Error::MethodBetaMismatch {
                method: crate::model::DensityMethod::ComplexExact,
                required: 2,
                got: spec.beta.as_u32(),
            });
        }
        let route = if validated.all_distinct() {
            DegenerateRoute::Exact(ComplexDensityPlan::new(validated)?)
        } else if validated.gamma_groups.len() == 1 && validated.lambda_groups.len() == 1 {
            let lam_bar = spec.lambda.iter().sum::<f64>() / spec.p as f64;
            let gam_bar = spec.gamma.iter().sum::<f64>() / spec.n as f64;
            DegenerateRoute::Laguerre {
                p: spec.p,
                n: spec.n,
                scale: lam_bar * gam_bar,
            }
        } else if validated.gamma_groups.len() == 1 && validated.lambda_distinct && spec.n >= spec.p
        {
            DegenerateRoute::OneSided {
                lambda: spec.lambda.clone(),
                gamma_bar: spec.gamma.iter().sum::<f64>() / spec.n as f64,
                n: spec.n,
            }
        } else {
            let max_mult = validated
                .lambda_groups
                .iter()
                .chain(validated.gamma_groups.iter())
                .map(|g| g.len())
                .max()
                .unwrap_or(1);
            if max_mult > MAX_SPLIT_MULTIPLICITY {
                return Err(Error::CostGuard {
                    what: "eigenvalue-splitting limit (multiplicity too high; \
                           only full coalescence has an analytic route)",
                    p: spec.p,
                    n: spec.n,
                    limit: MAX_SPLIT_MULTIPLICITY,
                });
            }
            let mut plans = Vec::new();
            for i in 0..=10 {
                let eps = 10f64.powf(-2.0 - 0.2 * i as f64);
                let split = split_spec(validated, eps);
                let v = split.validate_with_gap(validated.delta_gap.min(1e-10))?;
                plans.push((eps * eps, ComplexDensityPlan::new(&v)?));
            }
            DegenerateRoute::Split(plans)
        };
        Ok(DegenerateEvaluator { route })
    }

    /// Density value and extrapolation/evaluation error estimate.
    pub fn density_with_error(&self, x: f64) -> Result<DensityValue> {
        match &self.route {
            DegenerateRoute::Exact(plan) => plan.density_with_error(x),
            DegenerateRoute::OneSided {
                lambda,
                gamma_bar,
                n,
            } => {
                let v = density_onesided_c2(lambda, *gamma_bar, *n, x)?;
                Ok(DensityValue {
                    value: v,
                    est_error: 1e-12 * v.abs() + 1e-300,
                })
            }
            DegenerateRoute::Laguerre { p, n, scale } => {
                let v = density_lue_c2(*p, *n, *scale, x)?;
                Ok(DensityValue {
                    value: v,
                    est_error: 1e-13 * v.abs() + 1e-300,
                })
            }
            DegenerateRoute::Split(plans) => {
                let mut ts = Vec::with_capacity(plans.len());
                let mut vs = Vec::with_capacity(plans.len());
                for (t, plan) in plans {
                    let dv = plan.density_with_error(x)?;
                    ts.push(*t);
                    vs.push(dv.value);
                }
                richardson_to_zero(&ts, &vs)
            }
        }
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.density_with_error(x)?.value)
    }
}

/// Split every multiplicity group multiplicatively with offsets symmetric
/// around zero, so the perturbation is even in ε.
fn split_spec(validated: &ValidatedSpec, eps: f64) -> EnsembleSpec {
    let mut spec = validated.spec.clone();
    let apply = |values: &mut [f64], groups: &[Vec<usize>]| {
        for group in groups {
            let m = group.len();
            if m < 2 {
                continue;
            }
            let center: f64 = group.iter().map(|&i| values[i]).sum::<f64>() / m as f64;
            for (pos, &idx) in group.iter().enumerate() {
                let offset = pos as f64 - (m as f64 - 1.0) / 2.0;
                values[idx] = center * (1.0 + eps * offset);
            }
        }
    };
    apply(&mut spec.lambda, &validated.lambda_groups);
    apply(&mut spec.gamma, &validated.gamma_groups);
    spec
}

/// Neville extrapolation of (t_i, v_i) to t = 0, with the diagonal-change
/// sequence as the error estimate. Requires t descending.
fn richardson_to_zero(ts: &[f64], vs: &[f64]) -> Result<DensityValue> {
    let n = ts.len();
    let mut tableau = vec![vs.to_vec()];
    for j in 1..n {
        let prev = &tableau[j - 1];
        let mut row = Vec::with_capacity(n - j);
        for i in 0..n - j {
            let t_lo = ts[i + j];
            let t_hi = ts[i];
            // value at t=0 from the pair (t_hi, prev[i]), (t_lo, prev[i+1])
            let v = (prev[i + 1] * t_hi - prev[i] * t_lo) / (t_hi - t_lo);
            row.push(v);
        }
        tableau.push(row);
    }
    // walk the diagonal, keep the entry with the smallest change
    let mut best = vs[0];
    let mut best_err = f64::INFINITY;
    let mut prev_diag = vs[0];
    let mut changes = Vec::new();
    for j in 1..n {
        let diag = tableau[j][0];
        let change = (diag - prev_diag).abs();
        changes.push(change);
        if change < best_err {
            best_err = change;
            best = diag;
        }
        prev_diag = diag;
    }
    // require that the changes contracted at some point
    let contracted = changes
        .windows(2)
        .any(|w| w[1] < 0.5 * w[0] || w[1] < 1e-12 * best.abs().max(1e-300));
    if !contracted && best_err > 0.05 * best.abs() {
        let k = changes.len();
        return Err(Error::ExtrapolationDiverged(
            changes[k.saturating_sub(2)],
            changes[k - 1],
        ));
    }
    Ok(DensityValue {
        value: best,
        est_error: best_err,
    })
}

/// Convenience wrapper: density at possibly-degenerate spectra.
pub fn density_degenerate_c2(validated: &ValidatedSpec, x: f64) -> Result<DensityValue> {
    DegenerateEvaluator::new(validated)?.density_with_error(x)
}
