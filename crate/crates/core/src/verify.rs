//! Seeded property suites that compare library results with exact
//! computations. Each suite reports per-property counts and the first
//! counterexample it meets.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{lower_bounds, upper_bounds, BoundKind};
use crate::error::{Error, Result};
use crate::measure::{convolve, exp_measure, linear_combine, prune, SignedMeasure};
use crate::model::{build_f, build_g0, exact_tv_orders, CorrectionTerms, ExactConfig, ModelSpec};
use crate::sample::{random_measure, random_model, random_single_factor, random_smoothness, rng};
use crate::smoothness::{
    bound_44, bound_45, bound_46, charlier, delta_pow, SplitParams, factorial_inequality, middle_41, norm_product_exact,
    poisson_pmf, right_41, single_factor_norm, verify_orthogonality,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    MeasureAlgebra,
    Newton,
    Charlier,
    Lemmas,
    BoundsVsOracle,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::MeasureAlgebra,
        Suite::Newton,
        Suite::Charlier,
        Suite::Lemmas,
        Suite::BoundsVsOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MeasureAlgebra => "measure-algebra",
            Suite::Newton => "newton",
            Suite::Charlier => "charlier",
            Suite::Lemmas => "lemmas",
            Suite::BoundsVsOracle => "bounds-vs-oracle",
        }
    }

    /// Random instances drawn per property when not overridden.
    pub fn default_instances(self) -> usize {
        match self {
            Suite::Newton => 50,
            _ => 200,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub instances: Option<usize>,
    pub parallel: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 42,
            instances: None,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub checked: usize,
    pub failed: usize,
    pub first_counterexample: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.failed == 0)
    }
}

/// Collects check outcomes in insertion order.
#[derive(Default)]
struct Tally {
    props: Vec<PropertyResult>,
}

impl Tally {
    fn check(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> Value) {
        let idx = match self.props.iter().position(|p| p.name == name) {
            Some(i) => i,
            None => {
                self.props.push(PropertyResult {
                    name: name.to_string(),
                    checked: 0,
                    failed: 0,
                    first_counterexample: None,
                });
                self.props.len() - 1
            }
        };
        let p = &mut self.props[idx];
        p.checked += 1;
        if !ok {
            p.failed += 1;
            if p.first_counterexample.is_none() {
                p.first_counterexample = Some(detail());
            }
        }
    }

    fn merge(&mut self, other: Tally) {
        for p in other.props {
            match self.props.iter_mut().find(|q| q.name == p.name) {
                Some(q) => {
                    q.checked += p.checked;
                    q.failed += p.failed;
                    if q.first_counterexample.is_none() {
                        q.first_counterexample = p.first_counterexample;
                    }
                }
                None => self.props.push(p),
            }
        }
    }
}

/// Evaluate `f` on every instance (in parallel if asked) and merge the
/// tallies in instance order, so reports do not depend on scheduling.
fn run_instances<I, F>(items: Vec<I>, parallel: bool, f: F) -> Result<Tally>
where
    I: Send + Sync,
    F: Fn(&I) -> Result<Tally> + Send + Sync,
{
    let parts: Vec<Result<Tally>> = if parallel {
        items.par_iter().map(&f).collect()
    } else {
        items.iter().map(&f).collect()
    };
    let mut all = Tally::default();
    for t in parts {
        all.merge(t?);
    }
    Ok(all)
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let count = opts.instances.unwrap_or(suite.default_instances());
    let tally = match suite {
        Suite::MeasureAlgebra => measure_algebra(opts.seed, count, opts.parallel)?,
        Suite::Newton => newton(opts.seed, count, opts.parallel)?,
        Suite::Charlier => charlier_suite()?,
        Suite::Lemmas => lemmas(opts.seed, count, opts.parallel)?,
        Suite::BoundsVsOracle => bounds_vs_oracle(opts.seed, count, opts.parallel)?,
    };
    Ok(SuiteReport {
        suite,
        seed: opts.seed,
        properties: tally.props,
    })
}

fn atoms_json(v: &SignedMeasure<f64>) -> Value {
    json!({
        "dim": v.dim(),
        "budget": v.budget(),
        "atoms": v.iter().map(|(x, w)| json!([x.0, w])).collect::<Vec<_>>(),
    })
}

fn measure_algebra(seed: u64, count: usize, parallel: bool) -> Result<Tally> {
    let mut r = rng(seed);
    let items: Vec<_> = (0..count)
        .map(|_| {
            let d = r.gen_range(1..=3);
            let na = r.gen_range(1..=100);
            let nb = r.gen_range(1..=100);
            let nc = r.gen_range(1..=30);
            let v = random_measure(&mut r, d, na, 6);
            let w = random_measure(&mut r, d, nb, 6);
            let u = random_measure(&mut r, d, nc, 6);
            let de = r.gen_range(1..=2);
            let ne = r.gen_range(1..=5);
            let small = random_measure(&mut r, de, ne, 3);
            let target = r.gen_range(0.1..2.0);
            let scale = target / small.tv_norm().max(1e-300);
            (v, w, u, small.scaled(scale))
        })
        .collect();
    run_instances(items, parallel, |(v, w, u, e)| {
        let mut t = Tally::default();
        let (nv, nw, nu) = (v.tv_norm(), w.tv_norm(), u.tv_norm());
        let vw = convolve(v, w)?;
        let wv = convolve(w, v)?;
        let comm = vw.minus(&wv)?.tv_norm();
        t.check("commutativity", comm <= 1e-12 * nv * nw, || {
            json!({"v": atoms_json(v), "w": atoms_json(w), "difference": comm})
        });
        let left = convolve(&vw, u)?;
        let right = convolve(v, &convolve(w, u)?)?;
        let assoc = left.minus(&right)?.tv_norm();
        t.check("associativity", assoc <= 1e-12 * nv * nw * nu, || {
            json!({"v": atoms_json(v), "w": atoms_json(w), "u": atoms_json(u), "difference": assoc})
        });
        t.check("submultiplicativity", vw.tv_norm() <= nv * nw * (1.0 + 1e-12), || {
            json!({"v": atoms_json(v), "w": atoms_json(w), "norm": vw.tv_norm()})
        });
        let mass_gap = (vw.total_mass() - v.total_mass() * w.total_mass()).abs();
        t.check("mass-homomorphism-convolution", mass_gap <= 1e-12 * nv * nw, || {
            json!({"v": atoms_json(v), "w": atoms_json(w), "gap": mass_gap})
        });

        let tol = 1e-12;
        let ex = exp_measure(e, tol)?;
        let ne = e.tv_norm();
        t.check("exp-norm", ex.tv_norm() <= ne.exp() * (1.0 + 1e-12) + ex.budget(), || {
            json!({"v": atoms_json(e), "norm": ex.tv_norm(), "budget": ex.budget()})
        });
        let gap = (ex.total_mass() - e.total_mass().exp()).abs();
        t.check("mass-homomorphism-exp", gap <= ex.budget() + 1e-12 * ne.exp(), || {
            json!({"v": atoms_json(e), "gap": gap, "budget": ex.budget()})
        });
        let fine = exp_measure(e, tol / 10.0)?;
        let change = (fine.tv_norm() - ex.tv_norm()).abs();
        t.check("budget-covers-refinement", change <= ex.budget() + 1e-13 * ne.exp(), || {
            json!({"v": atoms_json(e), "change": change, "budget": ex.budget()})
        });

        let eps = 0.05;
        let pv = prune(v, eps)?;
        let pw = prune(w, eps)?;
        let pc = convolve(&pv, &pw)?;
        let lost = pc.minus(&vw)?.tv_norm();
        t.check("prune-budget", lost <= pc.budget() * (1.0 + 1e-12) + 1e-12 * nv * nw, || {
            json!({"v": atoms_json(v), "w": atoms_json(w), "eps": eps, "lost": lost, "budget": pc.budget()})
        });
        Ok(t)
    })
}

/// `Σ_{|J|=k} Π_{j∈J} V_j` by enumerating subsets.
fn elementary_by_subsets(v: &[SignedMeasure<f64>], k: usize, cfg: &ExactConfig<f64>) -> Result<SignedMeasure<f64>> {
    let n = v.len();
    let dim = v.first().map(|m| m.dim()).unwrap_or(1);
    let mut parts = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut acc = crate::measure::dirac(&crate::measure::LatticePoint::origin(dim));
        for (j, vj) in v.iter().enumerate() {
            if mask & (1 << j) != 0 {
                acc = convolve(&acc, vj)?;
                if cfg.prune_eps > 0.0 {
                    acc = prune(&acc, cfg.prune_eps)?;
                }
            }
        }
        parts.push(acc);
    }
    let terms: Vec<(f64, &SignedMeasure<f64>)> = parts.iter().map(|m| (1.0, m)).collect();
    linear_combine(&terms)
}

fn newton(seed: u64, count: usize, parallel: bool) -> Result<Tally> {
    let mut r = rng(seed);
    let items: Vec<ModelSpec<f64>> = (0..count)
        .map(|_| {
            let n = r.gen_range(1..=6);
            let d = r.gen_range(1..=2);
            random_model(&mut r, n, d)
        })
        .collect();
    run_instances(items, parallel, |spec| {
        let mut t = Tally::default();
        // no truncation or pruning, so the comparison is purely relative
        let tight = ExactConfig {
            tol: 1e-30,
            prune_eps: 0.0,
            ..ExactConfig::default()
        };
        let mut exact = CorrectionTerms::new(spec, &tight)?;
        let v: Vec<SignedMeasure<f64>> = (0..spec.n()).map(|j| exact.v(j).clone()).collect();
        let sum_v: f64 = v.iter().map(SignedMeasure::tv_norm).sum();
        for k in 0..=spec.n() {
            let m = exact.newton_m(k)?.clone();
            let e = elementary_by_subsets(&v, k, &tight)?;
            let diff = m.minus(&e)?.tv_norm();
            // second term: double-word rounding residue when M_k vanishes
            let allowed = 1e-10 * e.tv_norm() + 1e-28 * sum_v.powi(k as i32) + m.budget() + e.budget();
            t.check("newton-equals-subsets", diff <= allowed, || {
                json!({"spec": spec, "k": k, "difference": diff, "allowed": allowed})
            });
        }
        let cfg = ExactConfig::default();
        let mut terms = CorrectionTerms::new(spec, &cfg)?;
        let g0 = build_g0(spec, &cfg)?;
        for ell in 0..=spec.n() {
            let g = terms.g_ell_with(ell, &g0)?;
            let gap = (g.total_mass() - 1.0).abs();
            t.check("mass-of-g-ell", gap <= g.budget() + 1e-12, || {
                json!({"spec": spec, "ell": ell, "gap": gap, "budget": g.budget()})
            });
            if ell == spec.n() && spec.n() <= 4 {
                let f = build_f(spec, &cfg)?;
                let diff = g.minus(&f)?.tv_norm();
                t.check("g-n-equals-f", diff <= g.budget() + 1e-12, || {
                    json!({"spec": spec, "difference": diff, "budget": g.budget()})
                });
            }
        }
        Ok(t)
    })
}

/// Orthogonality tolerance for the Poisson-weighted Charlier sums.
pub const ORTHOGONALITY_TOL: f64 = 1e-13;

fn charlier_suite() -> Result<Tally> {
    let mut t = Tally::default();
    for &tt in &[0.5, 1.0, 2.0, 7.0] {
        for i in 0..=5 {
            for j in 0..=5 {
                let rep = verify_orthogonality(i, j, tt, ORTHOGONALITY_TOL)?;
                t.check("orthogonality", rep.holds, || serde_json::to_value(rep).unwrap_or(Value::Null));
            }
        }
    }
    for &tt in &[0.5, 2.0, 7.0] {
        for j in 0..=5u32 {
            for m in 0..=30i64 {
                let lhs = delta_pow(j, m, tt)?;
                let rhs = poisson_pmf(m, tt)? * charlier(j, m as f64, tt)? / tt.powi(j as i32);
                let scale: f64 = (0..=j)
                    .map(|i| poisson_pmf(m - j as i64 + i as i64, tt).unwrap_or(0.0) * 2f64.powi(j as i32))
                    .sum::<f64>()
                    .max(f64::MIN_POSITIVE);
                let ok = (lhs - rhs).abs() <= 1e-12 * scale;
                t.check("difference-identity", ok, || json!({"j": j, "m": m, "t": tt, "lhs": lhs, "rhs": rhs}));
            }
        }
    }
    Ok(t)
}

fn lemmas(seed: u64, count: usize, parallel: bool) -> Result<Tally> {
    let mut t = Tally::default();
    for k in 1..=12u64 {
        for m1 in 0..=k {
            for m2 in 0..=(k - m1) {
                let (lhs, rhs) = factorial_inequality(k, m1, m2)?;
                t.check("factorial-inequality", lhs <= rhs + 1e-12 * rhs.abs().max(1.0), || {
                    json!({"k": k, "m1": m1, "m2": m2, "ln_lhs": lhs, "ln_rhs": rhs})
                });
                if k == 1 {
                    t.check("factorial-equality-k1", (lhs - rhs).abs() <= 1e-15, || {
                        json!({"m1": m1, "m2": m2, "ln_lhs": lhs, "ln_rhs": rhs})
                    });
                }
            }
        }
    }
    let mut r = rng(seed);
    let items: Vec<_> = (0..count)
        .map(|_| {
            let k = r.gen_range(1..=4);
            let d = r.gen_range(1..=3);
            let signed = random_smoothness(&mut r, k, d, true);
            let k2 = r.gen_range(1..=4);
            let d2 = r.gen_range(1..=3);
            let nonneg = random_smoothness(&mut r, k2, d2, false);
            let params = SplitParams {
                u: (0..k2).map(|_| r.gen_range(0.0..=0.5)).collect(),
                v: (0..k2).map(|_| r.gen_range(0.05..2.0)).collect(),
                w: (0..k2).map(|_| r.gen_range(0.5..8.0)).collect(),
            };
            let d3 = r.gen_range(1..=3);
            let single = random_single_factor(&mut r, d3);
            (signed, nonneg, params, single)
        })
        .collect();
    let rest = run_instances(items, parallel, |(signed, nonneg, params, (probs, lambda))| {
        let mut t = Tally::default();
        let tol = 1e-13;
        let exact = norm_product_exact(signed, false, tol)?;
        let mid = middle_41(signed)?;
        let right = right_41(signed);
        t.check("product-norm-below-middle", exact.value <= mid * (1.0 + 1e-12) + exact.budget, || {
            json!({"instance": signed, "exact": exact, "middle": mid})
        });
        t.check("middle-below-right", mid <= right * (1.0 + 1e-12), || {
            json!({"instance": signed, "middle": mid, "right": right})
        });
        let sq = norm_product_exact(nonneg, true, tol)?;
        let b45 = bound_45(nonneg);
        t.check("squares-below-table-constant-bound", sq.value <= b45 * (1.0 + 1e-12) + sq.budget, || {
            json!({"instance": nonneg, "exact": sq, "bound": b45})
        });
        let b44 = bound_44(nonneg, params)?;
        t.check("squares-below-split-bound", sq.value <= b44 * (1.0 + 1e-12) + sq.budget, || {
            json!({"instance": nonneg, "params": params, "exact": sq, "bound": b44})
        });
        let single = single_factor_norm(probs, lambda, tol)?;
        let b46 = bound_46(probs, lambda)?;
        t.check("single-factor-bound", single.value <= b46 * (1.0 + 1e-12) + single.budget, || {
            json!({"p": probs, "lambda": lambda, "exact": single, "bound": b46})
        });
        Ok(t)
    })?;
    t.merge(rest);
    Ok(t)
}

/// Orders checked against the exact distance.
pub const ORACLE_ORDERS: [usize; 3] = [0, 1, 2];

fn bounds_vs_oracle(seed: u64, count: usize, parallel: bool) -> Result<Tally> {
    let mut r = rng(seed);
    let items: Vec<ModelSpec<f64>> = (0..count)
        .map(|_| {
            let n = r.gen_range(1..=8);
            let d = r.gen_range(1..=3);
            random_model(&mut r, n, d)
        })
        .collect();
    run_instances(items, parallel, |spec| {
        let mut t = Tally::default();
        let cfg = ExactConfig::default();
        let orders: Vec<usize> = ORACLE_ORDERS.iter().copied().filter(|&l| l <= spec.n()).collect();
        let exact = exact_tv_orders(spec, &orders, &cfg)?;
        let uppers = upper_bounds(spec, *orders.last().unwrap_or(&0))?;
        for ex in &exact {
            let ell = ex.order.get();
            for b in uppers.iter().filter(|b| b.order == ell && b.kind == BoundKind::Upper) {
                if let Some(v) = b.value {
                    t.check("upper-bounds-dominate", v >= ex.distance - ex.error_bar, || {
                        json!({"spec": spec, "bound": b, "exact": ex.distance, "error_bar": ex.error_bar})
                    });
                }
            }
        }
        let zero = exact.iter().find(|e| e.order.get() == 0).expect("order 0 is always checked");
        for b in lower_bounds(spec) {
            let v = b.value.unwrap_or(0.0);
            t.check("lower-bounds-below", v <= zero.distance + zero.error_bar, || {
                json!({"spec": spec, "bound": b, "exact": zero.distance, "error_bar": zero.error_bar})
            });
        }
        Ok(t)
    })
}
