use anyhow::{bail, Result};
use serde_json::json;

use cpa::bounds::{lower_bounds, upper_bounds, BoundInputs, BoundKind, BoundReport};
use cpa::model::{exact_tv_orders, ExactConfig, ModelSpec};
use cpa::pointprocess::{pp_bounds, pp_summary, PointProcessSpec};
use cpa::verify::{run_suite, Suite, SuiteReport, VerifyOptions};

use crate::render::{Cell, Output, DTV_CONVENTION, NORM_CONVENTION};

fn inputs_preamble(spec: &ModelSpec<f64>, inp: &BoundInputs) -> Vec<String> {
    vec![
        format!("n = {}, d = {}", spec.n(), spec.d()),
        format!("lambda = {}, max p_j = {}, sum p_j^2 = {}", inp.lambda, inp.max_p, inp.sum_p_sq),
        format!("alpha0 = {}, beta0 = {}", inp.alpha0, inp.beta0),
        format!("alpha1 = {}, beta1 = {}", inp.alpha1, inp.beta1),
    ]
}

fn kind_name(k: BoundKind) -> &'static str {
    match k {
        BoundKind::Upper => "upper",
        BoundKind::Lower => "lower",
    }
}

fn report_row(r: &BoundReport<f64>) -> Vec<Cell> {
    vec![
        r.name.into(),
        kind_name(r.kind).into(),
        r.order.into(),
        r.value.into(),
        if r.applicable() { "yes" } else { "no" }.into(),
        r.condition.clone().unwrap_or_default().into(),
        r.source.into(),
    ]
}

pub fn bounds(spec: &ModelSpec<f64>, lmax: usize) -> Result<Output> {
    let inputs = BoundInputs::new(spec);
    let mut reports = upper_bounds(spec, lmax)?;
    reports.extend(lower_bounds(spec));
    Ok(Output {
        convention: NORM_CONVENTION,
        preamble: inputs_preamble(spec, &inputs),
        columns: vec!["bound", "kind", "order", "value", "applicable", "condition", "source"],
        rows: reports.iter().map(report_row).collect(),
        json: json!({ "n": spec.n(), "d": spec.d(), "inputs": inputs, "bounds": reports }),
    })
}

pub fn exact(spec: &ModelSpec<f64>, lmax: usize, cfg: &ExactConfig<f64>) -> Result<Output> {
    if lmax > spec.n() {
        bail!("--lmax {lmax} exceeds n = {}", spec.n());
    }
    let orders: Vec<usize> = (0..=lmax).collect();
    let results = exact_tv_orders(spec, &orders, cfg)?;
    let uppers = upper_bounds(spec, lmax)?;
    let lowers = lower_bounds(spec);
    let inputs = BoundInputs::new(spec);

    let mut rows = Vec::new();
    let mut per_order = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for r in &results {
        let ell = r.order.get();
        let trend = match prev {
            None => "-",
            Some((d, e)) if r.distance <= d + e + r.error_bar => "decreasing",
            Some(_) => "increased (flagged)",
        };
        prev = Some((r.distance, r.error_bar));
        let applicable: Vec<&BoundReport<f64>> = uppers.iter().filter(|b| b.order == ell && b.applicable()).collect();
        let best = applicable
            .iter()
            .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal));
        rows.push(vec![
            ell.into(),
            r.distance.into(),
            r.error_bar.into(),
            trend.into(),
            best.map_or(Cell::Missing, |b| b.name.into()),
            best.map_or(Cell::Missing, |b| b.value.into()),
        ]);
        let bounds: Vec<&BoundReport<f64>> = uppers.iter().filter(|b| b.order == ell).collect();
        per_order.push(json!({
            "order": ell,
            "distance": r.distance,
            "error_bar": r.error_bar,
            "trend": trend,
            "bounds": bounds,
        }));
    }
    let mut preamble = inputs_preamble(spec, &inputs);
    preamble.push(
        lowers
            .iter()
            .map(|b| format!("{} = {}", b.name, b.value.unwrap_or(0.0)))
            .collect::<Vec<_>>()
            .join(", "),
    );
    Ok(Output {
        convention: NORM_CONVENTION,
        preamble,
        columns: vec!["order", "distance", "error_bar", "trend", "best_bound", "best_bound_value"],
        rows,
        json: json!({
            "spec": spec,
            "tol": cfg.tol,
            "results": per_order,
            "lower_bounds": lowers,
        }),
    })
}

pub fn verify(suites: &[Suite], opts: &VerifyOptions) -> Result<(Output, bool)> {
    let reports: Vec<SuiteReport> = suites.iter().map(|&s| run_suite(s, opts)).collect::<cpa::Result<_>>()?;
    let mut rows = Vec::new();
    let mut preamble = vec![format!("seed = {}", opts.seed)];
    for rep in &reports {
        for p in &rep.properties {
            rows.push(vec![
                rep.suite.name().into(),
                p.name.clone().into(),
                p.checked.into(),
                p.failed.into(),
                if p.failed == 0 { "pass" } else { "FAIL" }.into(),
            ]);
            if let Some(ce) = &p.first_counterexample {
                preamble.push(format!("first counterexample for {}/{}: {}", rep.suite, p.name, ce));
            }
        }
    }
    let passed = reports.iter().all(SuiteReport::passed);
    Ok((
        Output {
            convention: NORM_CONVENTION,
            preamble,
            columns: vec!["suite", "property", "checked", "failed", "status"],
            rows,
            json: json!({ "seed": opts.seed, "passed": passed, "suites": reports }),
        },
        passed,
    ))
}

pub fn pointprocess(spec: &PointProcessSpec<f64>, resolution: usize) -> Result<Output> {
    let summary = pp_summary(spec, resolution)?;
    let reports = pp_bounds(spec, resolution)?;
    let phis: Vec<String> = summary.phi.iter().map(|x| x.to_string()).collect();
    Ok(Output {
        convention: DTV_CONVENTION,
        preamble: vec![
            format!("n = {}, lambda = {}, sum p_j^2 = {}", spec.n(), summary.lambda, summary.sum_p_sq),
            format!("alpha1 = {}, beta1 = {}", summary.alpha, summary.beta),
            format!("phi = [{}]", phis.join(", ")),
            format!("quadrature nodes = {}", summary.resolution),
        ],
        columns: vec!["bound", "kind", "order", "value", "applicable", "condition", "source"],
        rows: reports.iter().map(report_row).collect(),
        json: json!({ "summary": summary, "bounds": reports }),
    })
}

/// Rounding direction for printed table values: upper bounds are rounded
/// up and lower bounds down, so the printed value remains a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outward {
    Up,
    Down,
}

fn round_dir(x: f64, scale: f64, dir: Outward) -> f64 {
    let y = x * scale;
    let r = y.round();
    // values that are integral up to rounding noise stay put
    if (y - r).abs() <= 1e-9 * r.abs().max(1.0) {
        return r;
    }
    match dir {
        Outward::Up => y.ceil(),
        Outward::Down => y.floor(),
    }
}

/// Fixed-format rendering used in the reference table: one decimal from 10
/// upwards, six decimals down to `1e-5`, three significant digits below.
pub fn printed(x: f64, dir: Outward) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x >= 10.0 {
        format!("{:.1}", round_dir(x, 10.0, dir) / 10.0)
    } else if x >= 1e-5 {
        format!("{:.6}", round_dir(x, 1e6, dir) / 1e6)
    } else {
        let mut e = x.log10().floor() as i32;
        let mut m = round_dir(x / 10f64.powi(e), 100.0, dir) / 100.0;
        if m >= 10.0 {
            m /= 10.0;
            e += 1;
        }
        format!("{m:.2}e{e}")
    }
}

pub fn table1(spec: &ModelSpec<f64>) -> Result<Output> {
    let inputs = BoundInputs::new(spec);
    let uppers = upper_bounds(spec, 4)?;
    let lowers = lower_bounds(spec);
    let find = |name: &str, order: usize| uppers.iter().find(|b| b.name == name && b.order == order);
    let mut picked: Vec<(&str, &BoundReport<f64>)> = Vec::new();
    for name in ["le-cam", "magic-factor", "barbour", "alpha0", "beta0"] {
        if let Some(b) = find(name, 0) {
            picked.push(("G_0", b));
        }
    }
    for name in ["alpha1-order", "beta1-order-cap"] {
        if let Some(b) = find(name, 0) {
            picked.push(("G_0", b));
        }
    }
    for ell in 1..=4 {
        for name in ["alpha1-order", "beta1-order-cap", "beta1-order"] {
            if let Some(b) = find(name, ell) {
                picked.push(("G_ell", b));
            }
        }
    }
    for b in &lowers {
        picked.push(("lower", b));
    }
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (section, b) in picked {
        let dir = if b.kind == BoundKind::Lower { Outward::Down } else { Outward::Up };
        let shown = b.value.map_or_else(|| "inapplicable".to_string(), |v| printed(v, dir));
        rows.push(vec![
            section.into(),
            b.name.into(),
            b.order.into(),
            b.value.into(),
            shown.clone().into(),
        ]);
        entries.push(json!({ "section": section, "bound": b, "printed": shown }));
    }
    let mut preamble = inputs_preamble(spec, &inputs);
    preamble.push("printed: upper bounds rounded up, lower bounds rounded down".into());
    Ok(Output {
        convention: NORM_CONVENTION,
        preamble,
        columns: vec!["section", "bound", "order", "value", "printed"],
        rows,
        json: json!({ "inputs": inputs, "rows": entries }),
    })
}
