//! Poisson process approximation of `ξ = Σ_j Z_j δ_{X_j}` on the real line,
//! with `P(Z_j = 1) = p_j` and `X_j` having density `h̃_j`.
//!
//! All reported values are distances `d_TV` (half the norm).

use serde::{Deserialize, Serialize};

use crate::bounds::{g_scalar, BoundKind, BoundReport};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Allowed deviation of `∫h̃_j dν` from one.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Mass of every exponential density left beyond the quadrature range.
pub const EXP_TAIL: f64 = 1e-10;

/// Default number of midpoint nodes for exponential sources.
pub const DEFAULT_RESOLUTION: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid<T> {
    pub x: Vec<T>,
    pub weights: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    untagged,
    deny_unknown_fields,
    expecting = "fields `p` and `exponential_rates`, or `p`, `grid` and `densities`, and no others"
)]
enum RawSpec<T> {
    Exponential { p: Vec<T>, exponential_rates: Vec<T> },
    Tabulated { p: Vec<T>, grid: Grid<T>, densities: Vec<Vec<T>> },
}

#[derive(Debug, Clone, PartialEq)]
enum Sources<T> {
    /// `h̃_j(x) = t_j e^{−t_j x}` on `(0, ∞)`.
    Exponential(Vec<T>),
    Tabulated { grid: Grid<T>, densities: Vec<Vec<T>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec<T>", into = "RawSpec<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PointProcessSpec<T> {
    p: Vec<T>,
    sources: Sources<T>,
}

impl<T: Scalar> TryFrom<RawSpec<T>> for PointProcessSpec<T> {
    type Error = Error;

    fn try_from(raw: RawSpec<T>) -> Result<Self> {
        match raw {
            RawSpec::Exponential { p, exponential_rates } => Self::exponential(p, exponential_rates),
            RawSpec::Tabulated { p, grid, densities } => Self::tabulated(p, grid, densities),
        }
    }
}

impl<T: Scalar> From<PointProcessSpec<T>> for RawSpec<T> {
    fn from(s: PointProcessSpec<T>) -> Self {
        match s.sources {
            Sources::Exponential(rates) => RawSpec::Exponential {
                p: s.p,
                exponential_rates: rates,
            },
            Sources::Tabulated { grid, densities } => RawSpec::Tabulated { p: s.p, grid, densities },
        }
    }
}

fn check_p<T: Scalar>(p: &[T]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidModel("need at least one source".into()));
    }
    if let Some((j, x)) = p.iter().enumerate().find(|(_, &x)| !(x > T::zero() && x <= T::one())) {
        return Err(Error::InvalidModel(format!("field `p[{j}]` = {x} is outside (0, 1]")));
    }
    Ok(())
}

impl<T: Scalar> PointProcessSpec<T> {
    pub fn exponential(p: Vec<T>, rates: Vec<T>) -> Result<Self> {
        check_p(&p)?;
        if rates.len() != p.len() {
            return Err(Error::InvalidModel(format!(
                "field `exponential_rates`: expected {} entries, found {}",
                p.len(),
                rates.len()
            )));
        }
        if let Some((j, t)) = rates.iter().enumerate().find(|(_, &t)| !(t > T::zero()) || !t.is_finite()) {
            return Err(Error::InvalidModel(format!("field `exponential_rates[{j}]` = {t} must be positive")));
        }
        Ok(PointProcessSpec {
            p,
            sources: Sources::Exponential(rates),
        })
    }

    pub fn tabulated(p: Vec<T>, grid: Grid<T>, densities: Vec<Vec<T>>) -> Result<Self> {
        check_p(&p)?;
        let m = grid.x.len();
        if m == 0 || grid.weights.len() != m {
            return Err(Error::InvalidModel(format!(
                "field `grid`: need matching nonempty `x` and `weights`, found {} and {}",
                m,
                grid.weights.len()
            )));
        }
        if grid.weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidModel("field `grid.weights` must be nonnegative".into()));
        }
        if densities.len() != p.len() {
            return Err(Error::InvalidModel(format!(
                "field `densities`: expected {} rows, found {}",
                p.len(),
                densities.len()
            )));
        }
        for (j, h) in densities.iter().enumerate() {
            if h.len() != m {
                return Err(Error::InvalidModel(format!("field `densities[{j}]`: expected {m} values, found {}", h.len())));
            }
            if h.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
                return Err(Error::InvalidModel(format!("field `densities[{j}]` has a negative value")));
            }
            let mass: T = h.iter().zip(&grid.weights).map(|(&v, &w)| v * w).sum();
            if (mass - T::one()).abs() > T::lit(NORMALIZATION_TOL) {
                return Err(Error::InvalidModel(format!("field `densities[{j}]` integrates to {mass}, not 1")));
            }
        }
        Ok(PointProcessSpec {
            p,
            sources: Sources::Tabulated { grid, densities },
        })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[T] {
        &self.p
    }

    pub fn lambda(&self) -> T {
        self.p.iter().copied().sum()
    }

    pub fn rates(&self) -> Option<&[T]> {
        match &self.sources {
            Sources::Exponential(r) => Some(r),
            Sources::Tabulated { .. } => None,
        }
    }

    /// Quadrature nodes, weights and density values `h̃_j(x_i)`.
    fn discretize(&self, resolution: usize) -> Result<(Vec<T>, Vec<Vec<T>>)> {
        match &self.sources {
            Sources::Tabulated { grid, densities } => Ok((grid.weights.clone(), densities.clone())),
            Sources::Exponential(rates) => {
                if resolution == 0 {
                    return Err(Error::InvalidArgument("grid resolution must be positive".into()));
                }
                let x_max = exponential_range(rates);
                let h = x_max / T::from_count(resolution);
                let nodes: Vec<T> = (0..resolution).map(|i| (T::from_count(i) + T::lit(0.5)) * h).collect();
                let dens = rates
                    .iter()
                    .map(|&t| nodes.iter().map(|&x| t * (-t * x).exp()).collect())
                    .collect();
                Ok((vec![h; resolution], dens))
            }
        }
    }

    /// Tabulated copy of an exponential spec on its midpoint grid.
    pub fn to_tabulated(&self, resolution: usize) -> Result<Self> {
        match &self.sources {
            Sources::Tabulated { .. } => Ok(self.clone()),
            Sources::Exponential(_) => {
                let (w, dens) = self.discretize(resolution)?;
                let h = w[0];
                let x: Vec<T> = (0..resolution).map(|i| (T::from_count(i) + T::lit(0.5)) * h).collect();
                // renormalize away the truncated tail so validation passes exactly
                let dens = dens
                    .into_iter()
                    .map(|row: Vec<T>| {
                        let mass: T = row.iter().map(|&v| v * h).sum();
                        row.into_iter().map(|v| v / mass).collect()
                    })
                    .collect();
                Self::tabulated(self.p.clone(), Grid { x, weights: w }, dens)
            }
        }
    }

    /// The same sources with every density replaced by the mixture `h̃`.
    pub fn with_common_density(&self, resolution: usize) -> Result<Self> {
        let tab = self.to_tabulated(resolution)?;
        let Sources::Tabulated { grid, densities } = &tab.sources else {
            unreachable!("to_tabulated returns a tabulated spec")
        };
        let mix = mixture(&self.p, densities);
        Self::tabulated(self.p.clone(), grid.clone(), vec![mix; self.n()])
    }
}

/// Upper end of the quadrature range for exponential sources.
fn exponential_range<T: Scalar>(rates: &[T]) -> T {
    let t_min = rates.iter().fold(T::infinity(), |m, &t| m.min(t));
    -T::lit(EXP_TAIL).ln() / t_min
}

/// `h̃ = (1/λ) Σ_j p_j h̃_j` pointwise.
fn mixture<T: Scalar>(p: &[T], densities: &[Vec<T>]) -> Vec<T> {
    let lam: T = p.iter().copied().sum();
    let m = densities[0].len();
    (0..m)
        .map(|i| p.iter().zip(densities).map(|(&pj, h)| pj * h[i]).sum::<T>() / lam)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessSummary<T> {
    pub lambda: T,
    pub alpha: T,
    pub beta: T,
    pub sum_p_sq: T,
    pub phi: Vec<T>,
    /// Nodes used for the integrals.
    pub resolution: usize,
}

/// `(α̃₁, β̃₁)` by quadrature over `{h̃ > 0}`.
pub fn pp_alpha_beta<T: Scalar>(spec: &PointProcessSpec<T>, resolution: usize) -> Result<(T, T)> {
    let (w, dens) = spec.discretize(resolution)?;
    let lam = spec.lambda();
    let mix = mixture(&spec.p, &dens);
    let c = T::lit(2.0).powf(T::lit(1.5));
    let two = T::lit(2.0);
    let mut alpha = T::zero();
    let mut beta = T::zero();
    for (&pj, h) in spec.p.iter().zip(&dens) {
        let mut ia = T::zero();
        let mut ib = T::zero();
        for i in 0..w.len() {
            if mix[i] > T::zero() {
                let ratio = h[i] / (lam * mix[i]);
                ia += w[i] * h[i] * (ratio / c).min(two);
                ib += w[i] * h[i] * ratio.min(T::one());
            }
        }
        alpha += g_scalar(two * pj) * pj * pj * ia;
        beta += pj * pj * ib;
    }
    Ok((alpha, beta))
}

/// `∫_{h̃>0} h̃_j²/h̃ dν` by quadrature.
pub fn ratio_integral<T: Scalar>(spec: &PointProcessSpec<T>, j: usize, resolution: usize) -> Result<T> {
    let (w, dens) = spec.discretize(resolution)?;
    let mix = mixture(&spec.p, &dens);
    Ok((0..w.len())
        .filter(|&i| mix[i] > T::zero())
        .map(|i| w[i] * dens[j][i] * dens[j][i] / mix[i])
        .sum())
}

/// Minimum over `[0, ∞)` of the convex `D(x) = Σ_i p_i t_i e^{(t_j − t_i)x}`.
fn exp_denominator_min<T: Scalar>(p: &[T], rates: &[T], j: usize) -> T {
    let tj = rates[j];
    let den = |x: T| -> T { p.iter().zip(rates).map(|(&pi, &ti)| pi * ti * ((tj - ti) * x).exp()).sum() };
    let slope = |x: T| -> T {
        p.iter()
            .zip(rates)
            .map(|(&pi, &ti)| pi * ti * (tj - ti) * ((tj - ti) * x).exp())
            .sum()
    };
    if slope(T::zero()) >= T::zero() {
        return den(T::zero());
    }
    if rates.iter().all(|&ti| ti >= tj) {
        // decreasing towards the sources sharing the slowest rate
        return p.iter().zip(rates).filter(|(_, &ti)| ti == tj).map(|(&pi, &ti)| pi * ti).sum();
    }
    let mut hi = T::one();
    while slope(hi) < T::zero() {
        hi = hi * T::lit(2.0);
    }
    let mut lo = T::zero();
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (den(a), den(b));
    for _ in 0..200 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = den(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = den(b);
        }
    }
    den(T::lit(0.5) * (lo + hi)).min(fa).min(fb)
}

/// `φ_j = sup h̃_j/h̃`: exact for exponential sources, grid maximum otherwise.
pub fn phi<T: Scalar>(spec: &PointProcessSpec<T>, j: usize) -> T {
    let lam = spec.lambda();
    match &spec.sources {
        Sources::Exponential(rates) => lam * rates[j] / exp_denominator_min(&spec.p, rates, j),
        Sources::Tabulated { densities, .. } => {
            let mix = mixture(&spec.p, densities);
            (0..mix.len())
                .filter(|&i| mix[i] > T::zero())
                .map(|i| densities[j][i] / mix[i])
                .fold(T::zero(), |m, r| m.max(r))
        }
    }
}

pub fn pp_summary<T: Scalar>(spec: &PointProcessSpec<T>, resolution: usize) -> Result<ProcessSummary<T>> {
    let (alpha, beta) = pp_alpha_beta(spec, resolution)?;
    Ok(ProcessSummary {
        lambda: spec.lambda(),
        alpha,
        beta,
        sum_p_sq: spec.p.iter().map(|&x| x * x).sum(),
        phi: (0..spec.n()).map(|j| phi(spec, j)).collect(),
        resolution: match &spec.sources {
            Sources::Exponential(_) => resolution,
            Sources::Tabulated { grid, .. } => grid.x.len(),
        },
    })
}

/// Distance bounds for the process approximation, sorted by value with
/// inapplicable entries last.
pub fn pp_bounds<T: Scalar>(spec: &PointProcessSpec<T>, resolution: usize) -> Result<Vec<BoundReport<T>>> {
    let s = pp_summary(spec, resolution)?;
    let c = T::lit(2.0).powf(T::lit(1.5));
    let lam = s.lambda;
    let l2 = (T::lit(2.0) * lam).ln();
    let c_lam = T::lit(0.5) + if l2 > T::zero() { l2 } else { T::zero() };
    let barbour: T = spec.p.iter().zip(&s.phi).map(|(&pj, &f)| pj * pj * f * f).sum::<T>() * c_lam / lam;
    let report = |name, source, value, condition: Option<String>| BoundReport {
        name,
        kind: BoundKind::Upper,
        order: 0,
        value,
        condition,
        source,
    };
    let mut out = vec![
        report(
            "alpha1-process",
            "process alpha1 bound",
            if s.alpha < T::one() / c { Some(s.alpha / (T::one() - c * s.alpha)) } else { None },
            Some("alpha1 < 2^(-3/2)".into()),
        ),
        report("beta1-process", "process beta1 bound", Some(T::lit(7.8) * s.beta), None),
        report("le-cam-process", "Le Cam-type process bound", Some(s.sum_p_sq), None),
        report("barbour-process", "Barbour process bound", Some(barbour), None),
    ];
    out.sort_by(|a, b| match (a.value, b.value) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(out)
}
