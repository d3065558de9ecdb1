//! The generalized multinomial model, its compound Poisson approximation and
//! the signed-measure corrections `G_ℓ`.
//!
//! With `R_j = p_j(Q_j − δ_0)`, `F_j = δ_0 + R_j` and
//! `V_j = F_j e^{−R_j} − δ_0`, the model factorizes as
//! `F = Π_j (δ_0 + V_j) e^{R_j} = Σ_{k=0}^{n} M_k exp(λ(Q − δ_0))`
//! where `M_k` is the `k`-th elementary symmetric sum of the `V_j`.
//! Truncating that sum after `k = ℓ` gives `G_ℓ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{
    convolve, convolve_par, dirac, exp_measure, linear_combine, poisson_product, poisson_product_size, prune,
    unit_step, DwMeasure, LatticePoint, SignedMeasure, convolve_dw, signed_sum,
};
use crate::scalar::Scalar;

/// Largest accepted deviation of a category row sum from one.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Atoms below this magnitude are dropped (into the budget) after each
/// convolution in the correction pipeline.
pub const DEFAULT_PRUNE_EPS: f64 = 1e-16;

/// Default atom cap for exact constructions.
/// Largest `d` accepted by the exact computations.
pub const MAX_EXACT_DIM: usize = 16;
pub const DEFAULT_SUPPORT_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel<T> {
    n: usize,
    d: usize,
    p: Vec<T>,
    q: Vec<Vec<T>>,
}

/// `n` independent trials; trial `j` succeeds with probability `p_j` and then
/// lands in category `r` with probability `q_{j,r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel<T>", into = "RawModel<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ModelSpec<T> {
    p: Vec<T>,
    q: Vec<Vec<T>>,
    lambda_r: Vec<T>,
}

impl<T: Scalar> TryFrom<RawModel<T>> for ModelSpec<T> {
    type Error = Error;

    fn try_from(raw: RawModel<T>) -> Result<Self> {
        if raw.p.len() != raw.n {
            return Err(Error::InvalidModel(format!(
                "field `p`: expected {} entries (n), found {}",
                raw.n,
                raw.p.len()
            )));
        }
        if let Some((j, row)) = raw.q.iter().enumerate().find(|(_, row)| row.len() != raw.d) {
            return Err(Error::InvalidModel(format!(
                "field `q[{j}]`: expected {} entries (d), found {}",
                raw.d,
                row.len()
            )));
        }
        ModelSpec::new(raw.p, raw.q)
    }
}

impl<T: Scalar> From<ModelSpec<T>> for RawModel<T> {
    fn from(m: ModelSpec<T>) -> Self {
        RawModel {
            n: m.n(),
            d: m.d(),
            p: m.p,
            q: m.q,
        }
    }
}

impl<T: Scalar> ModelSpec<T> {
    pub fn new(p: Vec<T>, q: Vec<Vec<T>>) -> Result<Self> {
        let n = p.len();
        if n == 0 {
            return Err(Error::InvalidModel("n must be at least 1".into()));
        }
        if q.len() != n {
            return Err(Error::InvalidModel(format!("field `q`: expected {n} rows, found {}", q.len())));
        }
        let d = q[0].len();
        if d == 0 {
            return Err(Error::InvalidModel("d must be at least 1".into()));
        }
        let unit = |x: T| x.is_finite() && x >= T::zero() && x <= T::one();
        for (j, &pj) in p.iter().enumerate() {
            if !unit(pj) {
                return Err(Error::InvalidModel(format!("field `p[{j}]` = {pj} is outside [0, 1]")));
            }
        }
        for (j, row) in q.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidModel(format!(
                    "field `q[{j}]`: expected {d} entries, found {}",
                    row.len()
                )));
            }
            if let Some((r, x)) = row.iter().enumerate().find(|(_, &x)| !unit(x)) {
                return Err(Error::InvalidModel(format!("field `q[{j}][{r}]` = {x} is outside [0, 1]")));
            }
            let s: T = row.iter().copied().sum();
            if (s - T::one()).abs() > T::lit(ROW_SUM_TOL) {
                return Err(Error::InvalidModel(format!("field `q[{j}]` sums to {s}, not 1")));
            }
        }
        let mut lambda_r = vec![T::zero(); d];
        for (pj, row) in p.iter().zip(&q) {
            for (l, &x) in lambda_r.iter_mut().zip(row) {
                *l += *pj * x;
            }
        }
        let all_zero = p.iter().all(|&x| x == T::zero());
        if !all_zero {
            if let Some(r) = lambda_r.iter().position(|&l| l <= T::zero()) {
                return Err(Error::InvalidModel(format!(
                    "category {r} has zero intensity (λ_r = Σ_j p_j q_j,r must be positive)"
                )));
            }
        }
        Ok(ModelSpec { p, q, lambda_r })
    }

    /// Banded test model of size `n = d = size`: `p_{j,r} = 10⁻⁴ / (|j−r|^{1/2} + 0.1)`,
    /// `p_j = Σ_r p_{j,r}`, `q_{j,r} = p_{j,r} / p_j`. With `size = 1000` this
    /// is the reference example the bound tables are checked against.
    pub fn banded_example(size: usize) -> Self {
        let mut p = Vec::with_capacity(size);
        let mut q = Vec::with_capacity(size);
        for j in 0..size {
            let row: Vec<f64> = (0..size)
                .map(|r| 1e-4 / ((j as f64 - r as f64).abs().sqrt() + 0.1))
                .collect();
            let pj: f64 = row.iter().sum();
            p.push(T::lit(pj));
            q.push(row.iter().map(|&x| T::lit(x / pj)).collect());
        }
        ModelSpec::new(p, q).expect("banded example is a valid model")
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn d(&self) -> usize {
        self.lambda_r.len()
    }

    pub fn p(&self) -> &[T] {
        &self.p
    }

    pub fn q(&self) -> &[Vec<T>] {
        &self.q
    }

    /// `λ_r = Σ_j p_j q_{j,r}`.
    pub fn lambda_r(&self) -> &[T] {
        &self.lambda_r
    }

    /// `λ = Σ_j p_j`.
    pub fn lambda(&self) -> T {
        self.p.iter().copied().sum()
    }

    /// All success probabilities vanish, so `F = G_ℓ = δ_0`.
    pub fn is_degenerate(&self) -> bool {
        self.p.iter().all(|&x| x == T::zero())
    }
}

/// Order `ℓ ∈ [0, n]` of a signed-measure correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CorrectionOrder(usize);

impl CorrectionOrder {
    pub fn new<T: Scalar>(ell: usize, spec: &ModelSpec<T>) -> Result<Self> {
        if ell > spec.n() {
            return Err(Error::InvalidArgument(format!("order {ell} exceeds n = {}", spec.n())));
        }
        Ok(CorrectionOrder(ell))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Knobs for the exact (truncated) constructions.
#[derive(Debug, Clone, Copy)]
pub struct ExactConfig<T> {
    /// Norm tolerance for each truncated exponential.
    pub tol: T,
    /// Atoms below this magnitude are pruned after each convolution (0 disables).
    pub prune_eps: T,
    pub parallel: bool,
    pub support_cap: usize,
}

impl<T: Scalar> Default for ExactConfig<T> {
    fn default() -> Self {
        ExactConfig {
            tol: T::lit(1e-12),
            prune_eps: T::lit(DEFAULT_PRUNE_EPS),
            parallel: false,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }
}

impl<T: Scalar> ExactConfig<T> {
    pub fn with_tol(tol: T) -> Self {
        ExactConfig {
            tol,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidTolerance(self.tol.as_f64()));
        }
        Ok(())
    }

    fn guard(&self, m: SignedMeasure<T>) -> Result<SignedMeasure<T>> {
        if m.len() > self.support_cap {
            return Err(Error::ResourceCap {
                predicted: m.len() as u128,
                cap: self.support_cap as u128,
            });
        }
        Ok(m)
    }

    fn conv(&self, a: &SignedMeasure<T>, b: &SignedMeasure<T>) -> Result<SignedMeasure<T>> {
        let c = if self.parallel { convolve_par(a, b)? } else { convolve(a, b)? };
        let c = if self.prune_eps > T::zero() { prune(&c, self.prune_eps)? } else { c };
        self.guard(c)
    }
}

/// Result of an exact distance computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactTvResult<T> {
    /// `‖F − G_ℓ‖` (full norm, not the half-norm distance).
    pub distance: T,
    /// Accumulated truncation budget; the exact value lies within
    /// `distance ± error_bar`.
    pub error_bar: T,
    pub order: CorrectionOrder,
}

fn binomial_saturating(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Upper bound on the number of atoms of `F` (points of `ℤ₊^d` with `|x| <= n`).
pub fn predicted_f_support<T: Scalar>(spec: &ModelSpec<T>) -> u128 {
    binomial_saturating((spec.n() + spec.d()) as u128, spec.d() as u128)
}

fn check_cap(predicted: u128, cfg_cap: usize) -> Result<()> {
    if predicted > cfg_cap as u128 {
        return Err(Error::ResourceCap {
            predicted,
            cap: cfg_cap as u128,
        });
    }
    Ok(())
}

fn check_lattice_dim<T: Scalar>(spec: &ModelSpec<T>) -> Result<()> {
    if spec.d() > MAX_EXACT_DIM {
        return Err(Error::DimensionCap {
            d: spec.d(),
            limit: MAX_EXACT_DIM,
        });
    }
    Ok(())
}

/// `R_j = p_j(Q_j − δ_0)` with `Q_j = Σ_r q_{j,r} δ_{e_r}` (zero-based `j`).
pub fn build_r<T: Scalar>(spec: &ModelSpec<T>, j: usize) -> Result<SignedMeasure<T>> {
    check_lattice_dim(spec)?;
    let d = spec.d();
    let pj = spec.p[j];
    let mut atoms: Vec<(LatticePoint, T)> = vec![(LatticePoint::origin(d), -pj)];
    for (r, &x) in spec.q[j].iter().enumerate() {
        atoms.push((LatticePoint::unit(d, r), pj * x));
    }
    SignedMeasure::from_atoms(d, atoms)
}

/// `F_j = δ_0 + R_j`.
pub fn build_factor<T: Scalar>(spec: &ModelSpec<T>, j: usize) -> Result<SignedMeasure<T>> {
    dirac(&LatticePoint::origin(spec.d())).plus(&build_r(spec, j)?)
}

/// The generalized multinomial law `F = Π_j F_j` (exact, zero budget).
pub fn build_f<T: Scalar>(spec: &ModelSpec<T>, cfg: &ExactConfig<T>) -> Result<SignedMeasure<T>> {
    check_lattice_dim(spec)?;
    check_cap(predicted_f_support(spec), cfg.support_cap)?;
    let mut acc = dirac(&LatticePoint::origin(spec.d()));
    for j in 0..spec.n() {
        acc = convolve(&acc, &build_factor(spec, j)?)?;
    }
    Ok(acc)
}

/// `G_0 = exp(λ(Q − δ_0)) = ⊗_r Po(λ_r)`, truncated with budget `<= tol`.
pub fn build_g0<T: Scalar>(spec: &ModelSpec<T>, cfg: &ExactConfig<T>) -> Result<SignedMeasure<T>> {
    cfg.check()?;
    check_lattice_dim(spec)?;
    check_cap(poisson_product_size(spec.lambda_r(), cfg.tol), cfg.support_cap)?;
    poisson_product(spec.lambda_r(), cfg.tol)
}

/// The generator `λ(Q − δ_0) = Σ_r λ_r(δ_{e_r} − δ_0)`.
pub fn compound_generator<T: Scalar>(spec: &ModelSpec<T>) -> Result<SignedMeasure<T>> {
    check_lattice_dim(spec)?;
    let d = spec.d();
    let steps: Vec<SignedMeasure<T>> = (0..d).map(|r| unit_step(d, r)).collect();
    let terms: Vec<(T, &SignedMeasure<T>)> = spec.lambda_r.iter().copied().zip(steps.iter()).collect();
    linear_combine(&terms)
}

/// `V_j = F_j e^{−R_j} − δ_0` (zero-based `j`).
pub fn build_v<T: Scalar>(spec: &ModelSpec<T>, j: usize, cfg: &ExactConfig<T>) -> Result<SignedMeasure<T>> {
    cfg.check()?;
    if j >= spec.n() {
        return Err(Error::InvalidArgument(format!("trial index {j} out of range")));
    }
    if spec.p[j] == T::zero() {
        return Ok(SignedMeasure::zero(spec.d()));
    }
    let d = spec.d();
    let origin = LatticePoint::origin(d);
    let r = build_r(spec, j)?;
    let f = dirac(&origin).plus(&r)?;
    let e = exp_measure(&r.scaled(-T::one()), cfg.tol)?;
    let v = cfg.conv(&f, &e)?.minus(&dirac(&origin))?;
    // The atoms at 0 and e_r are O(p²) differences of O(1) and O(p) terms.
    // Replace them by their closed forms so small p_j keep relative accuracy.
    let p = spec.p[j];
    let mut fix = Vec::with_capacity(d + 1);
    let at0 = v.weight(&origin);
    if at0 != T::zero() {
        fix.push((origin, v_origin_atom(p) - at0));
    }
    for (k, &q) in spec.q[j].iter().enumerate() {
        let e_k = LatticePoint::unit(d, k);
        let at = v.weight(&e_k);
        if at != T::zero() {
            fix.push((e_k, p.exp() * p * p * q - at));
        }
    }
    v.plus(&SignedMeasure::from_atoms(d, fix)?)
}

/// `e^p(1 − p) − 1 = −Σ_{i≥2} (i−1) pⁱ/i!` for `p ∈ [0, 1]`.
fn v_origin_atom<T: Scalar>(p: T) -> T {
    let mut term = p;
    let mut sum = T::zero();
    for i in 2..40usize {
        term = term * p / T::from_count(i);
        sum += T::from_count(i - 1) * term;
    }
    -sum
}

/// Lazily built power sums `Γ_k = Σ_j V_j^k` and elementary symmetric sums
/// `M_k` (via Newton's identities) for one model.
///
/// The recursion cancels heavily when the `‖V_j‖` differ by orders of
/// magnitude, so powers and sums are carried in double-word arithmetic and
/// rounded only on the way out.
pub struct CorrectionTerms<'a, T> {
    spec: &'a ModelSpec<T>,
    cfg: ExactConfig<T>,
    v: Vec<SignedMeasure<T>>,
    v_dw: Vec<DwMeasure<T>>,
    v_pow: Vec<DwMeasure<T>>,
    gamma_dw: Vec<DwMeasure<T>>,
    m_dw: Vec<DwMeasure<T>>,
    gamma: Vec<SignedMeasure<T>>,
    m: Vec<SignedMeasure<T>>,
}

impl<'a, T: Scalar> CorrectionTerms<'a, T> {
    pub fn new(spec: &'a ModelSpec<T>, cfg: &ExactConfig<T>) -> Result<Self> {
        cfg.check()?;
        check_lattice_dim(spec)?;
        let v = (0..spec.n())
            .map(|j| build_v(spec, j, cfg))
            .collect::<Result<Vec<_>>>()?;
        let origin = dirac(&LatticePoint::origin(spec.d()));
        let origin_dw = DwMeasure::from_measure(&origin);
        Ok(CorrectionTerms {
            spec,
            cfg: *cfg,
            v_dw: v.iter().map(DwMeasure::from_measure).collect(),
            v_pow: vec![origin_dw.clone(); spec.n()],
            v,
            // index 0 is unused; Γ_k lives at index k
            gamma_dw: vec![DwMeasure::zero(spec.d())],
            m_dw: vec![origin_dw],
            gamma: vec![SignedMeasure::zero(spec.d())],
            m: vec![origin],
        })
    }

    pub fn v(&self, j: usize) -> &SignedMeasure<T> {
        &self.v[j]
    }

    fn finish(&self, m: DwMeasure<T>) -> Result<DwMeasure<T>> {
        let m = m.pruned(self.cfg.prune_eps);
        if m.len() > self.cfg.support_cap {
            return Err(Error::ResourceCap {
                predicted: m.len() as u128,
                cap: self.cfg.support_cap as u128,
            });
        }
        Ok(m)
    }

    /// `Γ_k = Σ_j V_j^k`, `k >= 1`.
    pub fn gamma(&mut self, k: usize) -> Result<&SignedMeasure<T>> {
        if k == 0 || k > self.spec.n() {
            return Err(Error::InvalidArgument(format!("power-sum index {k} outside 1..={}", self.spec.n())));
        }
        let d = self.spec.d();
        while self.gamma.len() <= k {
            for j in 0..self.spec.n() {
                let next = if self.v[j].is_empty() && self.v[j].budget() == T::zero() {
                    DwMeasure::zero(d)
                } else {
                    convolve_dw(&self.v_pow[j], &self.v_dw[j], self.cfg.parallel)?
                };
                self.v_pow[j] = self.finish(next)?;
            }
            let terms: Vec<(bool, &DwMeasure<T>)> = self.v_pow.iter().map(|p| (false, p)).collect();
            let sum = self.finish(signed_sum(d, &terms)?)?;
            self.gamma.push(sum.rounded());
            self.gamma_dw.push(sum);
        }
        Ok(&self.gamma[k])
    }

    /// `M_0 = δ_0`, `M_k = (1/k) Σ_{i=1}^{k} (−1)^{i−1} M_{k−i} Γ_i`.
    pub fn newton_m(&mut self, k: usize) -> Result<&SignedMeasure<T>> {
        if k > self.spec.n() {
            return Err(Error::InvalidArgument(format!("order {k} exceeds n = {}", self.spec.n())));
        }
        let d = self.spec.d();
        while self.m.len() <= k {
            let next = self.m.len();
            self.gamma(next)?;
            let mut products = Vec::with_capacity(next);
            for i in 1..=next {
                let p = convolve_dw(&self.m_dw[next - i], &self.gamma_dw[i], self.cfg.parallel)?;
                products.push(self.finish(p)?);
            }
            let terms: Vec<(bool, &DwMeasure<T>)> =
                products.iter().enumerate().map(|(idx, p)| (idx % 2 == 1, p)).collect();
            let mk = self.finish(signed_sum(d, &terms)?.div_count(next))?;
            self.m.push(mk.rounded());
            self.m_dw.push(mk);
        }
        Ok(&self.m[k])
    }

    /// `Σ_{k<=ℓ} M_k`.
    pub fn partial_sum(&mut self, ell: usize) -> Result<SignedMeasure<T>> {
        self.newton_m(ell)?;
        let terms: Vec<(T, &SignedMeasure<T>)> = self.m[..=ell].iter().map(|m| (T::one(), m)).collect();
        linear_combine(&terms)
    }

    /// `G_ℓ = (Σ_{k<=ℓ} M_k) G_0` given a precomputed `G_0`.
    pub fn g_ell_with(&mut self, ell: usize, g0: &SignedMeasure<T>) -> Result<SignedMeasure<T>> {
        let poly = self.partial_sum(ell)?;
        let cfg = self.cfg;
        cfg.conv(&poly, g0)
    }
}

/// `Γ_k = Σ_j V_j^k`.
pub fn gamma_sum<T: Scalar>(spec: &ModelSpec<T>, k: usize, cfg: &ExactConfig<T>) -> Result<SignedMeasure<T>> {
    let mut terms = CorrectionTerms::new(spec, cfg)?;
    Ok(terms.gamma(k)?.clone())
}

/// `M_k` via Newton's identities.
pub fn newton_m<T: Scalar>(spec: &ModelSpec<T>, k: usize, cfg: &ExactConfig<T>) -> Result<SignedMeasure<T>> {
    let mut terms = CorrectionTerms::new(spec, cfg)?;
    Ok(terms.newton_m(k)?.clone())
}

/// `G_ℓ = Σ_{k=0}^{ℓ} M_k exp(λ(Q − δ_0))`.
pub fn build_g_ell<T: Scalar>(spec: &ModelSpec<T>, ell: usize, cfg: &ExactConfig<T>) -> Result<SignedMeasure<T>> {
    let ell = CorrectionOrder::new(ell, spec)?.get();
    let g0 = build_g0(spec, cfg)?;
    if ell == 0 {
        return Ok(g0);
    }
    CorrectionTerms::new(spec, cfg)?.g_ell_with(ell, &g0)
}

/// `‖F − G_ℓ‖` with its error bar.
pub fn exact_tv<T: Scalar>(spec: &ModelSpec<T>, ell: usize, cfg: &ExactConfig<T>) -> Result<ExactTvResult<T>> {
    Ok(exact_tv_orders(spec, &[ell], cfg)?.remove(0))
}

/// `‖F − G_ℓ‖` for several orders, sharing `F`, `G_0` and the correction terms.
pub fn exact_tv_orders<T: Scalar>(
    spec: &ModelSpec<T>,
    orders: &[usize],
    cfg: &ExactConfig<T>,
) -> Result<Vec<ExactTvResult<T>>> {
    cfg.check()?;
    let orders = orders
        .iter()
        .map(|&l| CorrectionOrder::new(l, spec))
        .collect::<Result<Vec<_>>>()?;
    let f = build_f(spec, cfg)?;
    let g0 = build_g0(spec, cfg)?;
    let mut terms = if orders.iter().any(|o| o.get() > 0) {
        Some(CorrectionTerms::new(spec, cfg)?)
    } else {
        None
    };
    orders
        .into_iter()
        .map(|order| {
            let g = match (order.get(), terms.as_mut()) {
                (0, _) => g0.clone(),
                (ell, Some(t)) => t.g_ell_with(ell, &g0)?,
                (_, None) => unreachable!("terms are built whenever a positive order is requested"),
            };
            let diff = f.minus(&g)?;
            Ok(ExactTvResult {
                distance: diff.tv_norm(),
                error_bar: diff.budget(),
                order,
            })
        })
        .collect()
}

/// Image of `V` under `x ↦ Σ_{r∈J} x_r` (zero-based `J`), a measure on `ℤ₊`.
pub fn marginalize<T: Scalar>(v: &SignedMeasure<T>, coords: &[usize]) -> Result<SignedMeasure<T>> {
    if coords.is_empty() {
        return Err(Error::InvalidArgument("marginalization needs a nonempty coordinate set".into()));
    }
    if let Some(&r) = coords.iter().find(|&&r| r >= v.dim()) {
        return Err(Error::InvalidArgument(format!("coordinate {r} out of range for dimension {}", v.dim())));
    }
    let mut set = coords.to_vec();
    set.sort_unstable();
    set.dedup();
    let atoms = v.iter().map(|(x, w)| {
        let s: u32 = set.iter().map(|&r| x.0[r]).sum();
        (LatticePoint(vec![s]), w)
    });
    Ok(SignedMeasure::from_atoms(1, atoms)?.with_extra_budget(v.budget()))
}
