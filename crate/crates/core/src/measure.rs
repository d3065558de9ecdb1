//! Sparse finite signed measures on the lattice `ℤ₊^d`.
//!
//! A [`SignedMeasure`] stores its atoms sorted by a packed integer key (the
//! first coordinate occupies the most significant bits, so ascending keys are
//! ascending lexicographic order) together with a truncation budget: an upper
//! bound on the total variation norm of everything that was discarded while
//! producing the value. Every operation propagates the budgets of its inputs
//! and adds whatever it truncates itself, so the budget of a composite result
//! bounds the distance between the stored atoms and the exact measure.
//!
//! All sums over atoms run in ascending key order, which makes results
//! reproducible bit for bit in sequential mode.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special::{exp_tail_bound, poisson_cutoff, poisson_mass};

mod compensated;
pub(crate) use compensated::{convolve_dw, signed_sum, DwMeasure};

/// Dense accumulation is used for convolutions whose bounding box has at most
/// this many cells.
const DENSE_CELLS: u128 = 1 << 22;

/// Iteration cap for power series evaluation.
const MAX_SERIES_TERMS: u64 = 10_000;

/// A point of `ℤ₊^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint(pub Vec<u32>);

impl LatticePoint {
    pub fn origin(dim: usize) -> Self {
        LatticePoint(vec![0; dim])
    }

    /// Unit vector `e_r` (zero based `r`).
    pub fn unit(dim: usize, r: usize) -> Self {
        let mut c = vec![0; dim];
        c[r] = 1;
        LatticePoint(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    /// Sum of the coordinates.
    pub fn norm1(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }
}

impl From<Vec<u32>> for LatticePoint {
    fn from(v: Vec<u32>) -> Self {
        LatticePoint(v)
    }
}

#[inline]
fn bits_for(dim: usize) -> u32 {
    (64 / dim) as u32
}

/// Largest representable coordinate in dimension `dim`.
pub fn coord_limit(dim: usize) -> u64 {
    let bits = bits_for(dim);
    if bits >= 32 {
        u32::MAX as u64
    } else {
        (1u64 << bits) - 1
    }
}

fn pack(coords: &[u32]) -> u64 {
    let dim = coords.len();
    if dim == 1 {
        return coords[0] as u64;
    }
    let bits = bits_for(dim);
    coords.iter().fold(0u64, |key, &c| (key << bits) | c as u64)
}

fn unpack(key: u64, dim: usize) -> Vec<u32> {
    if dim == 1 {
        return vec![key as u32];
    }
    let bits = bits_for(dim);
    let mask = (1u64 << bits) - 1;
    let mut out = vec![0u32; dim];
    let mut k = key;
    for r in (0..dim).rev() {
        out[r] = (k & mask) as u32;
        k >>= bits;
    }
    out
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > 64 {
        return Err(Error::InvalidArgument(format!(
            "lattice dimension must lie in 1..=64, got {dim}"
        )));
    }
    Ok(())
}

/// Finite signed measure on `ℤ₊^d` with an accumulated truncation budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure<T> {
    dim: usize,
    atoms: Vec<(u64, T)>,
    extent: Vec<u32>,
    budget: T,
}

impl<T: Scalar> SignedMeasure<T> {
    /// The zero measure.
    pub fn zero(dim: usize) -> Self {
        assert!((1..=64).contains(&dim), "lattice dimension must lie in 1..=64");
        SignedMeasure {
            dim,
            atoms: Vec::new(),
            extent: vec![0; dim],
            budget: T::zero(),
        }
    }

    /// Builds a measure from (point, weight) pairs, summing repeated points.
    pub fn from_atoms<I, P>(dim: usize, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, T)>,
        P: Into<LatticePoint>,
    {
        check_dim(dim)?;
        let limit = coord_limit(dim);
        let mut acc: HashMap<u64, T> = HashMap::new();
        for (p, w) in atoms {
            let p = p.into();
            if p.dim() != dim {
                return Err(Error::DimensionMismatch(dim, p.dim()));
            }
            if p.0.iter().any(|&c| c as u64 > limit) {
                return Err(Error::CoordinateOverflow { dim, limit });
            }
            *acc.entry(pack(&p.0)).or_insert_with(T::zero) += w;
        }
        let mut atoms: Vec<(u64, T)> = acc.into_iter().collect();
        atoms.sort_unstable_by_key(|a| a.0);
        Ok(Self::from_sorted(dim, atoms, T::zero()))
    }

    /// Takes ownership of atoms already sorted by key; drops exact zeros.
    fn from_sorted(dim: usize, mut atoms: Vec<(u64, T)>, budget: T) -> Self {
        atoms.retain(|a| a.1 != T::zero());
        let mut extent = vec![0u32; dim];
        for &(k, _) in &atoms {
            for (e, c) in extent.iter_mut().zip(unpack(k, dim)) {
                *e = (*e).max(c);
            }
        }
        SignedMeasure {
            dim,
            atoms,
            extent,
            budget,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper bound on the norm of discarded mass.
    pub fn budget(&self) -> T {
        self.budget
    }

    /// Returns the same atoms with `extra` added to the budget.
    pub fn with_extra_budget(mut self, extra: T) -> Self {
        self.budget += extra;
        self
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Per-coordinate maximum over the support.
    pub fn extent(&self) -> &[u32] {
        &self.extent
    }

    /// Atoms in ascending lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (LatticePoint, T)> + '_ {
        self.atoms
            .iter()
            .map(move |&(k, w)| (LatticePoint(unpack(k, self.dim)), w))
    }

    pub fn weight(&self, point: &LatticePoint) -> T {
        if point.dim() != self.dim || point.0.iter().any(|&c| c as u64 > coord_limit(self.dim)) {
            return T::zero();
        }
        let key = pack(&point.0);
        match self.atoms.binary_search_by_key(&key, |a| a.0) {
            Ok(i) => self.atoms[i].1,
            Err(_) => T::zero(),
        }
    }

    /// Total variation norm `Σ |w(x)|` of the stored atoms.
    pub fn tv_norm(&self) -> T {
        self.atoms.iter().map(|a| a.1.abs()).sum()
    }

    /// Total mass `Σ w(x)` of the stored atoms.
    pub fn total_mass(&self) -> T {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Multiplies every weight (and the budget) by `c`.
    pub fn scaled(&self, c: T) -> Self {
        let atoms = self.atoms.iter().map(|&(k, w)| (k, w * c)).collect();
        Self::from_sorted(self.dim, atoms, self.budget * c.abs())
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        linear_combine(&[(T::one(), self), (T::one(), other)])
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        linear_combine(&[(T::one(), self), (-T::one(), other)])
    }

    /// `m`-fold convolution power; `V^0 = δ_0`.
    pub fn pow(&self, m: u32) -> Result<Self> {
        let mut acc = dirac(&LatticePoint::origin(self.dim));
        for _ in 0..m {
            acc = convolve(&acc, self)?;
        }
        Ok(acc)
    }

    /// Splits off the atom at the origin: returns `(w(0), V − w(0)δ_0)` with
    /// the budget kept on the remainder.
    fn split_origin(&self) -> (T, Self) {
        match self.atoms.first() {
            Some(&(0, w)) => (
                w,
                SignedMeasure {
                    dim: self.dim,
                    atoms: self.atoms[1..].to_vec(),
                    extent: self.extent.clone(),
                    budget: self.budget,
                },
            ),
            _ => (T::zero(), self.clone()),
        }
    }

    /// Positive and negative parts (Hahn–Jordan decomposition of an atomic
    /// measure). The budget stays on both parts.
    pub fn jordan(&self) -> (Self, Self) {
        let pos = self.atoms.iter().filter(|a| a.1 > T::zero()).copied().collect();
        let neg = self
            .atoms
            .iter()
            .filter(|a| a.1 < T::zero())
            .map(|&(k, w)| (k, -w))
            .collect();
        (
            Self::from_sorted(self.dim, pos, self.budget),
            Self::from_sorted(self.dim, neg, self.budget),
        )
    }
}

/// Unit point mass at `point`.
pub fn dirac<T: Scalar>(point: &LatticePoint) -> SignedMeasure<T> {
    let dim = point.dim();
    SignedMeasure::from_atoms(dim, [(point.clone(), T::one())])
        .expect("a single in-range lattice point")
}

/// `δ_{e_r} − δ_0` for zero-based coordinate `r`.
pub fn unit_step<T: Scalar>(dim: usize, r: usize) -> SignedMeasure<T> {
    SignedMeasure::from_atoms(
        dim,
        [
            (LatticePoint::unit(dim, r), T::one()),
            (LatticePoint::origin(dim), -T::one()),
        ],
    )
    .expect("unit vectors are in range")
}

/// Pointwise `Σ c_i V_i`; budget `Σ |c_i| budget(V_i)`.
pub fn linear_combine<T: Scalar>(terms: &[(T, &SignedMeasure<T>)]) -> Result<SignedMeasure<T>> {
    let Some(first) = terms.first() else {
        return Err(Error::InvalidArgument("empty linear combination".into()));
    };
    let dim = first.1.dim;
    for (_, v) in terms {
        if v.dim != dim {
            return Err(Error::DimensionMismatch(dim, v.dim));
        }
    }
    let budget = terms.iter().map(|(c, v)| c.abs() * v.budget).sum();
    // k-way merge of sorted atom lists, accumulating in term order
    let mut out: Vec<(u64, T)> = Vec::with_capacity(terms.iter().map(|t| t.1.len()).max().unwrap_or(0));
    let mut cursors = vec![0usize; terms.len()];
    loop {
        let mut next: Option<u64> = None;
        for (i, (_, v)) in terms.iter().enumerate() {
            if let Some(&(k, _)) = v.atoms.get(cursors[i]) {
                next = Some(next.map_or(k, |n: u64| n.min(k)));
            }
        }
        let Some(key) = next else { break };
        let mut acc = T::zero();
        for (i, (c, v)) in terms.iter().enumerate() {
            if let Some(&(k, w)) = v.atoms.get(cursors[i]) {
                if k == key {
                    acc += *c * w;
                    cursors[i] += 1;
                }
            }
        }
        out.push((key, acc));
    }
    Ok(SignedMeasure::from_sorted(dim, out, budget))
}

struct BoxLayout {
    strides: Vec<u64>,
    cells: u128,
}

fn box_layout(extent: &[u32]) -> BoxLayout {
    let dim = extent.len();
    let mut strides = vec![1u64; dim];
    let mut cells: u128 = 1;
    for r in (0..dim).rev() {
        strides[r] = cells.min(u64::MAX as u128) as u64;
        cells = cells.saturating_mul(extent[r] as u128 + 1);
    }
    BoxLayout { strides, cells }
}

fn box_index(key: u64, dim: usize, strides: &[u64]) -> u64 {
    unpack(key, dim)
        .iter()
        .zip(strides)
        .map(|(&c, &s)| c as u64 * s)
        .sum()
}

fn box_key(mut idx: u64, strides: &[u64]) -> u64 {
    let mut coords = Vec::with_capacity(strides.len());
    for &s in strides {
        coords.push((idx / s) as u32);
        idx %= s;
    }
    pack(&coords)
}

/// Accumulates the products of `left` (a slice of V) with all of `w` into a
/// sorted atom list.
fn accumulate<T: Scalar>(left: &[(u64, T)], w: &[(u64, T)], dim: usize, extent: &[u32]) -> Vec<(u64, T)> {
    let layout = box_layout(extent);
    let pairs = (left.len() as u128) * (w.len() as u128);
    if layout.cells <= DENSE_CELLS && layout.cells <= pairs.saturating_mul(64).max(1 << 12) {
        let mut acc = vec![T::zero(); layout.cells as usize];
        let wi: Vec<(usize, T)> = w
            .iter()
            .map(|&(k, b)| (box_index(k, dim, &layout.strides) as usize, b))
            .collect();
        for &(k, a) in left {
            let base = box_index(k, dim, &layout.strides) as usize;
            for &(j, b) in &wi {
                acc[base + j] += a * b;
            }
        }
        acc.into_iter()
            .enumerate()
            .filter(|(_, x)| *x != T::zero())
            .map(|(i, x)| (box_key(i as u64, &layout.strides), x))
            .collect()
    } else {
        let mut acc: HashMap<u64, T> = HashMap::with_capacity(left.len().max(w.len()) * 4);
        for &(ka, a) in left {
            for &(kb, b) in w {
                *acc.entry(ka + kb).or_insert_with(T::zero) += a * b;
            }
        }
        let mut out: Vec<(u64, T)> = acc.into_iter().collect();
        out.sort_unstable_by_key(|a| a.0);
        out
    }
}

fn product_extent<T: Scalar>(v: &SignedMeasure<T>, w: &SignedMeasure<T>) -> Result<Vec<u32>> {
    if v.dim != w.dim {
        return Err(Error::DimensionMismatch(v.dim, w.dim));
    }
    let limit = coord_limit(v.dim);
    v.extent
        .iter()
        .zip(&w.extent)
        .map(|(&a, &b)| {
            let s = a as u64 + b as u64;
            if s > limit {
                Err(Error::CoordinateOverflow { dim: v.dim, limit })
            } else {
                Ok(s as u32)
            }
        })
        .collect()
}

fn product_budget<T: Scalar>(v: &SignedMeasure<T>, w: &SignedMeasure<T>) -> T {
    v.budget * w.tv_norm() + w.budget * v.tv_norm() + v.budget * w.budget
}

/// Convolution `V ∗ W`.
///
/// Budget: `b(V)‖W‖ + b(W)‖V‖ + b(V)b(W)`.
pub fn convolve<T: Scalar>(v: &SignedMeasure<T>, w: &SignedMeasure<T>) -> Result<SignedMeasure<T>> {
    let extent = product_extent(v, w)?;
    let budget = product_budget(v, w);
    if v.is_empty() || w.is_empty() {
        return Ok(SignedMeasure::zero(v.dim).with_extra_budget(budget));
    }
    let atoms = accumulate(&v.atoms, &w.atoms, v.dim, &extent);
    Ok(SignedMeasure::from_sorted(v.dim, atoms, budget))
}

/// Convolution with the support of `V` split across the rayon pool.
///
/// Partial results are merged in a fixed order, so the output is
/// deterministic, but it agrees with [`convolve`] only up to floating point
/// reassociation (relative differences of order 1e-15).
pub fn convolve_par<T: Scalar>(v: &SignedMeasure<T>, w: &SignedMeasure<T>) -> Result<SignedMeasure<T>> {
    let extent = product_extent(v, w)?;
    let budget = product_budget(v, w);
    if v.is_empty() || w.is_empty() {
        return Ok(SignedMeasure::zero(v.dim).with_extra_budget(budget));
    }
    let chunk = v.atoms.len().div_ceil(rayon::current_num_threads().max(1)).max(1);
    let partials: Vec<Vec<(u64, T)>> = v
        .atoms
        .par_chunks(chunk)
        .map(|left| accumulate(left, &w.atoms, v.dim, &extent))
        .collect();
    let parts: Vec<SignedMeasure<T>> = partials
        .into_iter()
        .map(|a| SignedMeasure::from_sorted(v.dim, a, T::zero()))
        .collect();
    let terms: Vec<(T, &SignedMeasure<T>)> = parts.iter().map(|p| (T::one(), p)).collect();
    Ok(linear_combine(&terms)?.with_extra_budget(budget))
}

fn check_tol<T: Scalar>(tol: T) -> Result<()> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidTolerance(tol.as_f64()));
    }
    Ok(())
}

/// `exp(V) = Σ V^m / m!`, truncated with a certified norm tail `<= tol`.
///
/// The atom at the origin commutes with everything, so `exp(cδ_0 + W) =
/// e^c exp(W)` and only `W` is expanded. This keeps exponentials such as
/// `exp(λ(Q − δ_0))` free of cancellation. The truncation point `M` is the
/// first index with `e^c Σ_{m>M} ‖W‖^m/m! <= tol`.
pub fn exp_measure<T: Scalar>(v: &SignedMeasure<T>, tol: T) -> Result<SignedMeasure<T>> {
    check_tol(tol)?;
    let (c, mut w) = v.split_origin();
    let inherited = w.budget;
    w.budget = T::zero();
    let scale = c.exp();
    let r = w.tv_norm();

    let mut sum = dirac(&LatticePoint::origin(v.dim));
    let mut term = sum.clone();
    let mut m: u64 = 0;
    let tail = loop {
        if let Some(t) = exp_tail_bound(r, m) {
            if scale * t <= tol {
                break scale * t;
            }
        }
        if m >= MAX_SERIES_TERMS {
            return Err(Error::Divergent {
                norm: r.as_f64(),
                radius: f64::INFINITY,
            });
        }
        m += 1;
        term = convolve(&term, &w)?.scaled(T::one() / T::lit(m as f64));
        sum = sum.plus(&term)?;
    };
    // exp(V + E) − exp(V) = exp(V)(exp(E) − δ_0)
    let propagated = if inherited > T::zero() {
        (c + r).exp() * inherited.exp_m1()
    } else {
        T::zero()
    };
    Ok(sum.scaled(scale).with_extra_budget(tail + propagated))
}

/// A power series `Σ a_m z^m` together with what is needed to certify its
/// truncation: `ratio_bound(m) >= sup_{m' >= m} |a_{m'+1} / a_{m'}|`.
#[derive(Clone, Copy)]
pub struct SeriesSpec<T> {
    pub name: &'static str,
    pub coeff: fn(u64) -> T,
    pub ratio_bound: fn(u64) -> T,
    /// Radius of convergence (infinite for entire series).
    pub radius: T,
}

impl<T: Scalar> std::fmt::Debug for SeriesSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeriesSpec")
            .field("name", &self.name)
            .field("radius", &self.radius)
            .finish()
    }
}

fn exp_coeff<T: Scalar>(m: u64) -> T {
    T::one() / crate::scalar::factorial::<T>(m)
}

fn exp_ratio<T: Scalar>(m: u64) -> T {
    T::one() / T::lit((m + 1) as f64)
}

fn g_coeff<T: Scalar>(m: u64) -> T {
    // 2(m+1)/(m+2)! = 2 / ((m+2) m!)
    T::lit(2.0) / (T::lit((m + 2) as f64) * crate::scalar::factorial::<T>(m))
}

fn g_ratio<T: Scalar>(m: u64) -> T {
    let m = m as f64;
    T::lit((m + 2.0) / ((m + 1.0) * (m + 3.0)))
}

impl<T: Scalar> SeriesSpec<T> {
    /// The exponential series.
    pub fn exp() -> Self {
        SeriesSpec {
            name: "exp",
            coeff: exp_coeff::<T>,
            ratio_bound: exp_ratio::<T>,
            radius: T::infinity(),
        }
    }

    /// `g(z) = 2e^z (e^{-z} − 1 + z) / z² = 2 Σ_{m>=2} (m−1)/m! z^{m−2}`.
    pub fn g() -> Self {
        SeriesSpec {
            name: "g",
            coeff: g_coeff::<T>,
            ratio_bound: g_ratio::<T>,
            radius: T::infinity(),
        }
    }

    /// Sum of `|a_m| r^m` for `m <= cut`, plus a certified bound on the rest
    /// once the geometric majorant applies.
    fn abs_partial(&self, r: T, cut: u64) -> T {
        let mut s = T::zero();
        let mut pow = T::one();
        for m in 0..=cut {
            s += (self.coeff)(m).abs() * pow;
            pow = pow * r;
        }
        s
    }

    fn abs_tail(&self, r: T, cut: u64) -> Option<T> {
        let m = cut + 1;
        let rho = (self.ratio_bound)(m) * r;
        if rho >= T::one() {
            return None;
        }
        let first = (self.coeff)(m).abs() * r.powi(m as i32);
        Some(first / (T::one() - rho))
    }

    /// Certified upper bound on `Σ |a_m| r^m`.
    pub fn abs_sum_upper(&self, r: T, tol: T) -> Result<T> {
        if r >= self.radius {
            return Err(Error::Divergent {
                norm: r.as_f64(),
                radius: self.radius.as_f64(),
            });
        }
        for cut in 0..MAX_SERIES_TERMS {
            if let Some(t) = self.abs_tail(r, cut) {
                if t <= tol {
                    return Ok(self.abs_partial(r, cut) + t);
                }
            }
        }
        Err(Error::Divergent {
            norm: r.as_f64(),
            radius: self.radius.as_f64(),
        })
    }
}

/// `g(V) = Σ a_m V^m` truncated with a certified norm tail `<= tol`.
pub fn series_apply<T: Scalar>(s: &SeriesSpec<T>, v: &SignedMeasure<T>, tol: T) -> Result<SignedMeasure<T>> {
    check_tol(tol)?;
    let mut base = v.clone();
    let inherited = base.budget;
    base.budget = T::zero();
    let r = base.tv_norm();
    if r >= s.radius || (r + inherited) >= s.radius {
        return Err(Error::Divergent {
            norm: (r + inherited).as_f64(),
            radius: s.radius.as_f64(),
        });
    }
    let mut power = dirac(&LatticePoint::origin(v.dim));
    let mut sum = power.scaled((s.coeff)(0));
    let mut m: u64 = 0;
    let tail = loop {
        if let Some(t) = s.abs_tail(r, m) {
            if t <= tol {
                break t;
            }
        }
        if m >= MAX_SERIES_TERMS {
            return Err(Error::Divergent {
                norm: r.as_f64(),
                radius: s.radius.as_f64(),
            });
        }
        m += 1;
        power = convolve(&power, &base)?;
        sum = linear_combine(&[(T::one(), &sum), ((s.coeff)(m), &power)])?;
    };
    // ‖g(V+E) − g(V)‖ <= Σ|a_m|((r+b)^m − r^m)
    let propagated = if inherited > T::zero() {
        let upper = s.abs_sum_upper(r + inherited, tol)?;
        let lower = s.abs_partial(r, m);
        (upper - lower).max(T::zero())
    } else {
        T::zero()
    };
    Ok(sum.with_extra_budget(tail + propagated))
}

/// Removes atoms with `|w| < eps`, moving their absolute mass into the budget.
pub fn prune<T: Scalar>(v: &SignedMeasure<T>, eps: T) -> Result<SignedMeasure<T>> {
    if eps < T::zero() || eps.is_nan() {
        return Err(Error::InvalidArgument(format!("prune threshold {eps} is negative")));
    }
    if eps == T::zero() {
        return Ok(v.clone());
    }
    let mut dropped = T::zero();
    let kept: Vec<(u64, T)> = v
        .atoms
        .iter()
        .filter(|a| {
            if a.1.abs() < eps {
                dropped += a.1.abs();
                false
            } else {
                true
            }
        })
        .copied()
        .collect();
    Ok(SignedMeasure::from_sorted(v.dim, kept, v.budget + dropped))
}

/// Poisson(t) law on coordinate `r` of `ℤ₊^dim`, truncated with tail `<= tol`.
pub fn poisson_marginal<T: Scalar>(dim: usize, r: usize, t: T, tol: T) -> Result<SignedMeasure<T>> {
    check_tol(tol)?;
    check_dim(dim)?;
    if t < T::zero() {
        return Err(Error::InvalidArgument(format!("negative Poisson mean {t}")));
    }
    let (cut, tail) = poisson_cutoff(t, tol);
    if cut > coord_limit(dim) {
        return Err(Error::CoordinateOverflow {
            dim,
            limit: coord_limit(dim),
        });
    }
    let mut coords = vec![0u32; dim];
    let atoms = (0..=cut)
        .map(|m| {
            coords[r] = m as u32;
            (pack(&coords), poisson_mass(m, t))
        })
        .collect();
    Ok(SignedMeasure::from_sorted(dim, atoms, tail))
}

/// `⊗_r Po(λ_r) = exp(Σ_r λ_r(δ_{e_r} − δ_0))`, each marginal truncated with
/// tail `<= tol / d`.
pub fn poisson_product<T: Scalar>(lambdas: &[T], tol: T) -> Result<SignedMeasure<T>> {
    let dim = lambdas.len();
    check_dim(dim)?;
    check_tol(tol)?;
    let per = tol / T::from_count(dim);
    let mut acc = dirac(&LatticePoint::origin(dim));
    for (r, &t) in lambdas.iter().enumerate() {
        acc = convolve(&acc, &poisson_marginal(dim, r, t, per)?)?;
    }
    Ok(acc)
}

/// Number of atoms `poisson_product` would create.
pub fn poisson_product_size<T: Scalar>(lambdas: &[T], tol: T) -> u128 {
    let per = tol / T::from_count(lambdas.len().max(1));
    lambdas
        .iter()
        .map(|&t| poisson_cutoff(t, per).0 as u128 + 1)
        .fold(1u128, |a, b| a.saturating_mul(b))
}
