//! Measures with double-word weights `hi + lo`, for recursions whose terms
//! cancel heavily (Newton's identities on skewed models). Products use an
//! error-free `a·b = p + e` split via fused multiply-add and sums carry their
//! rounding error, so results keep roughly twice the working precision.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{box_index, box_key, box_layout, SignedMeasure, DENSE_CELLS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[inline]
fn two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod<T: Scalar>(a: T, b: T) -> (T, T) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[inline]
fn add_into<T: Scalar>(cell: &mut (T, T), hi: T, lo: T) {
    let (s, e) = two_sum(cell.0, hi);
    cell.0 = s;
    cell.1 += e + lo;
}

#[inline]
fn mul_dw<T: Scalar>(a: (T, T), b: (T, T)) -> (T, T) {
    let (p, e) = two_prod(a.0, b.0);
    (p, e + (a.0 * b.1 + a.1 * b.0))
}

#[inline]
fn normalize<T: Scalar>(x: (T, T)) -> (T, T) {
    two_sum(x.0, x.1)
}

#[derive(Debug, Clone)]
pub(crate) struct DwMeasure<T> {
    dim: usize,
    atoms: Vec<(u64, (T, T))>,
    extent: Vec<u32>,
    budget: T,
}

impl<T: Scalar> DwMeasure<T> {
    pub(crate) fn zero(dim: usize) -> Self {
        DwMeasure {
            dim,
            atoms: Vec::new(),
            extent: vec![0; dim],
            budget: T::zero(),
        }
    }

    pub(crate) fn from_measure(m: &SignedMeasure<T>) -> Self {
        DwMeasure {
            dim: m.dim,
            atoms: m.atoms.iter().map(|&(k, w)| (k, (w, T::zero()))).collect(),
            extent: m.extent.clone(),
            budget: m.budget,
        }
    }

    fn from_sorted(dim: usize, mut atoms: Vec<(u64, (T, T))>, budget: T) -> Self {
        atoms.retain(|a| a.1 .0 != T::zero() || a.1 .1 != T::zero());
        for a in &mut atoms {
            a.1 = normalize(a.1);
        }
        let mut extent = vec![0u32; dim];
        for &(k, _) in &atoms {
            for (e, c) in extent.iter_mut().zip(super::unpack(k, dim)) {
                *e = (*e).max(c);
            }
        }
        DwMeasure {
            dim,
            atoms,
            extent,
            budget,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.atoms.len()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub(crate) fn tv_norm(&self) -> T {
        self.atoms.iter().map(|a| (a.1 .0 + a.1 .1).abs()).sum()
    }

    /// Rounds each weight to working precision.
    pub(crate) fn rounded(&self) -> SignedMeasure<T> {
        let atoms = self.atoms.iter().map(|&(k, (h, l))| (k, h + l)).collect();
        SignedMeasure::from_sorted(self.dim, atoms, self.budget)
    }

    /// Drops atoms with `|w| < eps` into the budget.
    pub(crate) fn pruned(mut self, eps: T) -> Self {
        if eps <= T::zero() {
            return self;
        }
        let mut dropped = T::zero();
        self.atoms.retain(|a| {
            let w = (a.1 .0 + a.1 .1).abs();
            if w < eps {
                dropped += w;
                false
            } else {
                true
            }
        });
        self.budget += dropped;
        self
    }

    /// Divides every weight by the positive integer `k`.
    pub(crate) fn div_count(mut self, k: usize) -> Self {
        let kt = T::from_count(k);
        for a in &mut self.atoms {
            let (h, l) = a.1;
            let q1 = h / kt;
            let r = (-q1).mul_add(kt, h);
            let q2 = (r + l) / kt;
            a.1 = two_sum(q1, q2);
        }
        self.budget = self.budget / kt;
        self
    }
}

fn accumulate<T: Scalar>(
    left: &[(u64, (T, T))],
    w: &[(u64, (T, T))],
    dim: usize,
    extent: &[u32],
) -> Vec<(u64, (T, T))> {
    let layout = box_layout(extent);
    let pairs = (left.len() as u128) * (w.len() as u128);
    let zero = (T::zero(), T::zero());
    if layout.cells <= DENSE_CELLS && layout.cells <= pairs.saturating_mul(64).max(1 << 12) {
        let mut acc = vec![zero; layout.cells as usize];
        let wi: Vec<(usize, (T, T))> = w
            .iter()
            .map(|&(k, b)| (box_index(k, dim, &layout.strides) as usize, b))
            .collect();
        for &(k, a) in left {
            let base = box_index(k, dim, &layout.strides) as usize;
            for &(j, b) in &wi {
                let (p, e) = mul_dw(a, b);
                add_into(&mut acc[base + j], p, e);
            }
        }
        acc.into_iter()
            .enumerate()
            .filter(|(_, x)| x.0 != T::zero() || x.1 != T::zero())
            .map(|(i, x)| (box_key(i as u64, &layout.strides), x))
            .collect()
    } else {
        let mut acc: HashMap<u64, (T, T)> = HashMap::with_capacity(left.len().max(w.len()) * 4);
        for &(ka, a) in left {
            for &(kb, b) in w {
                let (p, e) = mul_dw(a, b);
                add_into(acc.entry(ka + kb).or_insert(zero), p, e);
            }
        }
        let mut out: Vec<(u64, (T, T))> = acc.into_iter().collect();
        out.sort_unstable_by_key(|a| a.0);
        out
    }
}

/// Merges sorted atom lists with signs `±1`, keeping the rounding error.
fn merge<T: Scalar>(terms: &[(bool, &[(u64, (T, T))])]) -> Vec<(u64, (T, T))> {
    let mut out = Vec::with_capacity(terms.iter().map(|t| t.1.len()).max().unwrap_or(0));
    let mut cursors = vec![0usize; terms.len()];
    loop {
        let mut next: Option<u64> = None;
        for (i, (_, atoms)) in terms.iter().enumerate() {
            if let Some(&(k, _)) = atoms.get(cursors[i]) {
                next = Some(next.map_or(k, |n: u64| n.min(k)));
            }
        }
        let Some(key) = next else { break };
        let mut acc = (T::zero(), T::zero());
        for (i, (neg, atoms)) in terms.iter().enumerate() {
            if let Some(&(k, (h, l))) = atoms.get(cursors[i]) {
                if k == key {
                    if *neg {
                        add_into(&mut acc, -h, -l);
                    } else {
                        add_into(&mut acc, h, l);
                    }
                    cursors[i] += 1;
                }
            }
        }
        out.push((key, acc));
    }
    out
}

/// `Σ ±V_i`, the sign being negative where the flag is set.
pub(crate) fn signed_sum<T: Scalar>(dim: usize, terms: &[(bool, &DwMeasure<T>)]) -> Result<DwMeasure<T>> {
    for (_, v) in terms {
        if v.dim != dim {
            return Err(Error::DimensionMismatch(dim, v.dim));
        }
    }
    let budget = terms.iter().map(|t| t.1.budget).sum();
    let lists: Vec<(bool, &[(u64, (T, T))])> = terms.iter().map(|(n, v)| (*n, v.atoms.as_slice())).collect();
    Ok(DwMeasure::from_sorted(dim, merge(&lists), budget))
}

/// Convolution with the same budget rule as [`super::convolve`].
pub(crate) fn convolve_dw<T: Scalar>(v: &DwMeasure<T>, w: &DwMeasure<T>, parallel: bool) -> Result<DwMeasure<T>> {
    if v.dim != w.dim {
        return Err(Error::DimensionMismatch(v.dim, w.dim));
    }
    let limit = super::coord_limit(v.dim);
    let extent = v
        .extent
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
        .collect::<Result<Vec<u32>>>()?;
    let budget = v.budget * w.tv_norm() + w.budget * v.tv_norm() + v.budget * w.budget;
    if v.is_empty() || w.is_empty() {
        let mut z = DwMeasure::zero(v.dim);
        z.budget = budget;
        return Ok(z);
    }
    let atoms = if parallel && v.atoms.len() > 1 {
        let chunk = v.atoms.len().div_ceil(rayon::current_num_threads().max(1)).max(1);
        let partials: Vec<Vec<(u64, (T, T))>> = v
            .atoms
            .par_chunks(chunk)
            .map(|left| accumulate(left, &w.atoms, v.dim, &extent))
            .collect();
        let lists: Vec<(bool, &[(u64, (T, T))])> = partials.iter().map(|p| (false, p.as_slice())).collect();
        merge(&lists)
    } else {
        accumulate(&v.atoms, &w.atoms, v.dim, &extent)
    };
    Ok(DwMeasure::from_sorted(v.dim, atoms, budget))
}
