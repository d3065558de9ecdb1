//! Charlier polynomials and the smoothness inequalities for norms of the form
//! `‖(Π_j R_j) G‖` with `R_j = Σ_r p_{j,r} W_r`, `W_r = δ_{e_r} − δ_0` and
//! `G = exp(Σ_r λ_r W_r)`.

use num_traits::{FromPrimitive, Num};
use serde::Serialize;

use crate::bounds::{d_k, split_constant};
use crate::error::{Error, Result};
use crate::measure::{
    convolve, dirac, exp_measure, linear_combine, poisson_product, poisson_product_size, unit_step, LatticePoint,
    SignedMeasure,
};
use crate::scalar::{factorial, ln_factorial, Scalar};
use crate::special::poisson_mass;

/// `po(m, t) = e^{−t} t^m / m!`, zero for negative `m`.
pub fn poisson_pmf<T: Scalar>(m: i64, t: T) -> Result<T> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("Poisson mean must be nonnegative, got {t}")));
    }
    if m < 0 {
        return Ok(T::zero());
    }
    Ok(poisson_mass(m as u64, t))
}

/// `Σ_{i=0}^{j} C(j,i) C(x,i) i! (−t)^{j−i}` in any numeric type (no sign
/// check on `t`, so exact rationals work too).
pub fn charlier_poly<N: Num + Clone + FromPrimitive>(j: u32, x: &N, t: &N) -> N {
    let mut sum = N::zero();
    // C(j, i) and the falling factorial x(x−1)…(x−i+1) built incrementally
    let mut binom = N::one();
    let mut falling = N::one();
    for i in 0..=j {
        let mut term = binom.clone() * falling.clone();
        for _ in 0..(j - i) {
            term = term * (N::zero() - t.clone());
        }
        sum = sum + term;
        if i < j {
            let i_n = N::from_u32(i).expect("small integer");
            binom = binom * N::from_u32(j - i).expect("small integer") / N::from_u32(i + 1).expect("small integer");
            falling = falling * (x.clone() - i_n);
        }
    }
    sum
}

/// Charlier polynomial `Ch(j, x, t)`, `t > 0`.
pub fn charlier<T: Scalar>(j: u32, x: T, t: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("Charlier parameter must be positive, got {t}")));
    }
    Ok(charlier_poly(j, &x, &t))
}

/// `Δ^j po(m, t)` from the recursion `Δ^j po(m) = Δ^{j−1}po(m−1) − Δ^{j−1}po(m)`,
/// i.e. `Σ_i (−1)^i C(j,i) po(m−j+i, t)`.
pub fn delta_pow<T: Scalar>(j: u32, m: i64, t: T) -> Result<T> {
    let mut s = T::zero();
    let mut binom = T::one();
    for i in 0..=j {
        let term = binom * poisson_pmf(m - j as i64 + i as i64, t)?;
        s += if i % 2 == 0 { term } else { -term };
        binom = binom * T::from_count((j - i) as usize) / T::from_count(i as usize + 1);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    pub i: u32,
    pub j: u32,
    pub t: f64,
    pub cutoff: u64,
    pub sum: f64,
    pub expected: f64,
    /// Certified bound on the discarded terms `m > cutoff`.
    pub tail_bound: f64,
    /// Allowance for rounding in the partial sum.
    pub rounding: f64,
    pub holds: bool,
}

/// Certified bound on `Σ_{m>M} po(m,t)(m+t)^s`, which majorizes the tail of
/// `Σ po·|Ch_i·Ch_j|` for `s = i + j` (as `|Ch(j,m,t)| <= (m+t)^j`).
fn weighted_poisson_tail(t: f64, s: u32, cut: u64) -> Option<f64> {
    let m = cut + 1;
    // term ratio a_{m+1}/a_m = t/(m+1) · ((m+1+t)/(m+t))^s decreases in m
    let rho = t / (m + 1) as f64 * (1.0 + 1.0 / (m as f64 + t)).powi(s as i32);
    if rho >= 1.0 {
        return None;
    }
    let first = poisson_mass(m, t) * (m as f64 + t).powi(s as i32);
    Some(first / (1.0 - rho))
}

/// Check `Σ_m po(m,t) Ch(i,m,t) Ch(j,m,t) = 1{i=j} i! t^i`, truncating once the
/// certified tail falls below `tol`.
pub fn verify_orthogonality(i: u32, j: u32, t: f64, tol: f64) -> Result<OrthogonalityReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("Charlier parameter must be positive, got {t}")));
    }
    let mut cut = 0u64;
    let tail = loop {
        if let Some(b) = weighted_poisson_tail(t, i + j, cut) {
            if b <= tol {
                break b;
            }
        }
        cut += 1;
        if cut > 100_000 {
            return Err(Error::InvalidArgument("orthogonality cutoff did not settle".into()));
        }
    };
    let mut sum = 0.0;
    let mut abs = 0.0;
    for m in 0..=cut {
        let term = poisson_mass(m, t) * charlier_poly(i, &(m as f64), &t) * charlier_poly(j, &(m as f64), &t);
        sum += term;
        abs += term.abs();
    }
    let expected = if i == j {
        factorial::<f64>(i as u64) * t.powi(i as i32)
    } else {
        0.0
    };
    let rounding = 64.0 * f64::EPSILON * (abs + expected.abs()) * (i + j + 1) as f64;
    Ok(OrthogonalityReport {
        i,
        j,
        t,
        cutoff: cut,
        sum,
        expected,
        tail_bound: tail,
        rounding,
        holds: (sum - expected).abs() <= tail + rounding,
    })
}

/// Coefficients `p_{j,r}` (`k × d`) and intensities `λ_r > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessInstance<T> {
    coeff: Vec<Vec<T>>,
    lambda: Vec<T>,
}

impl<T: Scalar> SmoothnessInstance<T> {
    pub fn new(coeff: Vec<Vec<T>>, lambda: Vec<T>) -> Result<Self> {
        let d = lambda.len();
        if coeff.is_empty() || d == 0 {
            return Err(Error::InvalidArgument("need k >= 1 and d >= 1".into()));
        }
        if let Some(row) = coeff.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(d, row.len()));
        }
        if lambda.iter().any(|&l| !(l > T::zero()) || !l.is_finite()) {
            return Err(Error::InvalidArgument("intensities must be positive".into()));
        }
        if coeff.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        Ok(SmoothnessInstance { coeff, lambda })
    }

    pub fn k(&self) -> usize {
        self.coeff.len()
    }

    pub fn d(&self) -> usize {
        self.lambda.len()
    }

    pub fn coeff(&self) -> &[Vec<T>] {
        &self.coeff
    }

    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    /// `p_j = Σ_r |p_{j,r}|`.
    pub fn p_abs(&self, j: usize) -> T {
        self.coeff[j].iter().map(|x| x.abs()).sum()
    }

    /// `Σ_r p_{j,r}²/λ_r`.
    fn sq_over_lambda(&self, j: usize) -> T {
        self.coeff[j].iter().zip(&self.lambda).map(|(&x, &l)| x * x / l).sum()
    }

    /// `R_j = Σ_r p_{j,r} W_r`.
    pub fn r_measure(&self, j: usize) -> Result<SignedMeasure<T>> {
        let d = self.d();
        let steps: Vec<SignedMeasure<T>> = (0..d).map(|r| unit_step(d, r)).collect();
        let terms: Vec<(T, &SignedMeasure<T>)> = self.coeff[j].iter().copied().zip(steps.iter()).collect();
        linear_combine(&terms)
    }
}

/// A norm computed from a truncated measure: the exact value lies in
/// `value ± budget`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate<T> {
    pub value: T,
    pub budget: T,
}

fn g_measure<T: Scalar>(lambda: &[T], tol: T, cap: usize) -> Result<SignedMeasure<T>> {
    let predicted = poisson_product_size(lambda, tol);
    if predicted > cap as u128 {
        return Err(Error::ResourceCap {
            predicted,
            cap: cap as u128,
        });
    }
    poisson_product(lambda, tol)
}

/// Atom cap for the Poisson factor `G` in smoothness computations.
pub const SMOOTHNESS_SUPPORT_CAP: usize = 2_000_000;

/// `‖(Π_j R_j) G‖`, or `‖(Π_j R_j²) G‖` when `squares` is set.
pub fn norm_product_exact<T: Scalar>(inst: &SmoothnessInstance<T>, squares: bool, tol: T) -> Result<NormEstimate<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidTolerance(tol.as_f64()));
    }
    let d = inst.d();
    let mut prod = dirac(&LatticePoint::origin(d));
    for j in 0..inst.k() {
        let r = inst.r_measure(j)?;
        prod = convolve(&prod, &r)?;
        if squares {
            prod = convolve(&prod, &r)?;
        }
    }
    if prod.is_empty() {
        return Ok(NormEstimate {
            value: T::zero(),
            budget: T::zero(),
        });
    }
    let g = g_measure(inst.lambda(), tol, SMOOTHNESS_SUPPORT_CAP)?;
    let out = convolve(&prod, &g)?;
    Ok(NormEstimate {
        value: out.tv_norm(),
        budget: out.budget(),
    })
}

/// Largest `k` accepted by [`middle_41`].
pub const MIDDLE_MAX_K: usize = 6;

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// `(1/k! Σ_{r∈[d]^k} (Σ_σ Π_j p_{j,r_{σ(j)}}/√λ_{r_{σ(j)}})²)^{1/2}` by
/// enumeration over `[d]^k` and all permutations `σ` (`k <= 6`).
pub fn middle_41<T: Scalar>(inst: &SmoothnessInstance<T>) -> Result<T> {
    let k = inst.k();
    let d = inst.d();
    if k > MIDDLE_MAX_K {
        return Err(Error::InvalidArgument(format!("enumeration form needs k <= {MIDDLE_MAX_K}, got {k}")));
    }
    let scaled: Vec<Vec<T>> = inst
        .coeff()
        .iter()
        .map(|row| row.iter().zip(inst.lambda()).map(|(&x, &l)| x / l.sqrt()).collect())
        .collect();
    let perms = permutations(k);
    let mut r = vec![0usize; k];
    let mut total = T::zero();
    loop {
        let inner: T = perms
            .iter()
            .map(|sigma| {
                (0..k).fold(T::one(), |acc, j| acc * scaled[j][r[sigma[j]]])
            })
            .sum();
        total += inner * inner;
        // next multi-index in [d]^k
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok((total / factorial::<T>(k as u64)).sqrt());
            }
            r[pos] += 1;
            if r[pos] < d {
                break;
            }
            r[pos] = 0;
            pos += 1;
        }
    }
}

/// `√(k!) Π_j (Σ_r p_{j,r}²/λ_r)^{1/2}`.
pub fn right_41<T: Scalar>(inst: &SmoothnessInstance<T>) -> T {
    let prod = (0..inst.k()).fold(T::one(), |acc, j| acc * inst.sq_over_lambda(j));
    (factorial::<T>(inst.k() as u64) * prod).sqrt()
}

/// Per-factor split parameters `u ∈ [0,½]^k`, `v, w ∈ (0,∞)^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitParams<T> {
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub w: Vec<T>,
}

impl<T: Scalar> SplitParams<T> {
    pub fn uniform(k: usize, u: T, v: T, w: T) -> Self {
        SplitParams {
            u: vec![u; k],
            v: vec![v; k],
            w: vec![w; k],
        }
    }

    fn check(&self, k: usize) -> Result<()> {
        if self.u.len() != k || self.v.len() != k || self.w.len() != k {
            return Err(Error::DimensionMismatch(k, self.u.len().min(self.v.len()).min(self.w.len())));
        }
        let half = T::lit(0.5);
        if self.u.iter().any(|&u| !(u >= T::zero() && u <= half)) {
            return Err(Error::InvalidArgument("split parameter u must lie in [0, 1/2]".into()));
        }
        if self.v.iter().chain(&self.w).any(|&x| !(x > T::zero()) || !x.is_finite()) {
            return Err(Error::InvalidArgument("split parameters v, w must be positive".into()));
        }
        Ok(())
    }
}

/// `Π_j C_j Σ_r |p_{j,r}| min{|p_{j,r}|/λ_r, 4p_j/w_j}` with
/// `C_j = max{c_k + c_k′u_j/v_j, (2(1−u_j) + c_k′u_jv_j)w_j}`.
pub fn bound_44<T: Scalar>(inst: &SmoothnessInstance<T>, params: &SplitParams<T>) -> Result<T> {
    let k = inst.k();
    params.check(k)?;
    let mut out = T::one();
    for j in 0..k {
        let c = T::lit(split_constant(
            k as u64,
            params.u[j].as_f64(),
            params.v[j].as_f64(),
            params.w[j].as_f64(),
        ));
        let cap = T::lit(4.0) * inst.p_abs(j) / params.w[j];
        let s: T = inst.coeff()[j]
            .iter()
            .zip(inst.lambda())
            .map(|(&x, &l)| x.abs() * (x.abs() / l).min(cap))
            .sum();
        out = out * c * s;
    }
    Ok(out)
}

/// `D_k k! Π_j Σ_r |p_{j,r}| min{|p_{j,r}|/λ_r, p_j}`.
pub fn bound_45<T: Scalar>(inst: &SmoothnessInstance<T>) -> T {
    let k = inst.k();
    let mut out = T::lit(d_k(k as u64)) * factorial::<T>(k as u64);
    for j in 0..k {
        let pj = inst.p_abs(j);
        let s: T = inst.coeff()[j]
            .iter()
            .zip(inst.lambda())
            .map(|(&x, &l)| x.abs() * (x.abs() / l).min(pj))
            .sum();
        out = out * s;
    }
    out
}

/// `f(x) = x log(1 + 1/(x−1)) − 1` for `x > 1`.
pub fn f_log(x: f64) -> f64 {
    x * (1.0 / (x - 1.0)).ln_1p() - 1.0
}

/// `f(x) = ∫_0^1 t/(x−t) dt` by the midpoint rule with `points` nodes.
pub fn f_integral(x: f64, points: usize) -> f64 {
    let h = 1.0 / points as f64;
    (0..points)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            t / (x - t)
        })
        .sum::<f64>()
        * h
}

/// Constants of the single-factor estimate for given `(u, v, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleFactorConstants {
    /// `C = max{(√2 + u/v)(2/w), 4(1−u) + 2uv}`.
    pub c: f64,
    /// Unique `w₀ > 1` with `f(w₀) = 2/w`.
    pub w0: f64,
}

pub fn single_factor_constants(u: f64, v: f64, w: f64) -> Result<SingleFactorConstants> {
    if !(0.0..=0.5).contains(&u) || !(v > 0.0) || !(w > 0.0) {
        return Err(Error::InvalidArgument("need u in [0, 1/2] and v, w > 0".into()));
    }
    let c = ((2f64.sqrt() + u / v) * (2.0 / w)).max(4.0 * (1.0 - u) + 2.0 * u * v);
    let target = 2.0 / w;
    // f decreases from +∞ at 1 to 0 at ∞
    let mut lo = 1.0 + 1e-14;
    if f_log(lo) <= target {
        return Err(Error::Bracket(format!("f stays below {target} on (1, ∞)")));
    }
    let mut hi = 2.0;
    while f_log(hi) > target {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Bracket(format!("no solution of f(x) = {target}")));
        }
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f_log(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SingleFactorConstants { c, w0: 0.5 * (lo + hi) })
}

/// Published constant of the single-factor estimate.
pub const SINGLE_FACTOR_CONSTANT: f64 = 3.11;

/// `3.11 Σ_r p_r min{p_r/λ_r, p}` with `p = Σ_r p_r`.
pub fn bound_46<T: Scalar>(probs: &[T], lambda: &[T]) -> Result<T> {
    check_single_factor(probs, lambda)?;
    let p: T = probs.iter().copied().sum();
    Ok(T::lit(SINGLE_FACTOR_CONSTANT)
        * probs
            .iter()
            .zip(lambda)
            .map(|(&x, &l)| x * (x / l).min(p))
            .sum::<T>())
}

/// `C Σ_r p_r min{w₀ p_r/λ_r, p}` for general `(u, v, w)`.
pub fn bound_46_general<T: Scalar>(probs: &[T], lambda: &[T], u: f64, v: f64, w: f64) -> Result<T> {
    check_single_factor(probs, lambda)?;
    let k = single_factor_constants(u, v, w)?;
    let p: T = probs.iter().copied().sum();
    let w0 = T::lit(k.w0);
    Ok(T::lit(k.c)
        * probs
            .iter()
            .zip(lambda)
            .map(|(&x, &l)| x * (w0 * x / l).min(p))
            .sum::<T>())
}

fn check_single_factor<T: Scalar>(probs: &[T], lambda: &[T]) -> Result<()> {
    if probs.len() != lambda.len() || probs.is_empty() {
        return Err(Error::DimensionMismatch(probs.len(), lambda.len()));
    }
    let p: T = probs.iter().copied().sum();
    if p > T::one() || probs.iter().any(|&x| !(x >= T::zero())) {
        return Err(Error::InvalidArgument("need p_r >= 0 with sum at most 1".into()));
    }
    if probs.iter().zip(lambda).any(|(&x, &l)| !(l > T::zero()) || l < x) {
        return Err(Error::InvalidArgument("need λ_r > 0 and λ_r >= p_r".into()));
    }
    Ok(())
}

/// `‖((δ_0 + R)e^{−R} − δ_0) G‖` for `R = Σ_r p_r W_r`.
pub fn single_factor_norm<T: Scalar>(probs: &[T], lambda: &[T], tol: T) -> Result<NormEstimate<T>> {
    check_single_factor(probs, lambda)?;
    let inst = SmoothnessInstance::new(vec![probs.to_vec()], lambda.to_vec())?;
    let d = inst.d();
    let r = inst.r_measure(0)?;
    let origin = dirac(&LatticePoint::origin(d));
    let e = exp_measure(&r.scaled(-T::one()), tol)?;
    let v = convolve(&origin.plus(&r)?, &e)?.minus(&origin)?;
    let g = g_measure(lambda, tol, SMOOTHNESS_SUPPORT_CAP)?;
    let out = convolve(&v, &g)?;
    Ok(NormEstimate {
        value: out.tv_norm(),
        budget: out.budget(),
    })
}

/// Both sides of `(2m₁+m₂)! <= ((2k)!)^{m₁/k} ((2k−1)!)^{m₂/(2k)}` in log form.
pub fn factorial_inequality(k: u64, m1: u64, m2: u64) -> Result<(f64, f64)> {
    if k == 0 || m1 + m2 > k {
        return Err(Error::InvalidArgument(format!("need k >= 1 and m1 + m2 <= k, got k={k}, m=({m1},{m2})")));
    }
    let lhs = ln_factorial::<f64>(2 * m1 + m2);
    let rhs = ln_factorial::<f64>(2 * k) * m1 as f64 / k as f64 + ln_factorial::<f64>(2 * k - 1) * m2 as f64 / (2 * k) as f64;
    Ok((lhs, rhs))
}
