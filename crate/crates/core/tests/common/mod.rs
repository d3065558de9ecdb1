//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's measure algebra.

#![allow(dead_code)]

use cpa::model::ModelSpec;

/// Dense array over the box `[0, dims[0]) × … × [0, dims[d−1])`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(dims: Vec<usize>) -> Self {
        let len = dims.iter().product();
        Dense { dims, data: vec![0.0; len] }
    }

    pub fn delta0(d: usize) -> Self {
        let mut z = Dense::zeros(vec![1; d]);
        z.data[0] = 1.0;
        z
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn index(&self, c: &[usize]) -> Option<usize> {
        let mut idx = 0;
        for (&x, &n) in c.iter().zip(&self.dims).rev() {
            if x >= n {
                return None;
            }
            idx = idx * n + x;
        }
        Some(idx)
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.d()];
        for (r, &n) in self.dims.iter().enumerate() {
            c[r] = idx % n;
            idx /= n;
        }
        c
    }

    pub fn get(&self, c: &[usize]) -> f64 {
        self.index(c).map_or(0.0, |i| self.data[i])
    }

    pub fn add_at(&mut self, c: &[usize], v: f64) {
        let i = self.index(c).expect("inside the box");
        self.data[i] += v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn mass(&self) -> f64 {
        self.data.iter().sum()
    }

    /// For every cell: its index in a box of `target` dims (which must
    /// contain this one) and its total degree.
    fn layout(&self, target: &[usize]) -> Vec<(usize, usize)> {
        let mut strides = vec![1; target.len()];
        for r in 1..target.len() {
            strides[r] = strides[r - 1] * target[r - 1];
        }
        let mut c = vec![0usize; self.d()];
        let mut out = Vec::with_capacity(self.data.len());
        for _ in 0..self.data.len() {
            let idx = c.iter().zip(&strides).map(|(x, s)| x * s).sum();
            out.push((idx, c.iter().sum()));
            for r in 0..c.len() {
                c[r] += 1;
                if c[r] < self.dims[r] {
                    break;
                }
                c[r] = 0;
            }
        }
        out
    }

    /// Nonzero cells as (index in `target`, degree, value), by degree.
    fn nonzeros(&self, target: &[usize], cap: usize) -> Vec<(usize, usize, f64)> {
        let lay = self.layout(target);
        let mut v: Vec<_> = (0..self.data.len())
            .filter(|&i| self.data[i] != 0.0 && lay[i].1 <= cap)
            .map(|i| (lay[i].0, lay[i].1, self.data[i]))
            .collect();
        v.sort_by_key(|e| e.1);
        v
    }

    /// Product keeping total degree `<= cap`.
    pub fn mul(&self, other: &Dense, cap: usize) -> Dense {
        let full: Vec<usize> = self.dims.iter().zip(&other.dims).map(|(a, b)| a + b - 1).collect();
        let a = self.nonzeros(&full, cap);
        let b = other.nonzeros(&full, cap);
        let mut wide = Dense::zeros(full);
        for &(ia, da, va) in &a {
            for &(ib, db, vb) in &b {
                if da + db > cap {
                    break;
                }
                wide.data[ia + ib] += va * vb;
            }
        }
        let dims: Vec<usize> = wide.dims.iter().map(|&n| n.min(cap + 1)).collect();
        wide.shrink(dims)
    }

    /// Restriction to a smaller box.
    fn shrink(&self, dims: Vec<usize>) -> Dense {
        if dims == self.dims {
            return self.clone();
        }
        let mut out = Dense::zeros(dims);
        let lay = out.layout(&self.dims);
        for (o, (i, _)) in out.data.iter_mut().zip(lay) {
            *o = self.data[i];
        }
        out
    }

    pub fn plus(&self, other: &Dense, scale: f64) -> Dense {
        let dims: Vec<usize> = self.dims.iter().zip(&other.dims).map(|(a, b)| *a.max(b)).collect();
        let mut out = Dense::zeros(dims);
        for (i, (idx, _)) in self.layout(&out.dims).into_iter().enumerate() {
            out.data[idx] += self.data[i];
        }
        for (i, (idx, _)) in other.layout(&out.dims).into_iter().enumerate() {
            out.data[idx] += scale * other.data[i];
        }
        out
    }

    /// Convolution with a kernel along one axis.
    pub fn conv_axis(&self, axis: usize, kernel: &[f64]) -> Dense {
        let mut dims = self.dims.clone();
        dims[axis] = self.dims[axis] + kernel.len() - 1;
        let mut out = Dense::zeros(dims);
        let stride: usize = out.dims[..axis].iter().product();
        for (i, (idx, _)) in self.layout(&out.dims).into_iter().enumerate() {
            let v = self.data[i];
            if v == 0.0 {
                continue;
            }
            for (m, &k) in kernel.iter().enumerate() {
                out.data[idx + m * stride] += v * k;
            }
        }
        out
    }
}

/// `Σ|a − b|` over the union of both boxes.
pub fn norm_diff(a: &Dense, b: &Dense) -> f64 {
    a.plus(b, -1.0).norm()
}

fn ln_fact(m: usize) -> f64 {
    (1..=m).map(|i| (i as f64).ln()).sum()
}

/// Poisson pmf on `0..len` by the direct formula, and a bound on the mass
/// left out.
pub fn poisson_head(t: f64, drop: f64) -> (Vec<f64>, f64) {
    if t == 0.0 {
        return (vec![1.0], 0.0);
    }
    let mut v = Vec::new();
    let mut m = 0usize;
    loop {
        let x = (-t + m as f64 * t.ln() - ln_fact(m)).exp();
        v.push(x);
        m += 1;
        // remaining terms shrink at least geometrically with ratio t/(m+1)
        let rho = t / (m + 1) as f64;
        if rho < 0.5 {
            let next = x * t / m as f64;
            let rest = next / (1.0 - rho);
            if rest < drop {
                return (v, rest);
            }
        }
    }
}

/// `a ∗ ⊗_r Po(λ_r)` together with a bound on the norm that was cut off.
pub fn conv_poisson(a: &Dense, lambda: &[f64]) -> (Dense, f64) {
    let mut out = a.clone();
    let mut kept = 1.0;
    for (r, &l) in lambda.iter().enumerate() {
        let (pmf, rest) = poisson_head(l, 1e-17);
        kept *= 1.0 - rest;
        out = out.conv_axis(r, &pmf);
    }
    let err = a.norm() * (1.0 - kept) + 1e-15 * a.norm();
    (out, err)
}

/// Law of `Σ_j X_j` by enumerating all `(d+1)^n` outcomes.
pub fn brute_force_f(spec: &ModelSpec<f64>) -> Dense {
    let n = spec.n();
    let d = spec.d();
    let mut out = Dense::zeros(vec![n + 1; d]);
    let mut choice = vec![0usize; n];
    loop {
        let mut w = 1.0;
        let mut c = vec![0usize; d];
        for j in 0..n {
            if choice[j] == 0 {
                w *= 1.0 - spec.p()[j];
            } else {
                w *= spec.p()[j] * spec.q()[j][choice[j] - 1];
                c[choice[j] - 1] += 1;
            }
        }
        if w != 0.0 {
            out.add_at(&c, w);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return out;
            }
            choice[pos] += 1;
            if choice[pos] <= d {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Multi-indices of `[0, ∞)^d` with total degree `<= cap`.
fn simplex(d: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for c in &out {
            let used: usize = c.iter().sum();
            for x in 0..=(cap - used) {
                let mut e = c.clone();
                e.push(x);
                next.push(e);
            }
        }
        out = next;
    }
    out
}

/// `(δ_0 + R)e^{−R} − δ_0` for `R = p(Q − δ_0)` from its closed-form
/// coefficients `e^p c(m)(1 − p − |m|)` with `c(m) = Π_r (−p q_r)^{m_r}/m_r!`,
/// up to total degree `cap`.
pub fn closed_form_v(p: f64, q: &[f64], cap: usize) -> Dense {
    let d = q.len();
    let mut out = Dense::zeros(vec![cap + 1; d]);
    let ep = p.exp();
    for m in simplex(d, cap) {
        let deg: usize = m.iter().sum();
        let v = if deg == 0 {
            // e^p(1 − p) − 1 = −Σ_{i>=2} (i−1) p^i / i!
            let mut s = 0.0;
            let mut term = 1.0;
            for i in 1..60 {
                term *= p / i as f64;
                if i >= 2 {
                    s -= (i - 1) as f64 * term;
                }
            }
            s
        } else {
            let c: f64 = m
                .iter()
                .zip(q)
                .map(|(&k, &qr)| (-p * qr).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>())
                .product();
            ep * c * (1.0 - p - deg as f64)
        };
        out.add_at(&m, v);
    }
    out
}

/// Upper bound on the absolute mass of that measure at total degree `s`.
pub fn v_degree_bound(p: f64, s: usize) -> f64 {
    let a = (s as f64 * p.ln() - ln_fact(s)).exp();
    let b = if s == 0 { 0.0 } else { (s as f64 * p.ln() - ln_fact(s - 1)).exp() };
    let base = if p == 0.0 {
        if s == 0 { 1.0 } else { 0.0 }
    } else {
        p.exp() * (a + b)
    };
    base + if s == 0 { 1.0 } else { 0.0 }
}

const TAIL_LEN: usize = 600;

fn conv1(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; TAIL_LEN];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate().take(TAIL_LEN - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Elementary symmetric sum `M_k = Σ_{|S|=k} Π_{j∈S} V_j` by subset
/// enumeration up to total degree `cap`, with a bound on the norm beyond.
pub fn subset_m(spec: &ModelSpec<f64>, k: usize, cap: usize) -> (Dense, f64) {
    let d = spec.d();
    let vs: Vec<Dense> = (0..spec.n())
        .map(|j| closed_form_v(spec.p()[j], &spec.q()[j], cap))
        .collect();
    let bounds: Vec<Vec<f64>> = (0..spec.n())
        .map(|j| (0..TAIL_LEN).map(|s| v_degree_bound(spec.p()[j], s)).collect())
        .collect();
    let mut total = Dense::zeros(vec![1; d]);
    let mut tail = 0.0;
    for s in subsets(spec.n(), k) {
        let mut prod = Dense::delta0(d);
        let mut deg = vec![0.0; TAIL_LEN];
        deg[0] = 1.0;
        for &j in &s {
            prod = prod.mul(&vs[j], cap);
            deg = conv1(&deg, &bounds[j]);
        }
        tail += deg[cap + 1..].iter().sum::<f64>();
        total = total.plus(&prod, 1.0);
    }
    (total, tail)
}

/// `G_ℓ` with a bound on the norm it misses.
pub fn oracle_g_ell(spec: &ModelSpec<f64>, ell: usize, cap: usize) -> (Dense, f64) {
    let mut s = Dense::delta0(spec.d());
    let mut tail = 0.0;
    for k in 1..=ell {
        let (m, t) = subset_m(spec, k, cap);
        s = s.plus(&m, 1.0);
        tail += t;
    }
    let (g, err) = conv_poisson(&s, spec.lambda_r());
    (g, err + tail)
}

/// `‖F − G_ℓ‖` and the oracle's own error bound, for `ℓ = 0..=ell_max`.
pub fn oracle_tv(spec: &ModelSpec<f64>, ell_max: usize, cap: usize) -> Vec<(f64, f64)> {
    let f = brute_force_f(spec);
    let mut s = Dense::delta0(spec.d());
    let mut tail = 0.0;
    let mut out = Vec::new();
    for k in 0..=ell_max {
        if k > 0 {
            let (m, t) = subset_m(spec, k, cap);
            s = s.plus(&m, 1.0);
            tail += t;
        }
        let (g, err) = conv_poisson(&s, spec.lambda_r());
        out.push((norm_diff(&f, &g), err + tail + 1e-14));
    }
    out
}

/// `‖·‖` distance between a library measure and a dense oracle.
pub fn distance_to(lib: &cpa::SignedMeasure, oracle: &Dense) -> f64 {
    let mut oracle_abs_matched = 0.0;
    let mut diff = 0.0;
    for (pt, w) in lib.iter() {
        let c: Vec<usize> = pt.coords().iter().map(|&x| x as usize).collect();
        let o = oracle.get(&c);
        diff += (w - o).abs();
        oracle_abs_matched += o.abs();
    }
    diff + (oracle.norm() - oracle_abs_matched).max(0.0)
}

/// `Π_j R_j` (or `Π_j R_j²`) for `R_j = Σ_r p_{j,r}(δ_{e_r} − δ_0)`.
pub fn product_r(coeff: &[Vec<f64>], squares: bool) -> Dense {
    let d = coeff[0].len();
    let big = 2 * coeff.len() + 1;
    let mut prod = Dense::delta0(d);
    for row in coeff {
        let mut r = Dense::zeros(vec![2; d]);
        for (i, &x) in row.iter().enumerate() {
            let mut e = vec![0; d];
            r.add_at(&e, -x);
            e[i] = 1;
            r.add_at(&e, x);
        }
        prod = prod.mul(&r, big);
        if squares {
            prod = prod.mul(&r, big);
        }
    }
    prod
}

/// Permanent by Ryser's formula.
pub fn permanent(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut prod = 1.0;
        for row in a {
            let s: f64 = (0..n).filter(|&c| mask & (1 << c) != 0).map(|c| row[c]).sum();
            prod *= s;
        }
        let sign = if (n - mask.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * prod;
    }
    total
}

/// The middle expression of the product-norm chain via permanents.
pub fn middle_by_permanents(coeff: &[Vec<f64>], lambda: &[f64]) -> f64 {
    let k = coeff.len();
    let d = lambda.len();
    let mut r = vec![0usize; k];
    let mut total = 0.0;
    loop {
        let a: Vec<Vec<f64>> = (0..k)
            .map(|j| r.iter().map(|&c| coeff[j][c] / lambda[c].sqrt()).collect())
            .collect();
        let p = permanent(&a);
        total += p * p;
        let mut pos = 0;
        loop {
            if pos == k {
                let kf: f64 = (1..=k).map(|i| i as f64).product();
                return (total / kf).sqrt();
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
