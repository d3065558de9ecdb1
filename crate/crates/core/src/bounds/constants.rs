//! Constants of the order-`ℓ` `β₁` bound: `D_k`, `D_k′`, `x_ℓ`, `c_ℓ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::ln_factorial;

use super::g_scalar;

/// Split parameters `(u, v)` for `k = 1..=9`; `w = 4` throughout.
pub const SPLIT_PARAMS: [(f64, f64); 9] = [
    (0.5, 0.1708),
    (0.5, 0.2574),
    (0.5, 0.3589),
    (0.5, 0.4666),
    (0.45, 0.5192),
    (0.3, 0.4414),
    (0.1996, 0.4099),
    (0.15, 0.5002),
    (0.05, 0.4560),
];

pub const SPLIT_W: f64 = 4.0;

/// `D_1′`, from the sharper single-factor estimate.
pub const D1_PRIME: f64 = 3.11;

/// Published upper bounds for `c_0, …, c_4`.
pub const PUBLISHED_C_CAPS: [f64; 5] = [15.6, 113.0, 633.8, 3204.8, 15945.6];

/// Published intervals containing `x_0, …, x_4`.
pub const PUBLISHED_X_INTERVALS: [(f64, f64); 5] = [
    (0.128316, 0.128317),
    (0.147522, 0.147523),
    (0.189075, 0.189076),
    (0.215065, 0.215066),
    (0.226773, 0.226774),
];

const BISECTION_TOL: f64 = 1e-12;
const SERIES_REL_TOL: f64 = 1e-15;
const MAX_TERMS: usize = 10_000_000;

/// `c_k = ((2k)!)^{1/(2k)}`.
pub fn c_k(k: u64) -> f64 {
    (ln_factorial::<f64>(2 * k) / (2 * k) as f64).exp()
}

/// `c_k′ = ((2k−1)!)^{1/(4k)}`.
pub fn c_k_prime(k: u64) -> f64 {
    (ln_factorial::<f64>(2 * k - 1) / (4 * k) as f64).exp()
}

/// `C = max{c_k + c_k′u/v, (2(1−u) + c_k′uv)w}`.
pub fn split_constant(k: u64, u: f64, v: f64, w: f64) -> f64 {
    let ck = c_k(k);
    let ckp = c_k_prime(k);
    (ck + ckp * u / v).max((2.0 * (1.0 - u) + ckp * u * v) * w)
}

/// `D_k` evaluated exactly: `C^k/k!` for `k <= 9`, `√((2k)!)/k!` beyond.
pub fn d_k_exact(k: u64) -> f64 {
    assert!(k >= 1, "D_k is defined for k >= 1");
    ln_d_k_exact(k).exp()
}

fn ln_d_k_exact(k: u64) -> f64 {
    if k <= 9 {
        let (u, v) = SPLIT_PARAMS[(k - 1) as usize];
        k as f64 * split_constant(k, u, v, SPLIT_W).ln() - ln_factorial::<f64>(k)
    } else {
        0.5 * ln_factorial::<f64>(2 * k) - ln_factorial::<f64>(k)
    }
}

/// `D_k` as used in the bound: for `k <= 9` the exact value rounded up to
/// three decimals (still a valid constant), `√((2k)!)/k!` beyond.
pub fn d_k(k: u64) -> f64 {
    if k <= 9 {
        round_up(d_k_exact(k), 3)
    } else {
        d_k_exact(k)
    }
}

fn round_up(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    // guard against x·s landing a hair above an integer it equals
    let y = x * s;
    let r = y.round();
    if (y - r).abs() < 1e-9 {
        r / s
    } else {
        y.ceil() / s
    }
}

fn ln_d_k_prime(k: u64, ln_half_g2: f64) -> f64 {
    if k == 1 {
        D1_PRIME.ln()
    } else {
        let ln_d = if k <= 9 { d_k(k).ln() } else { ln_d_k_exact(k) };
        ln_d + k as f64 * ln_half_g2
    }
}

/// `D_k′ = D_k (g(2)/2)^k` for `k >= 2`, `D_1′ = 3.11`.
pub fn d_k_prime(k: u64) -> f64 {
    assert!(k >= 1, "D_k' is defined for k >= 1");
    ln_d_k_prime(k, (g_scalar(2.0f64) / 2.0).ln()).exp()
}

/// `h₂(x) = 2 + Σ_{k=1}^{ℓ} D_k′ x^k`.
pub fn h2(ell: usize, x: f64) -> f64 {
    let lh = (g_scalar(2.0f64) / 2.0).ln();
    2.0 + (1..=ell as u64).map(|k| (ln_d_k_prime(k, lh) + k as f64 * x.ln()).exp()).sum::<f64>()
}

/// Outcome of summing `h₁`, optionally stopping once it passes `stop_above`.
enum H1 {
    Value(f64),
    Exceeds,
}

fn h1_eval(ell: usize, x: f64, stop_above: Option<f64>) -> Result<H1> {
    let g2 = g_scalar(2.0f64);
    let rho = g2 * x;
    if !(x > 0.0) || rho >= 1.0 {
        return Err(Error::Bracket(format!("h1 diverges at x = {x}")));
    }
    let lh = (g2 / 2.0).ln();
    let lx = x.ln();
    let mut sum = 0.0;
    for k in (ell as u64 + 1)..(ell as u64 + 1 + MAX_TERMS as u64) {
        let term = (ln_d_k_prime(k, lh) + k as f64 * lx).exp();
        sum += term;
        if let Some(limit) = stop_above {
            if sum > limit {
                return Ok(H1::Exceeds);
            }
        }
        // for k >= 10, D_{k+1}′x^{k+1} <= ρ D_k′x^k, so the rest is geometric
        if k >= 10 && term < SERIES_REL_TOL * sum {
            let total = sum + term * rho / (1.0 - rho);
            return Ok(match stop_above {
                Some(limit) if total > limit => H1::Exceeds,
                _ => H1::Value(total),
            });
        }
    }
    Err(Error::Bracket(format!("h1 series did not settle at x = {x}")))
}

/// `h₁(x) = Σ_{k>ℓ} D_k′ x^k` for `0 < x < 1/g(2)`.
pub fn h1(ell: usize, x: f64) -> Result<f64> {
    match h1_eval(ell, x, None)? {
        H1::Value(v) => Ok(v),
        H1::Exceeds => unreachable!("no stop limit was given"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderConstants {
    pub ell: usize,
    /// Root of `h₁ = h₂` in `(0, 1/g(2))`.
    pub x: f64,
    /// `c_ℓ = h₂(x_ℓ)/x_ℓ^{ℓ+1}`.
    pub c: f64,
    /// Published cap for `c_ℓ` when `ℓ <= 4`.
    pub published_cap: Option<f64>,
}

/// `D_k` for `k = 1..=9` alongside the limit branch at `k = 10`.
pub fn d_table() -> Vec<(u64, f64)> {
    (1..=10).map(|k| (k, d_k(k))).collect()
}

/// Solve `h₁(x) = h₂(x)` by bisection and form `c_ℓ`.
pub fn order_constants(ell: usize) -> Result<OrderConstants> {
    let upper = 1.0 / g_scalar(2.0f64);
    // h1 < h2 means the root lies to the right
    let below = |x: f64| -> Result<bool> {
        let target = h2(ell, x);
        Ok(matches!(h1_eval(ell, x, Some(target))?, H1::Value(v) if v < target))
    };
    let mut lo = upper * 1e-6;
    let mut hi = upper * (1.0 - 1e-9);
    if !below(lo)? {
        return Err(Error::Bracket(format!("h1 >= h2 already near zero for ell = {ell}")));
    }
    if below(hi)? {
        return Err(Error::Bracket(format!("no crossing of h1 and h2 below 1/g(2) for ell = {ell}")));
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok(OrderConstants {
        ell,
        x,
        c: h2(ell, x) / x.powi(ell as i32 + 1),
        published_cap: PUBLISHED_C_CAPS.get(ell).copied(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_constants() {
        assert!((c_k(1) - 2f64.sqrt()).abs() < 1e-15);
        assert!((c_k_prime(1) - 1.0).abs() < 1e-15);
        assert!((d_k_exact(1) - 4.3416).abs() < 1e-4);
        assert_eq!(d_k(1), 4.342);
        assert_eq!(d_k(9), 305.314);
        assert!((d_k(10) - (ln_factorial::<f64>(20) * 0.5 - ln_factorial::<f64>(10)).exp()).abs() < 1e-9);
    }

    #[test]
    fn rounding_up() {
        assert_eq!(round_up(1.2341, 3), 1.235);
        assert_eq!(round_up(1.234, 3), 1.234);
    }

    #[test]
    fn h_functions_cross_once() {
        let up = 1.0 / g_scalar(2.0f64);
        let mut prev = 0.0;
        for i in 1..200 {
            let x = up * i as f64 / 200.0;
            let q = h1(0, x).unwrap() / h2(0, x);
            assert!(q > prev);
            prev = q;
        }
    }

    #[test]
    fn root_is_consistent() {
        let oc = order_constants(2).unwrap();
        let a = h1(2, oc.x).unwrap();
        let b = h2(2, oc.x);
        assert!((a - b).abs() < 1e-8 * b);
    }
}
