//! Scalar special functions with certified tail bounds.

use crate::scalar::{ln_factorial, Scalar};

/// Poisson point mass `e^{-t} t^m / m!` with `0^0 = 1`.
pub(crate) fn poisson_mass<T: Scalar>(m: u64, t: T) -> T {
    if t == T::zero() {
        return if m == 0 { T::one() } else { T::zero() };
    }
    let m_t = T::lit(m as f64);
    (-t + m_t * t.ln() - ln_factorial::<T>(m)).exp()
}

/// Upper bound on `Σ_{m > cut} r^m / m!`, or `None` while the geometric
/// majorant is not yet valid (`cut + 2 <= r`).
pub(crate) fn exp_tail_bound<T: Scalar>(r: T, cut: u64) -> Option<T> {
    if r == T::zero() {
        return Some(T::zero());
    }
    let next = T::lit((cut + 2) as f64);
    if next <= r {
        return None;
    }
    let m = cut + 1;
    let first = (T::lit(m as f64) * r.ln() - ln_factorial::<T>(m)).exp();
    Some(first / (T::one() - r / next))
}

/// Upper bound on the Poisson(t) upper tail `P(X > cut)`.
pub(crate) fn poisson_tail_bound<T: Scalar>(t: T, cut: u64) -> Option<T> {
    if t == T::zero() {
        return Some(T::zero());
    }
    let next = T::lit((cut + 2) as f64);
    if next <= t {
        return None;
    }
    Some(poisson_mass(cut + 1, t) / (T::one() - t / next))
}

/// Smallest cut-off `M` with `P(X > M) <= tol` for `X ~ Po(t)`.
pub(crate) fn poisson_cutoff<T: Scalar>(t: T, tol: T) -> (u64, T) {
    let mut cut = t.floor().to_u64().unwrap_or(0);
    loop {
        if let Some(tail) = poisson_tail_bound(t, cut) {
            if tail <= tol {
                return (cut, tail);
            }
        }
        cut += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_mass_edge_cases() {
        assert_eq!(poisson_mass(0, 0.0f64), 1.0);
        assert_eq!(poisson_mass(3, 0.0f64), 0.0);
        let p: f64 = poisson_mass(2, 1.5);
        assert!((p - (-1.5f64).exp() * 1.125).abs() < 1e-15);
    }

    #[test]
    fn tail_bounds_dominate_direct_sums() {
        for &t in &[0.3f64, 1.0, 4.0, 9.0] {
            for cut in [10u64, 15, 25] {
                let direct: f64 = (cut + 1..cut + 200).map(|m| poisson_mass(m, t)).sum();
                let bound = poisson_tail_bound(t, cut).unwrap();
                assert!(bound >= direct * (1.0 - 1e-12), "t={t} cut={cut}");
                assert!(bound <= direct * 1.5 + 1e-300);
            }
        }
        let direct: f64 = (21..80u64).map(|m| (m as f64 * 2f64.ln() - ln_factorial::<f64>(m)).exp()).sum();
        assert!(exp_tail_bound(2.0f64, 20).unwrap() >= direct);
        assert!(exp_tail_bound(5.0f64, 2).is_none());
    }
}
