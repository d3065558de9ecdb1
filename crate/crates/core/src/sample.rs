//! Seeded random instances for the verification suites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::measure::{LatticePoint, SignedMeasure};
use crate::model::ModelSpec;
use crate::smoothness::SmoothnessInstance;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A valid model with `n` trials and `d` categories. Success probabilities
/// come from a randomly chosen scale so that both small-`p` and large-`p`
/// regimes (and failing applicability gates) appear.
pub fn random_model<R: Rng>(rng: &mut R, n: usize, d: usize) -> ModelSpec<f64> {
    let scale = [0.05, 0.2, 0.5, 1.0][rng.gen_range(0..4)];
    let mut p: Vec<f64> = (0..n).map(|_| scale * rng.gen::<f64>()).collect();
    // trial 0 always fires with positive probability so every column can be fed
    if p[0] == 0.0 {
        p[0] = scale * 0.5;
    }
    if n > 1 && rng.gen_bool(0.1) {
        p[n - 1] = 0.0;
    }
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..d)
                .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen::<f64>() })
                .collect();
            if row.iter().all(|&x| x == 0.0) {
                row[rng.gen_range(0..d)] = 1.0;
            }
            row
        })
        .collect();
    for r in 0..d {
        if (0..n).all(|j| p[j] == 0.0 || w[j][r] == 0.0) {
            w[0][r] = 0.1 + rng.gen::<f64>();
        }
    }
    let q = w
        .into_iter()
        .map(|row| {
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect();
    ModelSpec::new(p, q).expect("generator produces valid models")
}

/// Sparse signed measure with up to `atoms` atoms in `[0, extent)^d`.
pub fn random_measure<R: Rng>(rng: &mut R, d: usize, atoms: usize, extent: u32) -> SignedMeasure<f64> {
    let pts = (0..atoms).map(|_| {
        let x: Vec<u32> = (0..d).map(|_| rng.gen_range(0..extent)).collect();
        (LatticePoint(x), rng.gen_range(-1.0..1.0))
    });
    SignedMeasure::from_atoms(d, pts).expect("coordinates are in range")
}

/// `k × d` coefficients in `[−0.5, 0.5]` (or `[0, 0.5]`) and intensities in `[0.2, 4]`.
pub fn random_smoothness<R: Rng>(rng: &mut R, k: usize, d: usize, signed: bool) -> SmoothnessInstance<f64> {
    let lo = if signed { -0.5 } else { 0.0 };
    let coeff = (0..k).map(|_| (0..d).map(|_| rng.gen_range(lo..0.5)).collect()).collect();
    let lambda = (0..d).map(|_| rng.gen_range(0.2..4.0)).collect();
    SmoothnessInstance::new(coeff, lambda).expect("generator produces valid instances")
}

/// `p_r >= 0` with `Σ p_r <= 1` and `λ_r >= p_r`.
pub fn random_single_factor<R: Rng>(rng: &mut R, d: usize) -> (Vec<f64>, Vec<f64>) {
    let total = rng.gen_range(0.0..1.0);
    let w: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    let probs: Vec<f64> = w.iter().map(|x| total * x / s).collect();
    let lambda = probs.iter().map(|&x| x + rng.gen_range(1e-3..4.0)).collect();
    (probs, lambda)
}
