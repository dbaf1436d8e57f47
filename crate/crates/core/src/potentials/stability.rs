use rayon::prelude::*;

use crate::data::{sample_subset, Dataset};
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::rng::{purpose, RandomSource};

/// Empirical deletion-stability profile: for each `k`, the largest
/// `|U(S ∪ {z}) − U(S)|` over `trials` draws of `S ∼ db^{k−1}` and `z ∼ db`.
pub fn deletion_stability_probe<U: Potential + ?Sized>(
    potential: &U,
    db: &Dataset,
    k_values: &[usize],
    trials: usize,
    rng: &RandomSource,
) -> Result<Vec<(usize, f64)>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if db.is_empty() {
        return Err(Error::EmptyDataset);
    }
    k_values
        .iter()
        .map(|&k| {
            if k == 0 {
                return Err(Error::InvalidConfig("k must be at least 1".into()));
            }
            let worst = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut stream = rng.stream(purpose::PROBE, ((k as u64) << 32) | t as u64);
                    let s = sample_subset(db, k - 1, &mut stream).expect("db is non-empty");
                    let z = &db.points()[stream.uniform_index(db.len())];
                    (potential.evaluate_with(&s, z) - potential.evaluate(&s)).abs()
                })
                .reduce(|| 0.0, f64::max);
            Ok((k, worst))
        })
        .collect()
}

/// Least-squares slope of `log β(k)` against `log k`, skipping zero entries.
/// For a profile `β(k) ∝ k^{−b}` this returns `−b`.
pub fn log_log_slope(profile: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(_, b)| *b > 0.0)
        .map(|&(k, b)| ((k as f64).ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
