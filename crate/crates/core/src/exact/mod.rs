//! Ground-truth oracles for small instances.

mod axioms;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use axioms::{axiom_suite, AxiomCheck, AxiomReport};

use crate::data::{sample_subset, DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::rng::{purpose, RandomSource};

pub const PERMUTATION_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactConfig {
    pub max_n: usize,
    pub mc_oracle_draws: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            max_n: 12,
            mc_oracle_draws: 200_000,
        }
    }
}

/// `U` on every subset of `points`, indexed by bitmask. Each subset is
/// evaluated exactly once.
pub fn subset_values<U: Potential + ?Sized>(points: &[&DataPoint], potential: &U) -> Vec<f64> {
    let n = points.len();
    (0..1usize << n)
        .into_par_iter()
        .map(|mask| {
            let subset: Vec<&DataPoint> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| points[i]).collect();
            potential.evaluate(&subset)
        })
        .collect()
}

fn binomials(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    row
}

fn check_size(b: &Dataset, cap: usize) -> Result<()> {
    if b.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if b.len() > cap {
        return Err(Error::TooLarge { size: b.len(), cap });
    }
    Ok(())
}

/// Data Shapley values of every point in `b` from a shared subset cache:
/// `sh(z) = (1/m) Σ_{S ⊆ B∖{z}} (U(S ∪ {z}) − U(S)) / C(m−1, |S|)`.
pub fn exact_data_shapley_all<U: Potential + ?Sized>(
    b: &Dataset,
    potential: &U,
    config: &ExactConfig,
) -> Result<Vec<f64>> {
    check_size(b, config.max_n)?;
    let points = b.refs();
    let cache = subset_values(&points, potential);
    Ok(shapley_from_cache(&cache, points.len()))
}

fn shapley_from_cache(cache: &[f64], m: usize) -> Vec<f64> {
    let choose = binomials(m - 1);
    (0..m)
        .map(|i| {
            let bit = 1usize << i;
            let total: f64 = (0..cache.len())
                .filter(|mask| mask & bit == 0)
                .map(|mask| (cache[mask | bit] - cache[mask]) / choose[mask.count_ones() as usize])
                .sum();
            total / m as f64
        })
        .collect()
}

/// Data Shapley value of the point at `z_index` in `b`, by enumeration.
pub fn exact_data_shapley<U: Potential + ?Sized>(
    z_index: usize,
    b: &Dataset,
    potential: &U,
    config: &ExactConfig,
) -> Result<f64> {
    if z_index >= b.len() {
        return Err(Error::InvalidConfig(format!(
            "z_index {z_index} out of range for {} points",
            b.len()
        )));
    }
    Ok(exact_data_shapley_all(b, potential, config)?[z_index])
}

/// Data Shapley values as the average over all `m!` orderings of each
/// point's contribution to its predecessors. Limited to six points.
pub fn permutation_shapley_all<U: Potential + ?Sized>(b: &Dataset, potential: &U) -> Result<Vec<f64>> {
    check_size(b, PERMUTATION_CAP)?;
    let points = b.refs();
    let m = points.len();
    let cache = subset_values(&points, potential);
    let mut totals = vec![0.0; m];
    let mut perm: Vec<usize> = (0..m).collect();
    let mut count = 0u64;
    loop {
        let mut mask = 0usize;
        for &i in &perm {
            totals[i] += cache[mask | 1 << i] - cache[mask];
            mask |= 1 << i;
        }
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(totals.into_iter().map(|t| t / count as f64).collect())
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `(Σ_z sh(z), U(B) − U(∅))`; the two agree by the efficiency axiom.
pub fn exact_efficiency_check<U: Potential + ?Sized>(
    b: &Dataset,
    potential: &U,
    config: &ExactConfig,
) -> Result<(f64, f64)> {
    check_size(b, config.max_n)?;
    let points = b.refs();
    let cache = subset_values(&points, potential);
    let sum = shapley_from_cache(&cache, points.len()).iter().sum();
    Ok((sum, cache[cache.len() - 1] - cache[0]))
}

/// Brute-force Monte Carlo estimate of the distributional value: the mean
/// of `draws` independent samples of `U(S ∪ {z}) − U(S)` with `k` uniform on
/// `[m]` and `S ∼ db^{k−1}`. Returns `(mean, standard error)`.
pub fn oracle_distributional_value<U: Potential + ?Sized>(
    z: &DataPoint,
    db: &Dataset,
    potential: &U,
    m: usize,
    draws: usize,
    rng: &RandomSource,
) -> Result<(f64, f64)> {
    if draws == 0 || m == 0 {
        return Err(Error::InvalidConfig("draws and m must be at least 1".into()));
    }
    let samples: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.stream(purpose::ORACLE, i);
            let k = stream.uniform_index(m) + 1;
            let s = sample_subset(db, k - 1, &mut stream).expect("database must be non-empty for k > 1");
            potential.evaluate_with(&s, z) - potential.evaluate(&s)
        })
        .collect();
    Ok(mean_and_stderr(&samples))
}

/// Sample mean and standard error of the mean (0 for a single sample).
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let rough = samples.iter().sum::<f64>() / n;
    let mean = rough + samples.iter().map(|x| x - rough).sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelKind;
    use crate::potentials::{AdditivePotential, ConstantPotential, IndicatorPotential, MeanPotential};

    fn line(values: &[f64]) -> Dataset {
        Dataset::from_rows(1, LabelKind::None, values.iter().map(|&v| (vec![v], None))).unwrap()
    }

    #[test]
    fn indicator_gets_everything() {
        let b = line(&[1.0, 2.0, 3.0]);
        let sh = exact_data_shapley_all(&b, &IndicatorPotential::new(1), &ExactConfig::default()).unwrap();
        assert_eq!(sh, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn additive_shares() {
        let b = line(&[1.0, 2.0, 3.0, 4.0]);
        let u = AdditivePotential::from_first_feature(&b);
        let sh = exact_data_shapley_all(&b, &u, &ExactConfig::default()).unwrap();
        for (i, v) in sh.iter().enumerate() {
            assert!((v - (i + 1) as f64 / 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_points_are_symmetric() {
        let b = line(&[0.5, 0.5]);
        let u = MeanPotential::new(vec![0.0], 1.0, false);
        let sh = exact_data_shapley_all(&b, &u, &ExactConfig::default()).unwrap();
        assert_eq!(sh[0], sh[1]);
    }

    #[test]
    fn singleton_efficiency() {
        let b = line(&[0.3]);
        let u = MeanPotential::new(vec![0.0], 1.0, false);
        let (sum, gain) = exact_efficiency_check(&b, &u, &ExactConfig::default()).unwrap();
        assert_eq!(sum, gain);
        assert_eq!(sum, u.evaluate(&b.refs()) - 0.0);
    }

    #[test]
    fn size_cap_enforced() {
        let b = line(&[0.0; 13].iter().enumerate().map(|(i, _)| i as f64).collect::<Vec<_>>());
        let err = exact_data_shapley(0, &b, &ConstantPotential::new(0.1), &ExactConfig::default());
        assert!(matches!(err, Err(Error::TooLarge { size: 13, cap: 12 })));
        assert!(permutation_shapley_all(
            &line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            &ConstantPotential::new(0.1)
        )
        .is_err());
    }

    #[test]
    fn oracle_degenerate_cases() {
        let db = line(&[0.0, 1.0, 2.0]);
        let z = DataPoint::new(99, vec![0.5], None);
        let rng = RandomSource::new(1);
        let u = MeanPotential::new(vec![1.0], 2.0 / 3.0, false);
        let (mean, se) = oracle_distributional_value(&z, &db, &u, 1, 100, &rng).unwrap();
        assert_eq!(se, 0.0);
        assert!((mean - (u.evaluate(&[&z]) - u.evaluate(&[]))).abs() < 1e-15);
        let (c, cse) = oracle_distributional_value(&z, &db, &ConstantPotential::new(0.4), 5, 100, &rng).unwrap();
        assert_eq!((c, cse), (0.0, 0.0));
    }

    #[test]
    fn permutations_enumerated() {
        let mut p = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut p) {
            n += 1;
        }
        assert_eq!(n, 24);
    }
}
