use crate::error::{Error, Result};
use crate::estimator::{IterationLog, WeightSchedule};
use crate::value::ValueTable;

/// Re-derives values at a smaller horizon `m′` from a recorded run.
///
/// Only iterations with `k ≤ m′` are kept. Conditioned on that event `k` has
/// law `w′_k = w_k / Σ_{j≤m′} w_j`, so each kept contribution is divided by
/// `w′_k · m′`. For `m′ = m` the original divisors are reused, which makes
/// the result identical to the full run.
pub fn prefix_values(log: &IterationLog, m_prime: usize, schedule: &WeightSchedule) -> Result<ValueTable> {
    let m = schedule.m();
    if m_prime == 0 || m_prime > m {
        return Err(Error::InvalidConfig(format!("m' must lie in [1, {m}], got {m_prime}")));
    }
    let kept_mass: f64 = schedule.weights()[..m_prime].iter().sum();
    let divisor = |k: usize| {
        if m_prime == m || schedule.is_uniform() {
            schedule.divisor(k)
        } else {
            schedule.weight(k) / kept_mass * m_prime as f64
        }
    };

    let mut table = ValueTable::new(log.ids.iter().copied(), log.window, m_prime, log.seed, schedule.name());
    let mut used = 0u64;
    for rec in log.records.iter().filter(|r| r.k <= m_prime) {
        let d = divisor(rec.k);
        for (id, delta) in log.ids.iter().zip(&rec.contributions) {
            table.entries.get_mut(id).expect("id in table").update(delta / d);
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::InsufficientSamples(m_prime));
    }
    table.iterations = used;
    table.converged = m_prime == m && log.converged;
    Ok(table)
}
