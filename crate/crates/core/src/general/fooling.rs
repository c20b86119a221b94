use serde::Serialize;

use super::histogram::{report_distance, union};
use super::table::{OptTable, TableEntry, TableStructure};
use crate::error::{domain, Result};

/// Posterior reports over `m` states: labels `0..m` are unit vectors and
/// label `m` is the uniform distribution. One truthful expert is fully
/// informed, the rest report uniform, and the adversaries report the other
/// `m - 1` unit vectors so every state yields the same observed multiset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoolingInstance {
    pub states: usize,
    pub k: usize,
    pub truthful: usize,
    /// Truthful reports per state.
    pub truthful_reports: Vec<Vec<u32>>,
    /// Adversarial reports per state.
    pub adversarial_reports: Vec<Vec<u32>>,
    /// Regret every forecast incurs on this instance.
    pub floor: f64,
}

pub fn fooling_scenario(m: usize, k: usize, truthful: usize) -> Result<FoolingInstance> {
    if m < 2 {
        return Err(domain("need at least two states"));
    }
    if k + 1 < m {
        return Err(domain(format!("need k >= m - 1, got m={m}, k={k}")));
    }
    if truthful == 0 {
        return Err(domain("need at least one truthful expert"));
    }
    let uniform = m as u32;
    let mut truthful_reports = Vec::new();
    let mut adversarial_reports = Vec::new();
    for state in 0..m as u32 {
        let mut t = vec![state];
        t.extend(std::iter::repeat(uniform).take(truthful - 1));
        let mut a: Vec<u32> = (0..m as u32).filter(|&s| s != state).collect();
        a.extend(std::iter::repeat(uniform).take(k + 1 - m));
        t.sort_unstable();
        a.sort_unstable();
        truthful_reports.push(t);
        adversarial_reports.push(a);
    }
    let miss = 1.0 - 1.0 / m as f64;
    Ok(FoolingInstance {
        states: m,
        k,
        truthful,
        truthful_reports,
        adversarial_reports,
        floor: miss * miss,
    })
}

impl FoolingInstance {
    /// Observed multiset per state.
    pub fn observed(&self) -> Vec<Vec<u32>> {
        self.truthful_reports
            .iter()
            .zip(&self.adversarial_reports)
            .map(|(t, a)| union(t, a))
            .collect()
    }

    /// Regret of forecasting the distribution `q` under a uniform prior,
    /// with loss `(1 - q_state)^2`. The informed expert makes the benchmark exact.
    pub fn regret(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.states {
            return Err(domain("forecast has the wrong number of states"));
        }
        Ok(q.iter().map(|p| (1.0 - p) * (1.0 - p)).sum::<f64>() / self.states as f64)
    }

    /// Largest per-state benchmark change between truthful multisets within
    /// distance `k`.
    pub fn sensitivity(&self) -> f64 {
        let mut s: f64 = 0.0;
        for (i, a) in self.truthful_reports.iter().enumerate() {
            for (j, b) in self.truthful_reports.iter().enumerate() {
                if report_distance(a, b).map_or(false, |d| d <= self.k) {
                    s = s.max(if i == j { 0.0 } else { 1.0 });
                }
            }
        }
        s
    }

    /// Binary instance as a benchmark table over a uniform prior.
    pub fn binary_table(&self) -> Result<OptTable> {
        if self.states != 2 {
            return Err(domain("table form exists only for two states"));
        }
        OptTable::new(
            Some(vec![0, 1, 2]),
            vec![TableStructure {
                id: "fooling".into(),
                entries: (0..2)
                    .map(|s| TableEntry {
                        reports: self.truthful_reports[s].clone(),
                        opt: s as f64,
                        prob: 0.5,
                    })
                    .collect(),
            }],
        )
    }
}
