use std::collections::BTreeMap;

use serde::Serialize;

use super::histogram::{multisets, union};
use super::table::OptTable;
use crate::error::{domain, Error, Result};
use crate::minimax::{Choice, Group, Piece, Problem};

const MAX_OBSERVED: usize = 2000;

/// Minimax L2 regret over a finite table when `k` adversaries may append any
/// reports. With benchmarks equal to posteriors and adversaries acting on
/// `(structure, truthful reports)`, regret is `E[(f - opt)^2]`.
pub struct TableGame {
    observed: Vec<Vec<u32>>,
    /// Per structure, per positive-probability entry: `(prob, opt, reachable observed indices)`.
    cells: Vec<Vec<(f64, f64, Vec<usize>)>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableMinimax {
    /// Certified lower bound on the minimax regret.
    pub lower: f64,
    /// Worst-case regret of `forecasts`.
    pub upper: f64,
    pub forecasts: Vec<(Vec<u32>, f64)>,
}

impl TableGame {
    pub fn new(table: &OptTable, k: usize) -> Result<Self> {
        if table.is_empty() {
            return Err(domain("empty table"));
        }
        let pads = multisets(&table.alphabet(), k);
        let mut index: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        let mut observed = Vec::new();
        let mut cells = Vec::new();
        for s in &table.structures {
            let mut rows = Vec::new();
            for e in s.entries.iter().filter(|e| e.prob > 0.0) {
                let mut vars: Vec<usize> = pads
                    .iter()
                    .map(|pad| {
                        let y = union(&e.reports, pad);
                        *index.entry(y.clone()).or_insert_with(|| {
                            observed.push(y);
                            observed.len() - 1
                        })
                    })
                    .collect();
                vars.sort_unstable();
                vars.dedup();
                rows.push((e.prob, e.opt, vars));
            }
            cells.push(rows);
        }
        if observed.len() > MAX_OBSERVED {
            return Err(Error::Resource {
                what: "observable report multisets",
                required: observed.len() as u128,
                cap: MAX_OBSERVED as u128,
            });
        }
        Ok(Self { observed, cells })
    }

    /// Every multiset the aggregator can observe, indexed as in `values`.
    pub fn observed(&self) -> &[Vec<u32>] {
        &self.observed
    }

    /// Worst-case regret of the forecasts `values` against best-responding adversaries.
    pub fn regret(&self, values: &[f64]) -> f64 {
        self.problem().value(values)
    }

    fn problem(&self) -> Problem {
        let pieces = self
            .cells
            .iter()
            .map(|rows| Piece {
                constant: 0.0,
                groups: rows
                    .iter()
                    .map(|(prob, opt, vars)| Group {
                        weight: *prob,
                        choices: vars.iter().map(|&var| Choice { var, target: *opt }).collect(),
                    })
                    .collect(),
            })
            .collect();
        Problem {
            dim: self.observed.len(),
            pieces,
        }
    }

    pub fn solve(&self, tol: f64) -> TableMinimax {
        let sol = self.problem().solve(&vec![0.5; self.observed.len()], tol);
        TableMinimax {
            lower: sol.lower,
            upper: sol.upper,
            forecasts: self.observed.iter().cloned().zip(sol.x).collect(),
        }
    }
}
