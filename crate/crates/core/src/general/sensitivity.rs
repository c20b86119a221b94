use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::histogram::{confusion_padding, multisets, report_distance, union};
use super::table::{OptTable, TableEntry};
use crate::error::{domain, Result};

/// One side of a sensitivity witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessSide {
    pub structure: String,
    pub reports: Vec<u32>,
    pub opt: f64,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub first: WitnessSide,
    pub second: WitnessSide,
}

/// Alternative upper-bound expressions, each with whether it holds for a
/// given exact regret.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundChecks {
    /// `S^2`.
    pub s_squared: f64,
    /// `(1 - S)^2`, the loss of forecast `S` on the realized state.
    pub loss_of_s: f64,
    /// `(1 - S/2)^2`.
    pub loss_of_half_s: f64,
    /// `(S/2)^2`.
    pub half_s_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub s: f64,
    pub witness: Option<Witness>,
    pub alpha: f64,
    /// `(alpha / 4) S^2`.
    pub lower_bound: f64,
    /// `S^2`.
    pub upper_bound: f64,
    pub variants: BoundChecks,
    /// Exact minimax regret bracket, when computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<(f64, f64)>,
}

impl SensitivityReport {
    /// Which bounds hold for an exact regret value, in the order
    /// `(lower, S^2, (1-S)^2, (1-S/2)^2, (S/2)^2)`.
    pub fn check(&self, regret: f64) -> [bool; 5] {
        let tol = 1e-9;
        [
            regret >= self.lower_bound - tol,
            regret <= self.variants.s_squared + tol,
            regret <= self.variants.loss_of_s + tol,
            regret <= self.variants.loss_of_half_s + tol,
            regret <= self.variants.half_s_squared + tol,
        ]
    }
}

fn side(table: &OptTable, s: usize, e: &TableEntry) -> WitnessSide {
    WitnessSide {
        structure: table.structures[s].id.clone(),
        reports: e.reports.clone(),
        opt: e.opt,
        prob: e.prob,
    }
}

fn harmonic(p: f64, q: f64) -> f64 {
    if p + q > 0.0 {
        p * q / (p + q)
    } else {
        0.0
    }
}

/// Largest benchmark change over entry pairs at report distance at most `k`.
/// Ties prefer the pair with the largest `PP'/(P+P')`, then the first found.
fn max_change(table: &OptTable, k: usize) -> Result<(f64, Option<Witness>)> {
    let support = table.support();
    if support.is_empty() {
        return Err(domain("table has no positive-probability entries"));
    }
    let mut best: Option<(f64, f64, usize, usize)> = None;
    for i in 0..support.len() {
        for j in i..support.len() {
            let (a, b) = (support[i].1, support[j].1);
            if report_distance(&a.reports, &b.reports)? > k {
                continue;
            }
            let gap = (a.opt - b.opt).abs();
            let h = harmonic(a.prob, b.prob);
            let better = match best {
                None => true,
                Some((g, hb, _, _)) => gap > g || (gap == g && h > hb),
            };
            if better {
                best = Some((gap, h, i, j));
            }
        }
    }
    let (gap, _, i, j) = best.expect("diagonal pairs always qualify");
    let witness = (gap > 0.0).then(|| Witness {
        first: side(table, support[i].0, support[i].1),
        second: side(table, support[j].0, support[j].1),
    });
    Ok((gap, witness))
}

pub fn sensitive_parameter(table: &OptTable, k: usize) -> Result<SensitivityReport> {
    if table.is_empty() {
        return Err(domain("empty table"));
    }
    let (s, witness) = max_change(table, k)?;
    let alpha = table.alpha();
    Ok(SensitivityReport {
        s,
        witness,
        alpha,
        lower_bound: alpha / 4.0 * s * s,
        upper_bound: s * s,
        variants: BoundChecks {
            s_squared: s * s,
            loss_of_s: (1.0 - s) * (1.0 - s),
            loss_of_half_s: (1.0 - s / 2.0) * (1.0 - s / 2.0),
            half_s_squared: s * s / 4.0,
        },
        exact: None,
    })
}

/// Midpoint of the largest and smallest benchmark among truthful multisets
/// contained in the observed multiset `observed` (size `n - k + k`).
pub fn naive_forecast(table: &OptTable, k: usize, observed: &[u32]) -> Result<f64> {
    let mut sorted = observed.to_vec();
    sorted.sort_unstable();
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (_, e) in table.support() {
        if e.reports.len() + k == sorted.len() && is_submultiset(&e.reports, &sorted) {
            hi = hi.max(e.opt);
            lo = lo.min(e.opt);
        }
    }
    if hi < lo {
        return Err(domain(format!(
            "no truthful multiset within distance {k} of {observed:?}"
        )));
    }
    Ok(0.5 * (hi + lo))
}

fn is_submultiset(small: &[u32], big: &[u32]) -> bool {
    let mut i = 0;
    for &b in big {
        if i < small.len() && small[i] == b {
            i += 1;
        }
    }
    i == small.len()
}

/// Naive forecasts on every observable multiset.
pub fn naive_aggregator(table: &OptTable, k: usize) -> Result<BTreeMap<Vec<u32>, f64>> {
    let pads = multisets(&table.alphabet(), k);
    let mut out = BTreeMap::new();
    for (_, e) in table.support() {
        for pad in &pads {
            let y = union(&e.reports, pad);
            if !out.contains_key(&y) {
                let f = naive_forecast(table, k, &y)?;
                out.insert(y, f);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundInstance {
    pub witness: Option<Witness>,
    /// Pads appended by the adversaries to each witness multiset.
    pub pads: Option<(Vec<u32>, Vec<u32>)>,
    /// Mixture weights over the two witness structures.
    pub weights: [f64; 2],
    /// `(alpha / 4) S^2`.
    pub bound: f64,
    /// Exact minimum of `(P (f - o)^2 + P' (f - o')^2) / 2` over `f`.
    pub pair_value: f64,
}

pub fn regret_lower_bound_instance(table: &OptTable, k: usize) -> Result<LowerBoundInstance> {
    let report = sensitive_parameter(table, k)?;
    let Some(w) = report.witness.clone() else {
        return Ok(LowerBoundInstance {
            witness: None,
            pads: None,
            weights: [0.5, 0.5],
            bound: 0.0,
            pair_value: 0.0,
        });
    };
    let pads = confusion_padding(&w.first.reports, &w.second.reports, k);
    let s = report.s;
    Ok(LowerBoundInstance {
        pads,
        weights: [0.5, 0.5],
        bound: report.lower_bound,
        pair_value: harmonic(w.first.prob, w.second.prob) * s * s / 2.0,
        witness: Some(w),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioCheck {
    pub ratio: f64,
    pub floor: f64,
    /// Steps in the shortest chain of entries, each within distance `k`,
    /// joining the full-distance witness pair.
    pub chain_length: Option<usize>,
    pub holds: bool,
}

pub fn sensitivity_ratio_check(table: &OptTable, k: usize) -> Result<RatioCheck> {
    if k == 0 {
        return Err(domain("need k >= 1"));
    }
    let n = table.report_size();
    let (s_k, _) = max_change(table, k)?;
    let (s_n, witness) = max_change(table, n)?;
    let Some(w) = witness else {
        return Err(domain("sensitivity with all reports changed is zero"));
    };
    let ratio = s_k / s_n;
    let floor = 1.0 / (n.div_ceil(k) as f64 + 1.0);
    let support = table.support();
    let locate = |side: &WitnessSide| {
        support
            .iter()
            .position(|(s, e)| table.structures[*s].id == side.structure && e.reports == side.reports)
    };
    let chain_length = match (locate(&w.first), locate(&w.second)) {
        (Some(from), Some(to)) => shortest_chain(&support, k, from, to),
        _ => None,
    };
    Ok(RatioCheck {
        ratio,
        floor,
        chain_length,
        holds: ratio >= floor - 1e-12,
    })
}

fn shortest_chain(support: &[(usize, &TableEntry)], k: usize, from: usize, to: usize) -> Option<usize> {
    let mut dist = vec![usize::MAX; support.len()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(i) = queue.pop_front() {
        if i == to {
            return Some(dist[i]);
        }
        for j in 0..support.len() {
            if dist[j] == usize::MAX
                && report_distance(&support[i].1.reports, &support[j].1.reports).ok()? <= k
            {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general::table::{ci_informative_table, linear_table, TableStructure};

    fn entry(reports: Vec<u32>, opt: f64, prob: f64) -> TableEntry {
        TableEntry { reports, opt, prob }
    }

    #[test]
    fn constant_benchmark_has_zero_sensitivity() {
        let t = OptTable::new(
            None,
            vec![TableStructure {
                id: "c".into(),
                entries: vec![entry(vec![0, 0], 0.4, 0.5), entry(vec![1, 1], 0.4, 0.5)],
            }],
        )
        .unwrap();
        let r = sensitive_parameter(&t, 2).unwrap();
        assert_eq!(r.s, 0.0);
        assert!(r.witness.is_none());
        assert_eq!(regret_lower_bound_instance(&t, 2).unwrap().bound, 0.0);
    }

    #[test]
    fn informed_expert_saturates() {
        let t = ci_informative_table(4, 0.5, 0.7, 0.2).unwrap();
        for k in 1..=3 {
            assert_eq!(sensitive_parameter(&t, k).unwrap().s, 1.0);
        }
        let r = sensitivity_ratio_check(&t, 1).unwrap();
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn linear_family() {
        let t = linear_table(10, 0.5, 0.5).unwrap();
        let r = sensitive_parameter(&t, 2).unwrap();
        assert!((r.s - 0.1).abs() < 1e-12);
        let c = sensitivity_ratio_check(&t, 2).unwrap();
        assert!((c.ratio - 0.2).abs() < 1e-12);
        assert!((c.floor - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(c.chain_length, Some(5));
        assert!(c.holds);
        let full = sensitivity_ratio_check(&t, 10).unwrap();
        assert!((full.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn naive_midpoint() {
        let t = OptTable::new(
            None,
            vec![
                TableStructure {
                    id: "a".into(),
                    entries: vec![entry(vec![1], 0.2, 1.0)],
                },
                TableStructure {
                    id: "b".into(),
                    entries: vec![entry(vec![1], 0.6, 1.0)],
                },
            ],
        )
        .unwrap();
        assert!((naive_forecast(&t, 0, &[1]).unwrap() - 0.4).abs() < 1e-15);
        assert!(naive_forecast(&t, 0, &[0]).is_err());
        let single = OptTable::new(
            None,
            vec![TableStructure {
                id: "a".into(),
                entries: vec![entry(vec![0, 1], 0.3, 0.5), entry(vec![1, 1], 0.8, 0.5)],
            }],
        )
        .unwrap();
        let f = naive_aggregator(&single, 0).unwrap();
        assert_eq!(f[&vec![0, 1]], 0.3);
        assert_eq!(f[&vec![1, 1]], 0.8);
    }

    #[test]
    fn lower_bound_pair_value() {
        let t = OptTable::new(
            None,
            vec![TableStructure {
                id: "a".into(),
                entries: vec![
                    entry(vec![0], 0.1, 0.25),
                    entry(vec![1], 0.9, 0.25),
                    entry(vec![2], 0.5, 0.5),
                ],
            }],
        )
        .unwrap();
        let lb = regret_lower_bound_instance(&t, 1).unwrap();
        let s: f64 = 0.8;
        assert!((lb.bound - 0.25 / 4.0 * s * s).abs() < 1e-15);
        assert!((lb.pair_value - lb.bound).abs() < 1e-15);
        let (p1, p2) = lb.pads.unwrap();
        assert_eq!((p1.len(), p2.len()), (1, 1));
    }
}
