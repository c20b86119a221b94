//! Exhaustive minimax checks on small instances.
//!
//! Structures range over all one- and two-point truthful distributions that
//! meet the mean constraints. For a fixed aggregator the adversary's best
//! pure reply decomposes over `(state, truthful count)`, so the inner
//! maximization is a per-cell maximum over `{0..=k}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{
    benchmark, regret, AdversaryStrategy, Aggregator, CondDist, InfoStructure, LossKind, Params,
    MEAN_TOL,
};
use crate::worst_case::WorstCase;

/// Default grid step for aggregator searches.
pub const DEFAULT_DELTA: f64 = 0.02;

#[derive(Clone, Copy, Debug)]
pub struct OracleLimits {
    /// Maximum number of enumerated structures.
    pub max_structures: u128,
    /// Maximum number of aggregator candidates in a grid search.
    pub max_candidates: u128,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_structures: 1_000_000,
            max_candidates: 100_000_000,
        }
    }
}

/// Which aggregators and adversaries a grid search ranges over.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub delta: f64,
    /// Restrict to nondecreasing aggregators.
    pub monotone: bool,
    /// Only allow adversary replies keeping the total count in `k..=n-k`.
    pub interior_only: bool,
    pub limits: OracleLimits,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            monotone: true,
            interior_only: false,
            limits: OracleLimits::default(),
        }
    }
}

/// All one- and two-point distributions on `{0..=m}` with the given mean,
/// in lexicographic order of `(low, high)` support points.
pub fn two_point_supports(m: usize, mean: f64) -> Vec<CondDist> {
    let mut out = Vec::new();
    for lo in 0..=m {
        let lo_f = lo as f64;
        if (lo_f - mean).abs() <= MEAN_TOL {
            out.push(CondDist::point(m, lo).expect("point in range"));
            continue;
        }
        if lo_f > mean {
            break;
        }
        for hi in lo + 1..=m {
            if (hi as f64) > mean + MEAN_TOL {
                if let Ok(d) = CondDist::two_point(m, lo, hi, mean) {
                    out.push(d);
                }
            }
        }
    }
    out
}

/// Enumerated structures for one instance, with benchmark losses cached.
pub struct OracleGrid {
    params: Params,
    kind: LossKind,
    interior_only: bool,
    side1: Vec<CondDist>,
    side0: Vec<CondDist>,
    dense1: Vec<Vec<f64>>,
    dense0: Vec<Vec<f64>>,
    /// Benchmark loss, row-major over `(side1, side0)`.
    bench: Vec<f64>,
}

/// Result of evaluating one aggregator on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridMax {
    pub regret: f64,
    pub u1_index: usize,
    pub u0_index: usize,
}

impl OracleGrid {
    pub fn new(p: &Params, kind: LossKind, interior_only: bool, limits: OracleLimits) -> Result<Self> {
        let m = p.truthful();
        let side1 = two_point_supports(m, m as f64 * p.a());
        let side0 = two_point_supports(m, m as f64 * p.b());
        let count = side1.len() as u128 * side0.len() as u128;
        if count > limits.max_structures {
            return Err(Error::Resource {
                what: "structure enumeration",
                required: count,
                cap: limits.max_structures,
            });
        }
        if count == 0 {
            return Err(domain("no feasible structure"));
        }
        let mut bench = Vec::with_capacity(count as usize);
        for u1 in &side1 {
            for u0 in &side0 {
                let theta = InfoStructure::new(*p, u1.clone(), u0.clone())?;
                bench.push(benchmark(&theta, kind).expected_loss);
            }
        }
        Ok(Self {
            params: *p,
            kind,
            interior_only,
            dense1: side1.iter().map(CondDist::dense).collect(),
            dense0: side0.iter().map(CondDist::dense).collect(),
            side1,
            side0,
            bench,
        })
    }

    pub fn structure_count(&self) -> usize {
        self.bench.len()
    }

    /// Size of the pure strategy space the factorization replaces.
    pub fn pure_strategy_count(&self) -> f64 {
        let p = &self.params;
        ((p.k() + 1) as f64).powi(2 * (p.truthful() as i32 + 1))
    }

    pub fn structure(&self, i: usize, j: usize) -> InfoStructure {
        InfoStructure::new(self.params, self.side1[i].clone(), self.side0[j].clone())
            .expect("enumerated structures are feasible")
    }

    fn reply_range(&self, x_t: usize) -> std::ops::RangeInclusive<usize> {
        let (n, k) = (self.params.n(), self.params.k());
        if self.interior_only {
            k.saturating_sub(x_t)..=k.min(n - k - x_t)
        } else {
            0..=k
        }
    }

    /// Adversary's best pure reply (smallest on ties) and its loss.
    fn best_reply(&self, values: &[f64], omega: u8, x_t: usize) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for j in self.reply_range(x_t) {
            let l = self.kind.eval(values[x_t + j], omega);
            if l > best.1 {
                best = (j, l);
            }
        }
        best
    }

    /// Exact maximum regret of the aggregator given by `values`.
    pub fn max_regret_values(&self, values: &[f64]) -> GridMax {
        let m = self.params.truthful();
        let mu = self.params.mu();
        let mut w1 = [0.0f64; 64];
        let mut w0 = [0.0f64; 64];
        let (w1, w0): (&mut [f64], &mut [f64]) = if m < 64 {
            (&mut w1[..=m], &mut w0[..=m])
        } else {
            return self.max_regret_slow(values);
        };
        for x in 0..=m {
            w1[x] = self.best_reply(values, 1, x).1;
            w0[x] = self.best_reply(values, 0, x).1;
        }
        let a1: Vec<f64> = self.dense1.iter().map(|d| mu * dot(d, w1)).collect();
        let a0: Vec<f64> = self.dense0.iter().map(|d| (1.0 - mu) * dot(d, w0)).collect();
        let s0 = a0.len();
        let mut best = GridMax {
            regret: f64::NEG_INFINITY,
            u1_index: 0,
            u0_index: 0,
        };
        for (i, x1) in a1.iter().enumerate() {
            for (j, x0) in a0.iter().enumerate() {
                let r = x1 + x0 - self.bench[i * s0 + j];
                if r > best.regret {
                    best = GridMax {
                        regret: r,
                        u1_index: i,
                        u0_index: j,
                    };
                }
            }
        }
        best
    }

    fn max_regret_slow(&self, values: &[f64]) -> GridMax {
        let m = self.params.truthful();
        let mu = self.params.mu();
        let w1: Vec<f64> = (0..=m).map(|x| self.best_reply(values, 1, x).1).collect();
        let w0: Vec<f64> = (0..=m).map(|x| self.best_reply(values, 0, x).1).collect();
        let s0 = self.dense0.len();
        let mut best = GridMax {
            regret: f64::NEG_INFINITY,
            u1_index: 0,
            u0_index: 0,
        };
        for (i, d1) in self.dense1.iter().enumerate() {
            for (j, d0) in self.dense0.iter().enumerate() {
                let r = mu * dot(d1, &w1) + (1.0 - mu) * dot(d0, &w0) - self.bench[i * s0 + j];
                if r > best.regret {
                    best = GridMax {
                        regret: r,
                        u1_index: i,
                        u0_index: j,
                    };
                }
            }
        }
        best
    }

    /// Witness structure and best-reply strategy for `values`.
    pub fn witness(&self, values: &[f64], at: GridMax) -> WorstCase {
        let theta = self.structure(at.u1_index, at.u0_index);
        let p = self.params;
        let sigma = AdversaryStrategy::pure(p.k(), p.truthful(), |omega, x_t| {
            self.best_reply(values, omega, x_t).0
        });
        let degenerate = theta.u1().iter().any(|(x, _)| theta.u0().prob(x) > 0.0);
        WorstCase {
            benchmark_loss: self.bench[at.u1_index * self.side0.len() + at.u0_index],
            degenerate,
            theta,
            sigma,
            description: "oracle witness".into(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact worst-case regret of `f` with a witness structure and strategy.
pub fn brute_force_max_regret(f: &Aggregator, p: &Params, kind: LossKind) -> Result<(f64, WorstCase)> {
    if f.n() != p.n() {
        return Err(domain(format!("aggregator has n={}, instance n={}", f.n(), p.n())));
    }
    let grid = OracleGrid::new(p, kind, false, OracleLimits::default())?;
    let at = grid.max_regret_values(f.values());
    Ok((at.regret, grid.witness(f.values(), at)))
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimaxResult {
    pub aggregator: Aggregator,
    pub regret: f64,
    pub breakpoints: Vec<usize>,
    pub candidates: u128,
    pub delta: f64,
}

/// Breakpoints `{0, 1, k, n-k, n-1, n}` clipped and deduplicated.
pub fn breakpoints(n: usize, k: usize) -> Vec<usize> {
    let mut b = vec![0, 1.min(n), k, n - k, n.saturating_sub(1), n];
    b.sort_unstable();
    b.dedup();
    b
}

fn binomial(n: u128, r: u128) -> u128 {
    let mut out: u128 = 1;
    for i in 0..r {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// Grid minimax over piecewise-linear aggregators with knots at [`breakpoints`].
pub fn brute_force_minimax(p: &Params, kind: LossKind, delta: f64) -> Result<MinimaxResult> {
    search_minimax(
        p,
        kind,
        SearchOptions {
            delta,
            ..SearchOptions::default()
        },
    )
}

pub fn search_minimax(p: &Params, kind: LossKind, opts: SearchOptions) -> Result<MinimaxResult> {
    if !(opts.delta > 0.0 && opts.delta <= 1.0) {
        return Err(domain(format!("grid step {} outside (0, 1]", opts.delta)));
    }
    let levels = (1.0 / opts.delta).round() as usize;
    let bps = breakpoints(p.n(), p.k());
    let dims = bps.len();
    let g = levels as u128 + 1;
    let candidates = if opts.monotone {
        binomial(levels as u128 + dims as u128, dims as u128)
    } else {
        g.checked_pow(dims as u32).unwrap_or(u128::MAX)
    };
    if candidates > opts.limits.max_candidates {
        return Err(Error::Resource {
            what: "aggregator grid",
            required: candidates,
            cap: opts.limits.max_candidates,
        });
    }
    let grid = OracleGrid::new(p, kind, opts.interior_only, opts.limits)?;

    // Interpolation weights from knot values to integer points.
    let n = p.n();
    let interp: Vec<(usize, usize, f64)> = (0..=n)
        .map(|x| {
            let i = bps.partition_point(|&b| b <= x) - 1;
            if bps[i] == x || i + 1 == dims {
                (i, i, 0.0)
            } else {
                let t = (x - bps[i]) as f64 / (bps[i + 1] - bps[i]) as f64;
                (i, i + 1, t)
            }
        })
        .collect();
    let scale = 1.0 / levels as f64;

    let best = (0..=levels)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; dims];
            idx[0] = first;
            let mut values = vec![0.0; n + 1];
            let mut local: Option<(f64, Vec<usize>)> = None;
            let mut visit = |idx: &[usize]| {
                for (x, &(i, j, t)) in interp.iter().enumerate() {
                    let (a, b) = (idx[i] as f64 * scale, idx[j] as f64 * scale);
                    values[x] = a + t * (b - a);
                }
                let r = grid.max_regret_values(&values).regret;
                if local.as_ref().map_or(true, |(v, _)| r < *v) {
                    local = Some((r, idx.to_vec()));
                }
            };
            walk(&mut idx, 1, levels, opts.monotone, &mut visit);
            local.expect("at least one candidate")
        })
        .reduce_with(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("nonempty grid");

    let knots: Vec<(usize, f64)> = bps
        .iter()
        .zip(&best.1)
        .map(|(&x, &i)| (x, i as f64 * scale))
        .collect();
    Ok(MinimaxResult {
        aggregator: Aggregator::from_knots(n, knots)?,
        regret: best.0,
        breakpoints: bps,
        candidates,
        delta: opts.delta,
    })
}

fn walk(idx: &mut [usize], pos: usize, levels: usize, monotone: bool, visit: &mut impl FnMut(&[usize])) {
    if pos == idx.len() {
        visit(idx);
        return;
    }
    let start = if monotone { idx[pos - 1] } else { 0 };
    for v in start..=levels {
        idx[pos] = v;
        walk(idx, pos + 1, levels, monotone, visit);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InteriorCheck {
    pub unrestricted: f64,
    pub restricted: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Compares grid minimax regret with and without restricting adversary
/// replies to keep the total count in `k..=n-k`.
pub fn verify_interior_reduction(p: &Params, kind: LossKind, delta: f64) -> Result<InteriorCheck> {
    let base = SearchOptions {
        delta,
        ..SearchOptions::default()
    };
    let unrestricted = search_minimax(p, kind, base)?.regret;
    let restricted = if p.k() == 0 {
        unrestricted
    } else {
        search_minimax(
            p,
            kind,
            SearchOptions {
                interior_only: true,
                ..base
            },
        )?
        .regret
    };
    let tolerance = 2.0 * delta;
    Ok(InteriorCheck {
        unrestricted,
        restricted,
        tolerance,
        holds: (unrestricted - restricted).abs() <= tolerance,
    })
}

/// Largest regret of `f` over random three-point structures, each paired
/// with the best pure reply. Used to probe that two-point supports suffice.
pub fn three_point_probe(
    f: &Aggregator,
    p: &Params,
    kind: LossKind,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let m = p.truthful();
    if m < 2 {
        return Err(domain("three-point supports need at least three truthful counts"));
    }
    let grid = OracleGrid::new(p, kind, false, OracleLimits::default())?;
    let sigma = AdversaryStrategy::pure(p.k(), m, |omega, x_t| grid.best_reply(f.values(), omega, x_t).0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < samples && attempts < samples * 1000 {
        attempts += 1;
        let (Some(u1), Some(u0)) = (
            random_three_point(&mut rng, m, m as f64 * p.a()),
            random_three_point(&mut rng, m, m as f64 * p.b()),
        ) else {
            continue;
        };
        let theta = InfoStructure::new(*p, u1, u0)?;
        worst = worst.max(regret(f, &theta, &sigma, kind)?);
        drawn += 1;
    }
    Ok(worst)
}

fn random_three_point(rng: &mut ChaCha8Rng, m: usize, mean: f64) -> Option<CondDist> {
    let mut pts = [rng.gen_range(0..=m), rng.gen_range(0..=m), rng.gen_range(0..=m)];
    pts.sort_unstable();
    if pts[0] == pts[1] || pts[1] == pts[2] {
        return None;
    }
    let [x, y, z] = pts.map(|v| v as f64);
    // Mix the two-point distributions {x, z} and {y, z} or {x, y} to hit the mean.
    let left = if mean <= y { (x, y) } else { (y, z) };
    if mean < x || mean > z {
        return None;
    }
    let outer_q = (mean - x) / (z - x);
    let inner_q = (mean - left.0) / (left.1 - left.0);
    let lam: f64 = rng.gen_range(0.05..0.95);
    let mut probs = [0.0; 3];
    probs[0] += lam * (1.0 - outer_q);
    probs[2] += lam * outer_q;
    if mean <= y {
        probs[0] += (1.0 - lam) * (1.0 - inner_q);
        probs[1] += (1.0 - lam) * inner_q;
    } else {
        probs[1] += (1.0 - lam) * (1.0 - inner_q);
        probs[2] += (1.0 - lam) * inner_q;
    }
    let total: f64 = probs.iter().sum();
    CondDist::new(m, pts.iter().copied().zip(probs.map(|q| q / total))).ok()
}

/// Random mixed strategy for `(k, truthful)` from `rng`.
pub fn random_mixed_strategy(rng: &mut impl Rng, k: usize, truthful: usize) -> AdversaryStrategy {
    let mut table: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    for rows in table.iter_mut() {
        for _ in 0..=truthful {
            let raw: Vec<f64> = (0..=k).map(|_| rng.gen_range(0.0..1.0f64) + 1e-9).collect();
            let s: f64 = raw.iter().sum();
            let mut row: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let head: f64 = row[..k].iter().sum();
            row[k] = 1.0 - head;
            rows.push(row);
        }
    }
    AdversaryStrategy::mixed(k, truthful, table).expect("rows are normalized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{k_ignorance_dictator, l2_adversarial_aggregator, l2_adversarial_regret};
    use crate::worst_case::worst_structure_l2;

    fn params(n: usize, k: usize) -> Params {
        Params::new(n, k, 0.5, 0.8, 0.1).unwrap()
    }

    #[test]
    fn supports_meet_mean() {
        for d in two_point_supports(8, 6.4) {
            assert!((d.mean() - 6.4).abs() < 1e-12);
            assert!(d.support().len() <= 2);
        }
        let singles = two_point_supports(10, 1.0);
        assert_eq!(singles[0].support(), vec![0, 2]);
        assert!(singles.iter().any(|d| d.support() == vec![1]));
    }

    #[test]
    fn truncated_mean_worst_regret() {
        let p = params(10, 2);
        let f = k_ignorance_dictator(10, 2).unwrap();
        let (r, _) = brute_force_max_regret(&f, &p, LossKind::L1).unwrap();
        assert!((r - 0.2).abs() < 1e-6);
    }

    #[test]
    fn hard_sigmoid_worst_regret_and_witness() {
        let p = params(10, 2);
        let f = l2_adversarial_aggregator(&p).unwrap();
        let (r, wc) = brute_force_max_regret(&f, &p, LossKind::L2).unwrap();
        assert!((r - l2_adversarial_regret(&p).unwrap()).abs() < 1e-6);
        let star = worst_structure_l2(&p).unwrap();
        let at_witness = regret(&f, &wc.theta, &wc.sigma, LossKind::L2).unwrap();
        let at_star = regret(&f, &star.theta, &star.sigma, LossKind::L2).unwrap();
        assert!((at_witness - r).abs() < 1e-12);
        assert!((at_star - r).abs() < 1e-9);
    }

    #[test]
    fn single_member_family_benchmark_has_zero_regret() {
        // m = 1 truthful-count domain {0..=3}: mean 3a = 3 forces a point mass.
        let p = Params::new(3, 0, 0.5, 1.0, 0.0).unwrap();
        let grid = OracleGrid::new(&p, LossKind::L2, false, OracleLimits::default()).unwrap();
        assert_eq!(grid.structure_count(), 1);
        let f = Aggregator::from_values(vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        let (r, _) = brute_force_max_regret(&f, &p, LossKind::L2).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn resource_cap_reports_count() {
        let p = params(10, 2);
        let opts = SearchOptions {
            limits: OracleLimits {
                max_structures: 1_000_000,
                max_candidates: 10,
            },
            ..SearchOptions::default()
        };
        match search_minimax(&p, LossKind::L1, opts) {
            Err(Error::Resource { required, .. }) => assert!(required > 10),
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn breakpoint_sets() {
        assert_eq!(breakpoints(4, 1), vec![0, 1, 3, 4]);
        assert_eq!(breakpoints(10, 2), vec![0, 1, 2, 8, 9, 10]);
        assert_eq!(breakpoints(4, 0), vec![0, 1, 3, 4]);
    }

    #[test]
    fn pure_replies_dominate_mixed() {
        let p = params(6, 1);
        let f = l2_adversarial_aggregator(&p).unwrap();
        let (pure_max, _) = brute_force_max_regret(&f, &p, LossKind::L2).unwrap();
        let grid = OracleGrid::new(&p, LossKind::L2, false, OracleLimits::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in 0..200 {
            let sigma = random_mixed_strategy(&mut rng, 1, 5);
            let i = t % grid.side1.len();
            let j = (t / 3) % grid.side0.len();
            let r = regret(&f, &grid.structure(i, j), &sigma, LossKind::L2).unwrap();
            assert!(r <= pure_max + 1e-12);
        }
    }

    #[test]
    fn three_point_structures_do_not_exceed_two_point_max() {
        for (n, k, kind) in [(6, 1, LossKind::L2), (6, 1, LossKind::L1), (8, 2, LossKind::L2)] {
            let p = params(n, k);
            let f = k_ignorance_dictator(n, k).unwrap();
            let (two, _) = brute_force_max_regret(&f, &p, kind).unwrap();
            let three = three_point_probe(&f, &p, kind, 300, 11).unwrap();
            assert!(three <= two + 1e-12, "{three} > {two}");
        }
    }

    #[test]
    fn interior_restriction_keeps_minimax() {
        for kind in [LossKind::L1, LossKind::L2] {
            let p = Params::new(5, 1, 0.5, 0.8, 0.1).unwrap();
            let c = verify_interior_reduction(&p, kind, 0.05).unwrap();
            assert!(c.holds, "{kind}: {c:?}");
            assert!(c.restricted <= c.unrestricted + 1e-12);
        }
    }

}
