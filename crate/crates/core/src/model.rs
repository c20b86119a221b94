//! Problem instances, distributions, strategies, aggregators and the regret functional.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance on probability sums.
pub const PROB_TOL: f64 = 1e-12;
/// Tolerance on mean constraints.
pub const MEAN_TOL: f64 = 1e-9;

/// A problem instance: `n` experts, `k` of them adversarial, prior `mu`,
/// and signal accuracies `a = Pr[H | 1]`, `b = Pr[H | 0]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Params {
    n: usize,
    k: usize,
    mu: f64,
    a: f64,
    b: f64,
}

impl Params {
    /// Requires `2k < n`, all probabilities in `[0, 1]` and `b < a`.
    pub fn new(n: usize, k: usize, mu: f64, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain("n must be positive"));
        }
        if 2 * k >= n {
            return Err(domain(format!("need 2k < n, got n={n}, k={k}")));
        }
        for (name, v) in [("mu", mu), ("a", a), ("b", b)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(domain(format!("{name}={v} outside [0, 1]")));
            }
        }
        if b >= a {
            return Err(domain(format!("need b < a, got a={a}, b={b}")));
        }
        Ok(Self { n, k, mu, a, b })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of truthful experts, `n - k`.
    pub fn truthful(&self) -> usize {
        self.n - self.k
    }

    pub fn gamma(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Posterior of state 1 after a single H signal.
    pub fn p1(&self) -> f64 {
        let h = self.mu * self.a;
        h / (h + (1.0 - self.mu) * self.b)
    }

    /// Posterior of state 1 after a single L signal.
    pub fn p0(&self) -> f64 {
        let l = self.mu * (1.0 - self.a);
        l / (l + (1.0 - self.mu) * (1.0 - self.b))
    }

    /// Whether `p0 < 1/2 < p1`.
    pub fn signals_ordered(&self) -> bool {
        self.p0() < 0.5 && 0.5 < self.p1()
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.k, self.mu, self.a, self.b)
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.n, k, self.mu, self.a, self.b)
    }
}

/// Distribution over report counts `{0..=domain_max}`, stored sparsely.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CondDist {
    domain_max: usize,
    mass: Vec<(usize, f64)>,
}

impl CondDist {
    /// Builds a distribution from `(point, probability)` pairs. Zero-mass
    /// entries are dropped; duplicates and out-of-range points are rejected.
    pub fn new(domain_max: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut mass: Vec<(usize, f64)> = Vec::new();
        for (x, p) in pairs {
            if x > domain_max {
                return Err(domain(format!("support point {x} exceeds {domain_max}")));
            }
            if !p.is_finite() || p < 0.0 || p > 1.0 + PROB_TOL {
                return Err(domain(format!("probability {p} at {x} is invalid")));
            }
            if p > 0.0 {
                mass.push((x, p));
            }
        }
        mass.sort_by_key(|&(x, _)| x);
        if mass.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(domain("duplicate support point"));
        }
        let total: f64 = mass.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(domain(format!("probabilities sum to {total}")));
        }
        Ok(Self { domain_max, mass })
    }

    pub fn point(domain_max: usize, x: usize) -> Result<Self> {
        Self::new(domain_max, [(x, 1.0)])
    }

    /// Builds from a dense probability vector of length `domain_max + 1`.
    pub fn from_dense(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(domain("empty probability vector"));
        }
        Self::new(probs.len() - 1, probs.iter().copied().enumerate())
    }

    /// Two-point distribution on `{lo, hi}` with the given mean.
    pub fn two_point(domain_max: usize, lo: usize, hi: usize, mean: f64) -> Result<Self> {
        if lo == hi {
            if (lo as f64 - mean).abs() > MEAN_TOL {
                return Err(domain(format!("point {lo} cannot have mean {mean}")));
            }
            return Self::point(domain_max, lo);
        }
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let q = (mean - lo as f64) / (hi - lo) as f64;
        if !(-MEAN_TOL..=1.0 + MEAN_TOL).contains(&q) {
            return Err(domain(format!("mean {mean} outside [{lo}, {hi}]")));
        }
        let q = q.clamp(0.0, 1.0);
        Self::new(domain_max, [(lo, 1.0 - q), (hi, q)])
    }

    pub fn domain_max(&self) -> usize {
        self.domain_max
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mass.iter().copied()
    }

    pub fn support(&self) -> Vec<usize> {
        self.mass.iter().map(|&(x, _)| x).collect()
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.mass
            .binary_search_by_key(&x, |&(y, _)| y)
            .map(|i| self.mass[i].1)
            .unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().map(|&(x, p)| x as f64 * p).sum()
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.domain_max + 1];
        for &(x, p) in &self.mass {
            out[x] = p;
        }
        out
    }
}

/// Truthful report-count distributions under each state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoStructure {
    params: Params,
    u1: CondDist,
    u0: CondDist,
}

impl InfoStructure {
    /// Both distributions must live on `{0..=n-k}` and have means
    /// `(n-k)a` and `(n-k)b`.
    pub fn new(params: Params, u1: CondDist, u0: CondDist) -> Result<Self> {
        let m = params.truthful();
        if u1.domain_max != m || u0.domain_max != m {
            return Err(domain(format!("distributions must be over 0..={m}")));
        }
        let (want1, want0) = (m as f64 * params.a, m as f64 * params.b);
        if (u1.mean() - want1).abs() > MEAN_TOL {
            return Err(domain(format!("mean of u1 is {}, expected {want1}", u1.mean())));
        }
        if (u0.mean() - want0).abs() > MEAN_TOL {
            return Err(domain(format!("mean of u0 is {}, expected {want0}", u0.mean())));
        }
        Ok(Self { params, u1, u0 })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }
    pub fn u1(&self) -> &CondDist {
        &self.u1
    }
    pub fn u0(&self) -> &CondDist {
        &self.u0
    }
    pub fn u(&self, omega: u8) -> &CondDist {
        if omega == 1 {
            &self.u1
        } else {
            &self.u0
        }
    }
}

/// Adversary behaviour: for each state and truthful count, a distribution
/// over the number of adversarial H reports in `{0..=k}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversaryStrategy {
    k: usize,
    truthful: usize,
    /// `table[omega][x_t][j]`.
    table: [Vec<Vec<f64>>; 2],
}

impl AdversaryStrategy {
    /// The strategy with no adversaries.
    pub fn none(truthful: usize) -> Self {
        Self::pure(0, truthful, |_, _| 0)
    }

    /// Deterministic strategy: `choose(omega, x_t)` adversaries report H.
    /// Choices above `k` are clamped to `k`.
    pub fn pure(k: usize, truthful: usize, choose: impl Fn(u8, usize) -> usize) -> Self {
        let table = [0u8, 1].map(|w| {
            (0..=truthful)
                .map(|x| {
                    let mut row = vec![0.0; k + 1];
                    row[choose(w, x).min(k)] = 1.0;
                    row
                })
                .collect()
        });
        Self { k, truthful, table }
    }

    /// Mixed strategy from explicit rows, `table[omega][x_t]` of length `k + 1`.
    pub fn mixed(k: usize, truthful: usize, table: [Vec<Vec<f64>>; 2]) -> Result<Self> {
        for rows in &table {
            if rows.len() != truthful + 1 {
                return Err(domain("strategy table has wrong number of rows"));
            }
            for row in rows {
                if row.len() != k + 1 {
                    return Err(domain("strategy row has wrong length"));
                }
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(domain("strategy probability outside [0, 1]"));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > PROB_TOL {
                    return Err(domain(format!("strategy row sums to {s}")));
                }
            }
        }
        Ok(Self { k, truthful, table })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn truthful(&self) -> usize {
        self.truthful
    }

    /// Distribution over added H count for the given state and truthful count.
    pub fn row(&self, omega: u8, x_t: usize) -> &[f64] {
        &self.table[usize::from(omega == 1)][x_t]
    }

    pub fn is_pure(&self) -> bool {
        self.table
            .iter()
            .flatten()
            .all(|row| row.iter().all(|&p| p == 0.0 || p == 1.0))
    }
}

/// Forecast for every total H count `x` in `{0..=n}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregator {
    values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    knots: Option<Vec<(usize, f64)>>,
}

impl Aggregator {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(domain("aggregator needs at least one value"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(domain(format!("aggregator value {v} outside [0, 1]")));
        }
        Ok(Self {
            values,
            knots: None,
        })
    }

    /// Piecewise-linear aggregator through `knots`, constant beyond the
    /// first and last knot.
    pub fn from_knots(n: usize, knots: Vec<(usize, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(domain("no knots"));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(domain("knots must be strictly increasing"));
        }
        if knots.last().map_or(false, |&(x, _)| x > n) {
            return Err(domain("knot beyond n"));
        }
        let values = (0..=n).map(|x| interpolate(&knots, x)).collect();
        let mut f = Self::from_values(values)?;
        f.knots = Some(knots);
        Ok(f)
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_values(vec![c; n + 1])
    }

    /// Largest input, i.e. the expert count.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn knots(&self) -> Option<&[(usize, f64)]> {
        self.knots.as_deref()
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }
}

fn interpolate(knots: &[(usize, f64)], x: usize) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|&(kx, _)| kx <= x);
    let (x0, y0) = knots[i - 1];
    let (x1, y1) = knots[i];
    if x == x0 {
        return y0;
    }
    let t = (x - x0) as f64 / (x1 - x0) as f64;
    y0 + t * (y1 - y0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    L1,
    L2,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::L1 => "l1",
            LossKind::L2 => "l2",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(LossKind::L1),
            "l2" => Ok(LossKind::L2),
            _ => Err(domain(format!("unknown loss '{s}'"))),
        }
    }
}

impl LossKind {
    /// Loss without range checks; callers guarantee `y` in `[0, 1]`.
    #[inline]
    pub fn eval(self, y: f64, omega: u8) -> f64 {
        let d = y - f64::from(omega);
        match self {
            LossKind::L1 => d.abs(),
            LossKind::L2 => d * d,
        }
    }
}

pub fn loss(kind: LossKind, y: f64, omega: u8) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(domain(format!("forecast {y} outside [0, 1]")));
    }
    if omega > 1 {
        return Err(domain(format!("state {omega} is not binary")));
    }
    Ok(kind.eval(y, omega))
}

/// Distributions of the total H count under each state.
pub fn induced_conditionals(
    theta: &InfoStructure,
    sigma: &AdversaryStrategy,
) -> Result<(CondDist, CondDist)> {
    let p = theta.params();
    if sigma.k() != p.k() || sigma.truthful() != p.truthful() {
        return Err(domain(format!(
            "strategy shape (k={}, truthful={}) does not match instance (k={}, truthful={})",
            sigma.k(),
            sigma.truthful(),
            p.k(),
            p.truthful()
        )));
    }
    let induce = |omega: u8| {
        let mut v = vec![0.0; p.n() + 1];
        for (x_t, px) in theta.u(omega).iter() {
            for (j, &q) in sigma.row(omega, x_t).iter().enumerate() {
                v[x_t + j] += px * q;
            }
        }
        CondDist::new(p.n(), v.into_iter().enumerate())
    };
    Ok((induce(1)?, induce(0)?))
}

/// `mu * E_v1[loss(f, 1)] + (1 - mu) * E_v0[loss(f, 0)]`.
pub fn expected_loss(f: &Aggregator, v1: &CondDist, v0: &CondDist, mu: f64, kind: LossKind) -> f64 {
    let part = |v: &CondDist, omega: u8| -> f64 {
        v.iter().map(|(x, p)| p * kind.eval(f.value(x), omega)).sum()
    };
    mu * part(v1, 1) + (1.0 - mu) * part(v0, 0)
}

/// The omniscient benchmark: forecasts on positive-mass truthful counts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Benchmark {
    pub opt: BTreeMap<usize, f64>,
    pub expected_loss: f64,
}

pub fn benchmark(theta: &InfoStructure, kind: LossKind) -> Benchmark {
    let mu = theta.params().mu();
    let (d1, d0) = (theta.u1().dense(), theta.u0().dense());
    let mut opt = BTreeMap::new();
    let mut expected_loss = 0.0;
    for x in 0..d1.len() {
        let (w1, w0) = (mu * d1[x], (1.0 - mu) * d0[x]);
        if w1 + w0 <= 0.0 {
            continue;
        }
        match kind {
            LossKind::L1 => {
                opt.insert(x, if w1 >= w0 { 1.0 } else { 0.0 });
                expected_loss += w1.min(w0);
            }
            LossKind::L2 => {
                opt.insert(x, w1 / (w1 + w0));
                expected_loss += w1 * w0 / (w1 + w0);
            }
        }
    }
    Benchmark { opt, expected_loss }
}

/// Expected loss of `f` under `(theta, sigma)` minus the benchmark loss.
pub fn regret(
    f: &Aggregator,
    theta: &InfoStructure,
    sigma: &AdversaryStrategy,
    kind: LossKind,
) -> Result<f64> {
    let p = theta.params();
    if f.n() != p.n() {
        return Err(domain(format!("aggregator has n={}, instance n={}", f.n(), p.n())));
    }
    let (v1, v0) = induced_conditionals(theta, sigma)?;
    Ok(expected_loss(f, &v1, &v0, p.mu(), kind) - benchmark(theta, kind).expected_loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, k: usize) -> Params {
        Params::new(n, k, 0.5, 0.8, 0.1).unwrap()
    }

    #[test]
    fn loss_values() {
        assert!((loss(LossKind::L1, 0.6, 1).unwrap() - 0.4).abs() < 1e-15);
        assert!((loss(LossKind::L2, 0.6, 1).unwrap() - 0.16).abs() < 1e-15);
        assert_eq!(loss(LossKind::L2, 1.0, 1).unwrap(), 0.0);
        assert!(loss(LossKind::L1, 1.5, 0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(10, 5, 0.5, 0.8, 0.1).is_err());
        assert!(Params::new(10, 2, 0.5, 0.3, 0.3).is_err());
        assert!(Params::new(10, 2, 1.2, 0.8, 0.1).is_err());
        let p = params(10, 2);
        assert!((p.gamma() - 0.2).abs() < 1e-15);
        assert!(p.signals_ordered());
    }

    #[test]
    fn hand_bayes_posterior() {
        let p = Params::new(3, 1, 0.5, 0.8, 0.1).unwrap();
        let u1 = CondDist::new(2, [(1, 0.4), (2, 0.6)]).unwrap();
        let u0 = CondDist::new(2, [(0, 0.9), (2, 0.1)]).unwrap();
        let theta = InfoStructure::new(p, u1, u0).unwrap();
        let bm = benchmark(&theta, LossKind::L2);
        assert!((bm.opt[&2] - 0.3 / 0.35).abs() < 1e-15);
        assert!(!bm.opt.contains_key(&3));
    }

    #[test]
    fn disjoint_supports_have_zero_benchmark() {
        let p = params(10, 0);
        let u1 = CondDist::two_point(10, 6, 10, 8.0).unwrap();
        let u0 = CondDist::two_point(10, 0, 2, 1.0).unwrap();
        let theta = InfoStructure::new(p, u1, u0).unwrap();
        for kind in [LossKind::L1, LossKind::L2] {
            assert_eq!(benchmark(&theta, kind).expected_loss, 0.0);
        }
        let half = Aggregator::constant(10, 0.5).unwrap();
        let r = regret(&half, &theta, &AdversaryStrategy::none(10), LossKind::L2).unwrap();
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn all_h_shift_moves_mean_by_k() {
        let p = params(10, 2);
        let u1 = CondDist::two_point(8, 2, 8, 6.4).unwrap();
        let u0 = CondDist::two_point(8, 0, 6, 0.8).unwrap();
        let theta = InfoStructure::new(p, u1, u0).unwrap();
        let sigma = AdversaryStrategy::pure(2, 8, |_, _| 2);
        let (_, v0) = induced_conditionals(&theta, &sigma).unwrap();
        assert!((v0.mean() - (0.8 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn knots_interpolate() {
        let f = Aggregator::from_knots(10, vec![(2, 0.0), (8, 1.0)]).unwrap();
        assert_eq!(f.value(0), 0.0);
        assert!((f.value(5) - 0.5).abs() < 1e-15);
        assert_eq!(f.value(10), 1.0);
        assert!(Aggregator::from_values(vec![0.2, 1.1]).is_err());
    }

    #[test]
    fn mean_mismatch_rejected() {
        let p = params(10, 0);
        let u1 = CondDist::point(10, 0).unwrap();
        let u0 = CondDist::point(10, 1).unwrap();
        assert!(InfoStructure::new(p, u1, u0).is_err());
    }

    /// Random feasible structure: two-point distributions around the required means.
    fn arb_instance(max_k: usize) -> impl Strategy<Value = (InfoStructure, AdversaryStrategy)> {
        (3usize..12, 0usize..=max_k, 0.05f64..0.95, 0.0f64..1.0, 0.0f64..1.0)
            .prop_flat_map(|(n, k, mu, r1, r2)| {
                let k = k.min((n - 1) / 2);
                let (a, b) = (0.5 + 0.45 * r1, 0.45 * r2);
                let m = n - k;
                (
                    Just((n, k, mu, a, b)),
                    0..=((m as f64 * a).floor() as usize),
                    ((m as f64 * a).ceil() as usize)..=m,
                    0..=((m as f64 * b).floor() as usize),
                    ((m as f64 * b).ceil() as usize)..=m,
                    proptest::collection::vec(0usize..=k, 2 * (m + 1)),
                )
            })
            .prop_map(|((n, k, mu, a, b), l1, h1, l0, h0, picks)| {
                let p = Params::new(n, k, mu, a, b).unwrap();
                let m = n - k;
                let u1 = CondDist::two_point(m, l1, h1, m as f64 * a).unwrap();
                let u0 = CondDist::two_point(m, l0, h0, m as f64 * b).unwrap();
                let theta = InfoStructure::new(p, u1, u0).unwrap();
                let sigma =
                    AdversaryStrategy::pure(k, m, |w, x| picks[usize::from(w) * (m + 1) + x]);
                (theta, sigma)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn induced_means_within_shift_bounds((theta, sigma) in arb_instance(3)) {
            let p = *theta.params();
            let (v1, v0) = induced_conditionals(&theta, &sigma).unwrap();
            let m = p.truthful() as f64;
            let k = p.k() as f64;
            prop_assert!(v1.mean() >= m * p.a() - 1e-9 && v1.mean() <= m * p.a() + k + 1e-9);
            prop_assert!(v0.mean() >= m * p.b() - 1e-9 && v0.mean() <= m * p.b() + k + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn benchmark_has_zero_regret_without_adversaries(
            (theta, sigma) in arb_instance(0), kind in prop_oneof![Just(LossKind::L1), Just(LossKind::L2)]
        ) {
            let m = theta.params().n();
            let bm = benchmark(&theta, kind);
            let values: Vec<f64> = (0..=m).map(|x| *bm.opt.get(&x).unwrap_or(&0.5)).collect();
            let f = Aggregator::from_values(values).unwrap();
            prop_assert!(regret(&f, &theta, &sigma, kind).unwrap().abs() < 1e-12);
        }

        #[test]
        fn l2_benchmark_is_locally_optimal((theta, sigma) in arb_instance(0), pick in 0usize..64, up: bool) {
            let m = theta.params().n();
            let bm = benchmark(&theta, LossKind::L2);
            let keys: Vec<usize> = bm.opt.keys().copied().collect();
            let x = keys[pick % keys.len()];
            let base: Vec<f64> = (0..=m).map(|x| *bm.opt.get(&x).unwrap_or(&0.5)).collect();
            let mut moved = base.clone();
            moved[x] = (moved[x] + if up { 0.01 } else { -0.01 }).clamp(0.0, 1.0);
            let r0 = regret(&Aggregator::from_values(base).unwrap(), &theta, &sigma, LossKind::L2).unwrap();
            let r1 = regret(&Aggregator::from_values(moved).unwrap(), &theta, &sigma, LossKind::L2).unwrap();
            prop_assert!(r1 >= r0 - 1e-15);
        }

        #[test]
        fn expected_loss_is_linear(
            (theta, sigma) in arb_instance(3), lam in 0.0f64..1.0, seed in 0u64..1000,
            kind in prop_oneof![Just(LossKind::L1), Just(LossKind::L2)]
        ) {
            let p = *theta.params();
            let n = p.n();
            let values: Vec<f64> = (0..=n).map(|x| ((x as u64 * 7919 + seed) % 101) as f64 / 100.0).collect();
            let f = Aggregator::from_values(values).unwrap();
            let (v1, v0) = induced_conditionals(&theta, &sigma).unwrap();
            let w1 = CondDist::point(n, n).unwrap();
            let w0 = CondDist::point(n, 0).unwrap();
            let mix = |a: &CondDist, b: &CondDist| {
                let (da, db) = (a.dense(), b.dense());
                let probs: Vec<f64> = da.iter().zip(&db).map(|(x, y)| lam * x + (1.0 - lam) * y).collect();
                CondDist::new(n, probs.into_iter().enumerate()).unwrap()
            };
            let lhs = expected_loss(&f, &mix(&v1, &w1), &mix(&v0, &w0), p.mu(), kind);
            let rhs = lam * expected_loss(&f, &v1, &v0, p.mu(), kind)
                + (1.0 - lam) * expected_loss(&f, &w1, &w0, p.mu(), kind);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
