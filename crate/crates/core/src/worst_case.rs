//! Worst-case information structures and adversary strategies.

use serde::Serialize;

use crate::closed_form::l2_threshold;
use crate::error::{domain, Result};
use crate::model::{
    benchmark, AdversaryStrategy, Aggregator, CondDist, InfoStructure, LossKind, Params, MEAN_TOL,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstCase {
    pub theta: InfoStructure,
    pub sigma: AdversaryStrategy,
    pub benchmark_loss: f64,
    pub description: String,
    /// Truthful supports overlap, so the benchmark loss is positive.
    pub degenerate: bool,
}

/// Whether both mean constraints hold for distributions over `{0..=n-k}`.
pub fn check_feasible(u1: &CondDist, u0: &CondDist, p: &Params) -> bool {
    let m = p.truthful();
    u1.domain_max() == m
        && u0.domain_max() == m
        && (u1.mean() - m as f64 * p.a()).abs() <= MEAN_TOL
        && (u0.mean() - m as f64 * p.b()).abs() <= MEAN_TOL
}

/// Adversaries report L under state 1 and H under state 0.
pub fn opposing_strategy(p: &Params) -> AdversaryStrategy {
    let k = p.k();
    AdversaryStrategy::pure(k, p.truthful(), |omega, _| if omega == 1 { 0 } else { k })
}

fn finish(theta: InfoStructure, sigma: AdversaryStrategy, description: String) -> WorstCase {
    let b1: Vec<usize> = theta.u1().support();
    let degenerate = theta.u0().iter().any(|(x, _)| b1.contains(&x));
    let benchmark_loss = benchmark(&theta, LossKind::L2).expected_loss;
    WorstCase {
        theta,
        sigma,
        benchmark_loss,
        description,
        degenerate,
    }
}

/// The instance on which the L2 hard sigmoid attains its worst regret:
/// `u1` on `{k, n-k}`, `u0` on `{0, n-2k}`, adversaries opposing the state.
pub fn worst_structure_l2(p: &Params) -> Result<WorstCase> {
    let (n, k, g) = (p.n(), p.k(), p.gamma());
    let t = l2_threshold(p);
    if !(g > 0.0 && g < t) {
        return Err(domain(format!("gamma={g} outside (0, {t})")));
    }
    let m = p.truthful();
    let (mean1, mean0) = (m as f64 * p.a(), m as f64 * p.b());
    if mean1 < k as f64 || mean0 > (n - 2 * k) as f64 {
        return Err(domain("required means fall outside the construction's supports"));
    }
    let u1 = CondDist::two_point(m, k, m, mean1)?;
    let u0 = CondDist::two_point(m, 0, n - 2 * k, mean0)?;
    let theta = InfoStructure::new(*p, u1, u0)?;
    Ok(finish(
        theta,
        opposing_strategy(p),
        "L2 worst case: u1 on {k, n-k}, u0 on {0, n-2k}, adversaries oppose the state".into(),
    ))
}

/// Two-point structure with `supp(u1) = {x1, x2}` and
/// `supp(u0) = {x3 - k, x4 - k}`, adversaries opposing the state.
pub fn worst_structure_l1(p: &Params, x: [usize; 4]) -> Result<WorstCase> {
    let (n, k) = (p.n(), p.k());
    let m = p.truthful();
    let [x1, x2, x3, x4] = x;
    if x1 > x2 || x3 > x4 {
        return Err(domain("need x1 <= x2 and x3 <= x4"));
    }
    if x.iter().any(|&xi| xi < k || xi > n - k) {
        return Err(domain(format!("points must lie in {k}..={}", n - k)));
    }
    let pts = [x1, x2, x3 - k, x4 - k];
    for i in 0..4 {
        for j in i + 1..4 {
            if pts[i] == pts[j] {
                return Err(domain(format!("x1, x2, x3-k, x4-k must be distinct, got {pts:?}")));
            }
        }
    }
    let (mean1, mean0) = (m as f64 * p.a(), m as f64 * p.b());
    if !(x1 as f64 <= mean1 + MEAN_TOL && mean1 <= x2 as f64 + MEAN_TOL) {
        return Err(domain(format!("(n-k)a={mean1} outside [{x1}, {x2}]")));
    }
    let shifted0 = mean0 + k as f64;
    if !(x3 as f64 <= shifted0 + MEAN_TOL && shifted0 <= x4 as f64 + MEAN_TOL) {
        return Err(domain(format!("k+(n-k)b={shifted0} outside [{x3}, {x4}]")));
    }
    let u1 = CondDist::two_point(m, x1, x2, mean1)?;
    let u0 = CondDist::two_point(m, x3 - k, x4 - k, mean0)?;
    let theta = InfoStructure::new(*p, u1, u0)?;
    Ok(finish(
        theta,
        opposing_strategy(p),
        format!("L1 worst case: supp(u1)={{{x1},{x2}}}, supp(u0)={{{},{}}}", x3 - k, x4 - k),
    ))
}

/// Replaces values below `k` by `f(k)` and above `n - k` by `f(n - k)`.
pub fn clamp_to_interior(f: &Aggregator, p: &Params) -> Result<Aggregator> {
    let (n, k) = (p.n(), p.k());
    if f.n() != n {
        return Err(domain(format!("aggregator has n={}, instance n={n}", f.n())));
    }
    let values = (0..=n).map(|x| f.value(x.clamp(k, n - k))).collect();
    Aggregator::from_values(values)
}

/// Pair of instances with disjoint truthful supports on `{0, 1, m-1, m}`
/// whose equal mixture becomes uninformative as `a` approaches `b`.
/// Requires `1 <= m*b` and `m*a <= m-1` where `m = n - k`.
pub fn warmup_pair(p: &Params) -> Result<[InfoStructure; 2]> {
    let m = p.truthful();
    if m < 3 {
        return Err(domain("need at least three truthful experts"));
    }
    let (mean1, mean0) = (m as f64 * p.a(), m as f64 * p.b());
    if mean0 < 1.0 || mean1 > (m - 1) as f64 {
        return Err(domain(format!(
            "need 1 <= (n-k)b and (n-k)a <= n-k-1, got {mean0} and {mean1}"
        )));
    }
    let outer = |mean| CondDist::two_point(m, 0, m, mean);
    let inner = |mean| CondDist::two_point(m, 1, m - 1, mean);
    Ok([
        InfoStructure::new(*p, outer(mean1)?, inner(mean0)?)?,
        InfoStructure::new(*p, inner(mean1)?, outer(mean0)?)?,
    ])
}

/// Smallest L2 regret any single forecast rule achieves on the equal mixture
/// of two zero-benchmark instances.
pub fn mixture_bayes_loss(pair: &[InfoStructure; 2]) -> f64 {
    let mu = pair[0].params().mu();
    let avg = |omega: u8| -> Vec<f64> {
        let (d, e) = (pair[0].u(omega).dense(), pair[1].u(omega).dense());
        d.iter().zip(&e).map(|(x, y)| 0.5 * (x + y)).collect()
    };
    let (q1, q0) = (avg(1), avg(0));
    q1.iter()
        .zip(&q0)
        .map(|(&a, &b)| {
            let (w1, w0) = (mu * a, (1.0 - mu) * b);
            if w1 + w0 > 0.0 {
                w1 * w0 / (w1 + w0)
            } else {
                0.0
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{k_ignorance_dictator, l2_adversarial_aggregator};
    use crate::model::{induced_conditionals, regret};
    use proptest::prelude::*;

    fn params(n: usize, k: usize) -> Params {
        Params::new(n, k, 0.5, 0.8, 0.1).unwrap()
    }

    #[test]
    fn feasibility_examples() {
        let p = params(10, 2);
        let q = 8.0 * 0.2 / 6.0;
        let u1 = CondDist::new(8, [(2, q), (8, 1.0 - q)]).unwrap();
        let u0 = CondDist::two_point(8, 0, 6, 0.8).unwrap();
        assert!(check_feasible(&u1, &u0, &p));
        let p0 = Params::new(10, 0, 0.5, 0.8, 0.1).unwrap();
        let u1 = CondDist::point(10, 8).unwrap();
        let u0 = CondDist::point(10, 1).unwrap();
        assert!(check_feasible(&u1, &u0, &p0));
        let bad = CondDist::point(10, 0).unwrap();
        assert!(!check_feasible(&bad, &u0, &p0));
    }

    #[test]
    fn l2_construction_supports() {
        let wc = worst_structure_l2(&params(10, 2)).unwrap();
        assert_eq!(wc.theta.u1().support(), vec![2, 8]);
        assert_eq!(wc.theta.u0().support(), vec![0, 6]);
        assert_eq!(wc.benchmark_loss, 0.0);
        assert!(!wc.degenerate);
        let (v1, v0) = induced_conditionals(&wc.theta, &wc.sigma).unwrap();
        assert_eq!(v1.support(), vec![2, 8]);
        assert_eq!(v0.support(), vec![2, 8]);
        let w1 = 0.5 * v1.prob(2);
        let w0 = 0.5 * v0.prob(2);
        assert!((w1 / (w1 + w0) - 0.235294117647059).abs() < 1e-12);
    }

    #[test]
    fn l2_construction_degenerate_at_three_k() {
        let wc = worst_structure_l2(&Params::new(9, 3, 0.5, 0.9, 0.1).unwrap()).unwrap();
        assert!(wc.degenerate);
        assert!(wc.benchmark_loss > 0.0);
    }

    /// The literal table "sigma(x) = k at x in {0, n-k}" applied state-independently
    /// shifts u1's upper point out of range and cannot give the stated posteriors.
    #[test]
    fn state_independent_reading_disagrees() {
        let p = params(10, 2);
        let wc = worst_structure_l2(&p).unwrap();
        let literal = AdversaryStrategy::pure(2, 8, |_, x| if x == 0 || x == 8 { 2 } else { 0 });
        let (v1, v0) = induced_conditionals(&wc.theta, &literal).unwrap();
        assert_ne!(v1.support(), vec![2, 8]);
        assert_ne!(v0.support(), vec![2, 8]);
        let (s1, s0) = induced_conditionals(&wc.theta, &wc.sigma).unwrap();
        assert_eq!((s1.support(), s0.support()), (vec![2, 8], vec![2, 8]));
    }

    #[test]
    fn l1_construction() {
        let p = params(10, 2);
        let wc = worst_structure_l1(&p, [2, 8, 2, 8]).unwrap();
        assert_eq!(wc.benchmark_loss, 0.0);
        let f = k_ignorance_dictator(10, 2).unwrap();
        let r = regret(&f, &wc.theta, &wc.sigma, LossKind::L1).unwrap();
        assert!((r - 0.2).abs() < 1e-9);
        assert!(worst_structure_l1(&p, [2, 8, 4, 8]).is_err());
    }

    #[test]
    fn clamp_examples() {
        let p = params(10, 2);
        let f = k_ignorance_dictator(10, 2).unwrap();
        assert_eq!(clamp_to_interior(&f, &p).unwrap().values(), f.values());
        let lin = Aggregator::from_values((0..=10).map(|x| x as f64 / 10.0).collect()).unwrap();
        let c = clamp_to_interior(&lin, &p).unwrap();
        assert_eq!(&c.values()[..3], &[0.2, 0.2, 0.2]);
        assert_eq!(&c.values()[8..], &[0.8, 0.8, 0.8]);
        let p0 = params(10, 0);
        assert_eq!(clamp_to_interior(&lin, &p0).unwrap().values(), lin.values());
    }

    #[test]
    fn warmup_constants() {
        let p = Params::new(10, 0, 0.3, 0.5, 0.2).unwrap();
        let pair = warmup_pair(&p).unwrap();
        let none = AdversaryStrategy::none(10);
        for theta in &pair {
            let half = Aggregator::constant(10, 0.5).unwrap();
            let prior = Aggregator::constant(10, 0.3).unwrap();
            let r = regret(&half, theta, &none, LossKind::L2).unwrap();
            assert!((r - 0.25).abs() < 1e-12);
            let r = regret(&prior, theta, &none, LossKind::L2).unwrap();
            assert!((r - 0.21).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn l2_construction_posterior_matches(
            n in 5usize..60, kf in 0.0f64..1.0, mu in 0.05f64..0.95, a in 0.3f64..1.0, b in 0.0f64..0.5
        ) {
            prop_assume!(b < a);
            let p0 = Params::new(n, 0, mu, a, b).unwrap();
            let kmax = ((l2_threshold(&p0) * n as f64).ceil() as usize).saturating_sub(1);
            prop_assume!(kmax >= 1);
            let k = 1 + ((kmax - 1) as f64 * kf) as usize;
            let p = p0.with_k(k).unwrap();
            prop_assume!(crate::closed_form::l2_adversarial(&p).unwrap().valid);
            let wc = worst_structure_l2(&p).unwrap();
            prop_assert!(check_feasible(wc.theta.u1(), wc.theta.u0(), &p));
            let f = l2_adversarial_aggregator(&p).unwrap();
            let (v1, v0) = induced_conditionals(&wc.theta, &wc.sigma).unwrap();
            for x in v1.support().into_iter().chain(v0.support()) {
                let (w1, w0) = (mu * v1.prob(x), (1.0 - mu) * v0.prob(x));
                prop_assert!((w1 / (w1 + w0) - f.value(x)).abs() < 1e-12);
            }
        }

        #[test]
        fn l1_construction_regret_of_endpoint_sigmoids(
            n in 5usize..30, k in 0usize..6, inner in proptest::collection::vec(0.0f64..1.0, 30)
        ) {
            prop_assume!(2 * k < n);
            let p = Params::new(n, k, 0.5, 0.8, 0.1).unwrap();
            let Ok(wc) = worst_structure_l1(&p, [k, n - k, k, n - k]) else { return Ok(()); };
            let mut mids: Vec<f64> = inner[..(n - 2 * k).saturating_sub(1)].to_vec();
            mids.sort_by(f64::total_cmp);
            let mut values = vec![0.0; k + 1];
            values.extend(mids);
            values.extend(vec![1.0; k + 1]);
            let f = Aggregator::from_values(values).unwrap();
            let r = regret(&f, &wc.theta, &wc.sigma, LossKind::L1).unwrap();
            let m = (n - k) as f64;
            let want = 0.5 + (0.5 * (m * 0.1 + k as f64) - 0.5 * m * 0.8) / (n - 2 * k) as f64;
            prop_assert!((r - want).abs() < 1e-9);
        }
    }
}
