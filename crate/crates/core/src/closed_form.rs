//! Closed-form optimal aggregators and regrets for the binary model.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{Aggregator, LossKind, Params};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormResult {
    pub aggregator: Aggregator,
    /// Present only when the threshold condition holds.
    pub regret: Option<f64>,
    pub valid: bool,
    pub threshold: f64,
}

/// Piecewise-linear aggregator that is `lo` up to `k`, `hi` from `n - k`
/// on, and linear in between.
pub fn hard_sigmoid(n: usize, k: usize, lo: f64, hi: f64) -> Result<Aggregator> {
    if 2 * k >= n {
        return Err(domain(format!("need 2k < n, got n={n}, k={k}")));
    }
    Aggregator::from_knots(n, vec![(k, lo), (n - k, hi)])
}

/// Truncated mean: drop the `k` lowest and `k` highest reports and average
/// the rest.
pub fn k_ignorance_dictator(n: usize, k: usize) -> Result<Aggregator> {
    hard_sigmoid(n, k, 0.0, 1.0)
}

/// Largest `gamma` at which the truncated-mean regret stays below `cap`,
/// given the regret `r0` at `gamma = 0`. Negative when even `gamma = 0` fails.
fn below_cap(cap: f64, r0: f64) -> f64 {
    let num = cap - r0;
    if num < 0.0 {
        num
    } else if num == 0.0 {
        0.0
    } else {
        num / (num + cap)
    }
}

/// Largest adversarial ratio for which the truncated mean is L1-optimal.
/// Its regret must stay below both constant forecasts, `mu` and `1 - mu`.
pub fn l1_threshold(p: &Params) -> f64 {
    let (mu, a, b) = (p.mu(), p.a(), p.b());
    let r0 = mu * (1.0 - a) + (1.0 - mu) * b;
    below_cap(mu, r0)
        .min(below_cap(1.0 - mu, r0))
        .min(a / (1.0 + a))
        .min((1.0 - b) / (2.0 - b))
}

/// Largest adversarial ratio (exclusive) for the L2 hard sigmoid.
pub fn l2_threshold(p: &Params) -> f64 {
    let (a, b) = (p.a(), p.b());
    (a / (1.0 + a)).min((1.0 - b) / (2.0 - b))
}

/// Worst-case L1 regret of the truncated mean, evaluated at any `gamma`.
/// Adversaries oppose the state, so the loss is `(1-gamma)/(1-2 gamma)` times
/// the random-dictator loss `mu(1-a) + (1-mu)b`.
pub fn l1_regret_expression(mu: f64, a: f64, b: f64, gamma: f64) -> f64 {
    (1.0 - gamma) / (1.0 - 2.0 * gamma) * (mu * (1.0 - a) + (1.0 - mu) * b)
}

pub fn l1_optimal(p: &Params) -> Result<ClosedFormResult> {
    let threshold = l1_threshold(p);
    let valid = p.gamma() <= threshold;
    Ok(ClosedFormResult {
        aggregator: k_ignorance_dictator(p.n(), p.k())?,
        regret: valid.then(|| l1_regret_expression(p.mu(), p.a(), p.b(), p.gamma())),
        valid,
        threshold,
    })
}

/// Endpoint values `(f_lo, f_hi)` of the L2 hard sigmoid at any `gamma`.
pub fn l2_endpoints(mu: f64, a: f64, b: f64, gamma: f64) -> Result<(f64, f64)> {
    let lo_num = mu * (1.0 - gamma) * (1.0 - a);
    let lo_den = lo_num + (1.0 - mu) * (1.0 - 2.0 * gamma - (1.0 - gamma) * b);
    let hi_num = mu * ((1.0 - gamma) * a - gamma);
    let hi_den = hi_num + (1.0 - mu) * (1.0 - gamma) * b;
    if lo_den == 0.0 || hi_den == 0.0 {
        return Err(domain(format!(
            "zero denominator at mu={mu}, a={a}, b={b}, gamma={gamma}"
        )));
    }
    Ok((lo_num / lo_den, hi_num / hi_den))
}

fn check_l2_range(p: &Params) -> Result<()> {
    let (g, t) = (p.gamma(), l2_threshold(p));
    if !(g > 0.0 && g < t) {
        return Err(domain(format!("gamma={g} outside (0, {t})")));
    }
    let (lo, hi) = l2_endpoints(p.mu(), p.a(), p.b(), g)?;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(domain(format!("endpoints ({lo}, {hi}) are not increasing in [0, 1]")));
    }
    Ok(())
}

/// Hard sigmoid optimal under L2 loss with adversaries.
pub fn l2_adversarial_aggregator(p: &Params) -> Result<Aggregator> {
    check_l2_range(p)?;
    let (lo, hi) = l2_endpoints(p.mu(), p.a(), p.b(), p.gamma())?;
    hard_sigmoid(p.n(), p.k(), lo, hi)
}

/// Worst-case L2 regret of the adversarial hard sigmoid as a rational
/// function of `(mu, a, b, gamma)`.
pub fn l2_regret_expression(mu: f64, a: f64, b: f64, gamma: f64) -> Result<f64> {
    let g = gamma;
    let num = (mu - 1.0)
        * mu
        * (g - 1.0)
        * (g * (-a * a * mu + (b - 2.0) * b * (mu - 1.0) + mu)
            + (mu * (a - b) * (a + b - 1.0) + (b - 1.0) * b));
    let den = (-(a + 1.0) * g * mu + a * mu + b * (mu - 1.0) * (g - 1.0))
        * (g * (-(a + 1.0) * mu + b * (mu - 1.0) + 2.0) + (a * mu - b * mu + b - 1.0));
    if den == 0.0 {
        return Err(domain(format!(
            "zero denominator at mu={mu}, a={a}, b={b}, gamma={gamma}"
        )));
    }
    Ok(num / den)
}

pub fn l2_adversarial_regret(p: &Params) -> Result<f64> {
    check_l2_range(p)?;
    l2_regret_expression(p.mu(), p.a(), p.b(), p.gamma())
}

/// L2 result with the validity flag. Outside the range the aggregator is
/// the hard sigmoid when its endpoints are usable, otherwise the truncated mean.
pub fn l2_adversarial(p: &Params) -> Result<ClosedFormResult> {
    let threshold = l2_threshold(p);
    if check_l2_range(p).is_ok() {
        return Ok(ClosedFormResult {
            aggregator: l2_adversarial_aggregator(p)?,
            regret: Some(l2_adversarial_regret(p)?),
            valid: true,
            threshold,
        });
    }
    let aggregator = match l2_endpoints(p.mu(), p.a(), p.b(), p.gamma()) {
        Ok((lo, hi)) if (0.0..=hi).contains(&lo) && hi <= 1.0 => {
            hard_sigmoid(p.n(), p.k(), lo, hi)?
        }
        _ => k_ignorance_dictator(p.n(), p.k())?,
    };
    Ok(ClosedFormResult {
        aggregator,
        regret: None,
        valid: false,
        threshold,
    })
}

/// What the decision maker knows when parameters are unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Knowledge {
    Nothing,
    PriorOnly,
}

/// Optimal constant aggregator and its regret when signals carry no usable
/// parameter information. L2 only.
pub fn uninformed_optimal(
    n: usize,
    knowledge: Knowledge,
    mu: Option<f64>,
    kind: LossKind,
) -> Result<(Aggregator, f64)> {
    if kind != LossKind::L2 {
        return Err(Error::Unsupported(
            "uninformed optimal aggregators are defined for L2 loss".into(),
        ));
    }
    let c = match knowledge {
        Knowledge::Nothing => 0.5,
        Knowledge::PriorOnly => {
            let mu = mu.ok_or_else(|| domain("prior-only knowledge needs mu"))?;
            if !(0.0..=1.0).contains(&mu) {
                return Err(domain(format!("mu={mu} outside [0, 1]")));
            }
            mu
        }
    };
    Ok((Aggregator::constant(n, c)?, c * (1.0 - c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, k: usize) -> Params {
        Params::new(n, k, 0.5, 0.8, 0.1).unwrap()
    }

    #[test]
    fn truncated_mean_shapes() {
        let f = k_ignorance_dictator(10, 2).unwrap();
        assert_eq!(f.value(2), 0.0);
        assert!((f.value(5) - 0.5).abs() < 1e-15);
        assert_eq!(f.value(8), 1.0);
        let g = k_ignorance_dictator(10, 0).unwrap();
        for x in 0..=10 {
            assert!((g.value(x) - x as f64 / 10.0).abs() < 1e-15);
        }
        let h = k_ignorance_dictator(5, 2).unwrap();
        assert_eq!(h.values(), &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(k_ignorance_dictator(10, 5).is_err());
    }

    #[test]
    fn thresholds() {
        let t = l1_threshold(&params(10, 2));
        assert!((t - 0.35 / 0.85).abs() < 1e-15);
        let p = Params::new(10, 2, 0.5, 1.0, 0.0).unwrap();
        assert!((l1_threshold(&p) - 0.5).abs() < 1e-15);
        let eps = 1e-6;
        let p = Params::new(10, 0, 0.5, 0.3 + eps, 0.3).unwrap();
        assert!(l1_threshold(&p) < 1e-5);
        // Above mu = 1/2 the cap 1 - mu binds: (0.12 - 0.08) / (0.04 + 0.2).
        let p = Params::new(7, 2, 0.8, 0.9, 0.4).unwrap();
        assert!((l1_threshold(&p) - 0.04 / 0.24).abs() < 1e-15);
        let p = Params::new(7, 0, 0.9, 0.6, 0.5).unwrap();
        assert!(l1_threshold(&p) < 0.0);
    }

    #[test]
    fn l1_regret_off_center_prior() {
        // Oracle values for the truncated mean at n=6.
        assert!((l1_regret_expression(0.777, 0.913, 0.403, 1.0 / 6.0) - 0.196835).abs() < 1e-12);
        assert!((l1_regret_expression(0.777, 0.913, 0.403, 1.0 / 3.0) - 0.314936).abs() < 1e-12);
    }

    #[test]
    fn l1_regret_values() {
        let r0 = l1_optimal(&params(10, 0)).unwrap();
        assert!((r0.regret.unwrap() - 0.15).abs() < 1e-12);
        let r2 = l1_optimal(&params(10, 2)).unwrap();
        assert!((r2.regret.unwrap() - 0.2).abs() < 1e-12);
        let r4 = l1_optimal(&params(10, 4)).unwrap();
        assert!(r4.valid);
        let weak = Params::new(10, 2, 0.5, 0.6, 0.4).unwrap();
        let r = l1_optimal(&weak).unwrap();
        assert!(!r.valid && r.regret.is_none());
    }

    #[test]
    fn l2_hard_sigmoid_values() {
        let f = l2_adversarial_aggregator(&params(10, 2)).unwrap();
        for x in 0..=2 {
            assert!((f.value(x) - 0.235294117647059).abs() < 1e-12);
        }
        for x in 8..=10 {
            assert!((f.value(x) - 0.846153846153846).abs() < 1e-12);
        }
        assert!((f.value(5) - 0.540723981900452).abs() < 1e-12);
        assert!(l2_adversarial_aggregator(&params(10, 0)).is_err());
    }

    #[test]
    fn l2_perfect_signals_reduce_to_truncated_mean() {
        let p = Params::new(10, 1, 0.5, 1.0, 0.0).unwrap();
        let f = l2_adversarial_aggregator(&p).unwrap();
        let g = k_ignorance_dictator(10, 1).unwrap();
        for x in 0..=10 {
            assert!((f.value(x) - g.value(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn l2_regret_limit_at_zero() {
        let at0 = l2_regret_expression(0.5, 0.8, 0.1, 0.0).unwrap();
        let near = l2_regret_expression(0.5, 0.8, 0.1, 1e-9).unwrap();
        assert!((at0 - near).abs() < 1e-8);
    }

    #[test]
    fn uninformed() {
        let (f, r) = uninformed_optimal(4, Knowledge::Nothing, None, LossKind::L2).unwrap();
        assert_eq!(f.value(0), 0.5);
        assert_eq!(r, 0.25);
        let (f, r) = uninformed_optimal(4, Knowledge::PriorOnly, Some(0.3), LossKind::L2).unwrap();
        assert_eq!(f.value(3), 0.3);
        assert!((r - 0.21).abs() < 1e-15);
        assert!(matches!(
            uninformed_optimal(4, Knowledge::Nothing, None, LossKind::L1),
            Err(Error::Unsupported(_))
        ));
    }

    proptest! {
        #[test]
        fn truncated_mean_monotone_and_symmetric(n in 1usize..40, k in 0usize..20) {
            prop_assume!(2 * k < n);
            let f = k_ignorance_dictator(n, k).unwrap();
            prop_assert!(f.is_monotone());
            for x in 0..=n {
                prop_assert!((f.value(x) + f.value(n - x) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn l1_matches_random_dictator_without_adversaries(
            n in 3usize..50, mu in 0.01f64..0.99, a in 0.0f64..1.0, b in 0.0f64..1.0
        ) {
            prop_assume!(b < a);
            let p = Params::new(n, 0, mu, a, b).unwrap();
            let r = l1_optimal(&p).unwrap();
            if r.valid {
                prop_assert!((r.regret.unwrap() - (mu + (1.0 - mu) * b - mu * a)).abs() < 1e-12);
            }
        }
    }
}
