//! Epsilon-optimal L2 aggregator without adversaries, via minimax over the
//! extreme structures supported on `{0, 1, n-1, n}`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::minimax::{Choice, Group, Piece, Problem};
use crate::model::{
    benchmark, AdversaryStrategy, Aggregator, CondDist, InfoStructure, LossKind, Params,
};

/// Gap floor for the certificate; the solver always tightens to at least this.
const GAP_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct ExtremeFamily {
    pub params: Params,
    pub structures: Vec<InfoStructure>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverResult {
    pub aggregator: Aggregator,
    /// Values at `0, 1, n-1, n`.
    pub knots: [f64; 4],
    /// Exact maximum regret over the extreme family at the returned point.
    pub regret: f64,
    /// Certified lower bound on the minimax regret over the family.
    pub lower_bound: f64,
    /// Certified optimality gap, `regret - lower_bound`.
    pub epsilon: f64,
    pub iterations: usize,
}

fn corner_points(n: usize) -> Vec<usize> {
    let mut pts = vec![0, 1, n - 1, n];
    pts.dedup();
    pts
}

/// One- and two-point distributions on `{0, 1, n-1, n}` with the given mean.
fn extreme_side(n: usize, mean: f64) -> Vec<CondDist> {
    let pts = corner_points(n);
    let mut out: Vec<CondDist> = Vec::new();
    for (i, &lo) in pts.iter().enumerate() {
        for &hi in &pts[i..] {
            if let Ok(d) = CondDist::two_point(n, lo, hi, mean) {
                if !out.contains(&d) {
                    out.push(d);
                }
            }
        }
    }
    out
}

pub fn enumerate_extreme(p: &Params) -> Result<ExtremeFamily> {
    if p.k() != 0 {
        return Err(domain("the extreme family is defined without adversaries"));
    }
    let n = p.n();
    if n < 3 {
        return Err(domain("need n >= 3"));
    }
    let side1 = extreme_side(n, n as f64 * p.a());
    let side0 = extreme_side(n, n as f64 * p.b());
    if side1.is_empty() || side0.is_empty() {
        return Err(domain("no feasible extreme distribution for one of the states"));
    }
    let mut structures = Vec::new();
    for u1 in &side1 {
        for u0 in &side0 {
            structures.push(InfoStructure::new(*p, u1.clone(), u0.clone())?);
        }
    }
    Ok(ExtremeFamily {
        params: *p,
        structures,
    })
}

fn var_of(n: usize, x: usize) -> usize {
    match x {
        0 => 0,
        1 => 1,
        _ if x == n - 1 => 2,
        _ => 3,
    }
}

/// Aggregator from the four corner values with linear interpolation between `1` and `n-1`.
pub fn corner_aggregator(n: usize, f: [f64; 4]) -> Result<Aggregator> {
    let values = (0..=n)
        .map(|x| match x {
            0 => f[0],
            _ if x == n => f[3],
            _ if n == 2 => f[1],
            _ => f[1] + (f[2] - f[1]) * (x - 1) as f64 / (n - 2) as f64,
        })
        .collect();
    Aggregator::from_values(values)
}

impl ExtremeFamily {
    fn problem(&self) -> Problem {
        let n = self.params.n();
        let mu = self.params.mu();
        let pieces = self
            .structures
            .iter()
            .map(|theta| {
                let mut groups = Vec::new();
                for (omega, weight) in [(1u8, mu), (0u8, 1.0 - mu)] {
                    for (x, px) in theta.u(omega).iter() {
                        groups.push(Group {
                            weight: weight * px,
                            choices: vec![Choice {
                                var: var_of(n, x),
                                target: f64::from(omega),
                            }],
                        });
                    }
                }
                Piece {
                    constant: -benchmark(theta, LossKind::L2).expected_loss,
                    groups,
                }
            })
            .collect();
        Problem { dim: 4, pieces }
    }

    /// Maximum L2 regret over the family of the corner-parameterized aggregator.
    pub fn objective(&self, f: [f64; 4]) -> f64 {
        self.problem().value(&f)
    }

    /// Maximum L2 regret of an arbitrary aggregator over the family.
    pub fn max_regret(&self, f: &Aggregator) -> Result<f64> {
        let none = AdversaryStrategy::none(self.params.n());
        let mut worst = f64::NEG_INFINITY;
        for theta in &self.structures {
            worst = worst.max(crate::model::regret(f, theta, &none, LossKind::L2)?);
        }
        Ok(worst)
    }
}

pub fn solve_l2_nonadversarial(p: &Params, epsilon: f64) -> Result<SolverResult> {
    if !(epsilon > 0.0) {
        return Err(domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let family = enumerate_extreme(p)?;
    let problem = family.problem();
    let sol = problem.solve(&[0.5; 4], epsilon.min(GAP_FLOOR));
    let gap = sol.upper - sol.lower;
    if gap > epsilon {
        return Err(domain(format!(
            "could not certify gap {epsilon}, reached {gap}"
        )));
    }
    let knots = [sol.x[0], sol.x[1], sol.x[2], sol.x[3]];
    Ok(SolverResult {
        aggregator: corner_aggregator(p.n(), knots)?,
        knots,
        regret: sol.upper,
        lower_bound: sol.lower,
        epsilon: gap,
        iterations: sol.iterations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceRow {
    pub n: usize,
    pub regret: f64,
    pub epsilon: f64,
}

/// Solver regret for each `n` in the range, keeping `mu, a, b` from `template`.
pub fn regret_sequence(
    template: &Params,
    ns: std::ops::RangeInclusive<usize>,
    epsilon: f64,
) -> Result<Vec<SequenceRow>> {
    ns.map(|n| {
        let p = Params::new(n, 0, template.mu(), template.a(), template.b())?;
        let r = solve_l2_nonadversarial(&p, epsilon)?;
        Ok(SequenceRow {
            n,
            regret: r.regret,
            epsilon: r.epsilon,
        })
    })
    .collect()
}

/// Smallest `C >= 0` with `R(n+1) <= R(n) + C / (n(n+1))` across the table.
pub fn fit_sequence_constant(rows: &[SequenceRow]) -> f64 {
    rows.windows(2)
        .map(|w| (w[1].regret - w[0].regret) * (w[0].n * w[1].n) as f64)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize) -> Params {
        Params::new(n, 0, 0.5, 0.8, 0.1).unwrap()
    }

    #[test]
    fn family_contents() {
        let fam = enumerate_extreme(&params(10)).unwrap();
        let has_1_9 = fam
            .structures
            .iter()
            .any(|t| t.u1().support() == vec![1, 9] && (t.u1().prob(9) - 0.875).abs() < 1e-12);
        assert!(has_1_9);
        assert!(fam.structures.iter().all(|t| t.u1().support() != vec![0, 1]));
        assert!(fam.structures.iter().any(|t| t.u0().support() == vec![1]));
        assert!(fam.structures.len() <= 100);
        assert!(enumerate_extreme(&Params::new(10, 1, 0.5, 0.8, 0.1).unwrap()).is_err());
    }

    #[test]
    fn solves_reference_instance() {
        let r = solve_l2_nonadversarial(&params(10), 1e-3).unwrap();
        let want = [0.11814544, 0.235294117647059, 0.80154768, 0.96776412];
        for (got, want) in r.knots.iter().zip(want) {
            assert!((got - want).abs() < 5e-3, "{got} vs {want}");
        }
        assert!(r.epsilon <= 1e-3);
        assert!(r.regret >= 0.0 && r.regret <= 0.25);
    }

    #[test]
    fn symmetric_instance() {
        let p = Params::new(8, 0, 0.5, 0.75, 0.25).unwrap();
        let r = solve_l2_nonadversarial(&p, 1e-3).unwrap();
        for x in 0..=8 {
            let s = r.aggregator.value(x) + r.aggregator.value(8 - x);
            assert!((s - 1.0).abs() < 2e-3, "x={x}: {s}");
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(solve_l2_nonadversarial(&params(10), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn objective_is_convex(
            f in proptest::array::uniform4(0.0f64..1.0),
            g in proptest::array::uniform4(0.0f64..1.0),
            lam in 0.0f64..1.0,
            n in 3usize..15,
        ) {
            let fam = enumerate_extreme(&params(n)).unwrap();
            let mix: Vec<f64> = f.iter().zip(&g).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
            let lhs = fam.objective([mix[0], mix[1], mix[2], mix[3]]);
            let rhs = lam * fam.objective(f) + (1.0 - lam) * fam.objective(g);
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
