use rayon::prelude::*;
use serde::Serialize;

use super::dataset::{apply_adversaries, synthesize, Strategy, VoteDataset};
use crate::closed_form::{k_ignorance_dictator, l2_adversarial_aggregator};
use crate::error::{domain, Result};
use crate::model::{Aggregator, LossKind, Params};
use crate::solver::solve_l2_nonadversarial;

/// Empirical frequencies from truthful votes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatedParams {
    pub mu_hat: f64,
    /// `None` when no row has state 1.
    pub a_hat: Option<f64>,
    /// `None` when no row has state 0.
    pub b_hat: Option<f64>,
    pub rows: usize,
    pub positive_rows: usize,
}

pub fn estimate_params(ds: &VoteDataset) -> Result<EstimatedParams> {
    if ds.rows.is_empty() {
        return Err(domain("empty dataset"));
    }
    let t = ds.truthful as f64;
    let (mut pos, mut h1, mut h0) = (0usize, 0usize, 0usize);
    for r in &ds.rows {
        if r.truth == 1 {
            pos += 1;
            h1 += r.truthful_h();
        } else {
            h0 += r.truthful_h();
        }
    }
    let neg = ds.rows.len() - pos;
    let rate = |h: usize, rows: usize| (rows > 0 && t > 0.0).then(|| h as f64 / (rows as f64 * t));
    Ok(EstimatedParams {
        mu_hat: pos as f64 / ds.rows.len() as f64,
        a_hat: rate(h1, pos),
        b_hat: rate(h0, neg),
        rows: ds.rows.len(),
        positive_rows: pos,
    })
}

impl EstimatedParams {
    pub fn params(&self, n: usize, k: usize) -> Result<Params> {
        let a = self.a_hat.ok_or_else(|| domain("no state-1 rows to estimate a"))?;
        let b = self.b_hat.ok_or_else(|| domain("no state-0 rows to estimate b"))?;
        Params::new(n, k, self.mu_hat, a, b)
    }
}

/// `c * ln(p)` with the convention `0 * ln(0) = 0`.
fn xlogp(c: usize, p: f64) -> f64 {
    if c == 0 {
        0.0
    } else {
        c as f64 * p.ln()
    }
}

/// Benchmark forecast of the conditionally independent model from `h` of `t` H votes.
fn ci_benchmark(est: &EstimatedParams, t: usize, h: usize, kind: LossKind) -> Result<f64> {
    let a = est.a_hat.ok_or_else(|| domain("no state-1 rows to estimate a"))?;
    let b = est.b_hat.ok_or_else(|| domain("no state-0 rows to estimate b"))?;
    let mu = est.mu_hat;
    let l1 = xlogp(1, mu) + xlogp(h, a) + xlogp(t - h, 1.0 - a);
    let l0 = xlogp(1, 1.0 - mu) + xlogp(h, b) + xlogp(t - h, 1.0 - b);
    Ok(match kind {
        LossKind::L1 => f64::from(u8::from(l1 >= l0)),
        LossKind::L2 => {
            if l1 == f64::NEG_INFINITY && l0 == f64::NEG_INFINITY {
                mu
            } else {
                let top = l1.max(l0);
                let (e1, e0) = ((l1 - top).exp(), (l0 - top).exp());
                e1 / (e1 + e0)
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub name: String,
    pub mean_loss: f64,
    pub mean_regret: f64,
    /// Standard error of the mean regret.
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Evaluation {
    pub summary: Vec<EvalRow>,
    pub benchmark_loss: f64,
    /// Per aggregator, per row losses.
    #[serde(skip)]
    pub losses: Vec<Vec<f64>>,
    #[serde(skip)]
    pub benchmark: Vec<f64>,
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = if n > 1.0 {
        xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

impl Evaluation {
    /// Mean and standard error of the per-row loss difference `i - j`.
    pub fn paired_difference(&self, i: usize, j: usize) -> (f64, f64) {
        mean_and_stderr(self.losses[i].iter().zip(&self.losses[j]).map(|(a, b)| a - b))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.summary.iter().position(|r| r.name == name)
    }
}

pub fn evaluate(
    ds: &VoteDataset,
    aggregators: &[(String, Aggregator)],
    kind: LossKind,
    est: &EstimatedParams,
) -> Result<Evaluation> {
    let n = ds.n();
    if ds.rows.is_empty() {
        return Err(domain("empty dataset"));
    }
    if let Some((name, _)) = aggregators.iter().find(|(_, f)| f.n() != n) {
        return Err(domain(format!("aggregator '{name}' does not cover 0..={n}")));
    }
    let benchmark: Vec<f64> = ds
        .rows
        .par_iter()
        .map(|r| Ok(kind.eval(ci_benchmark(est, ds.truthful, r.truthful_h(), kind)?, r.truth)))
        .collect::<Result<_>>()?;
    let losses: Vec<Vec<f64>> = aggregators
        .iter()
        .map(|(_, f)| {
            ds.rows
                .par_iter()
                .map(|r| kind.eval(f.value(r.total_h()), r.truth))
                .collect()
        })
        .collect();
    let benchmark_loss = benchmark.iter().sum::<f64>() / benchmark.len() as f64;
    let summary = aggregators
        .iter()
        .zip(&losses)
        .map(|((name, _), ls)| {
            let (mean_regret, stderr) = mean_and_stderr(ls.iter().zip(&benchmark).map(|(l, b)| l - b));
            EvalRow {
                name: name.clone(),
                mean_loss: ls.iter().sum::<f64>() / ls.len() as f64,
                mean_regret,
                stderr,
            }
        })
        .collect();
    Ok(Evaluation {
        summary,
        benchmark_loss,
        losses,
        benchmark,
    })
}

/// `1` above half the votes, `1/2` at exactly half, `0` below.
pub fn majority(n: usize) -> Aggregator {
    let values = (0..=n)
        .map(|x| match (2 * x).cmp(&n) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Less => 0.0,
        })
        .collect();
    Aggregator::from_values(values).expect("values in [0, 1]")
}

/// Majority, averaging and the optimal aggregator for the estimated parameters.
pub fn builtin_aggregators(
    est: &EstimatedParams,
    n: usize,
    k: usize,
    kind: LossKind,
) -> Result<Vec<(String, Aggregator)>> {
    let averaging = Aggregator::from_values((0..=n).map(|x| x as f64 / n as f64).collect())?;
    let p = est.params(n, k)?;
    let optimal = match (kind, k) {
        (LossKind::L1, _) => k_ignorance_dictator(n, k)?,
        (LossKind::L2, 0) => solve_l2_nonadversarial(&p, 1e-6)?.aggregator,
        (LossKind::L2, _) => l2_adversarial_aggregator(&p)?,
    };
    Ok(vec![
        ("majority".into(), majority(n)),
        ("averaging".into(), averaging),
        ("optimal".into(), optimal),
    ])
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub voters: usize,
    pub k: usize,
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub trials: usize,
    pub seed: u64,
    pub kind: LossKind,
    pub strategy: String,
}

/// Synthesize, attack, estimate from truthful votes, and evaluate the built-ins.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(VoteDataset, Evaluation)> {
    let n = cfg.voters + cfg.k;
    let p = Params::new(n, cfg.k, cfg.mu, cfg.a, cfg.b)?;
    let clean = synthesize(&p, cfg.trials, cfg.seed)?;
    let est = estimate_params(&clean)?;
    let aggs = builtin_aggregators(&est, n, cfg.k, cfg.kind)?;
    let strategy = match cfg.strategy.as_str() {
        "extreme" => Strategy::Extreme,
        "random" => Strategy::Random,
        "best_response" | "best-response" => Strategy::BestResponse {
            f: aggs[2].1.clone(),
            kind: cfg.kind,
        },
        other => return Err(domain(format!("unknown strategy '{other}'"))),
    };
    let ds = apply_adversaries(&clean, &strategy, cfg.seed)?;
    let eval = evaluate(&ds, &aggs, cfg.kind, &est)?;
    Ok((ds, eval))
}
