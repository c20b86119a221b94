use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::model::{Aggregator, LossKind, Params};

/// Stream tags keep synthesis and adversary randomness independent.
const SYNTH_STREAM: u64 = 0;
const ADVERSARY_STREAM: u64 = 1;

/// Generator for row `row` of pass `tag`.
pub(crate) fn row_rng(seed: u64, tag: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((row as u64) << 1 | tag);
    rng
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VoteRow {
    pub item: String,
    pub truth: u8,
    pub truthful: Vec<bool>,
    pub adversarial: Vec<bool>,
}

impl VoteRow {
    pub fn truthful_h(&self) -> usize {
        self.truthful.iter().filter(|&&v| v).count()
    }

    pub fn total_h(&self) -> usize {
        self.truthful_h() + self.adversarial.iter().filter(|&&v| v).count()
    }
}

/// Rows of votes. Every row has `truthful` truthful and `k` adversarial votes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VoteDataset {
    pub truthful: usize,
    pub k: usize,
    pub rows: Vec<VoteRow>,
}

impl VoteDataset {
    pub fn new(truthful: usize, k: usize, rows: Vec<VoteRow>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.truthful.len() != truthful || r.adversarial.len() != k {
                return Err(domain(format!("row {i} has inconsistent vote counts")));
            }
            if r.truth > 1 {
                return Err(domain(format!("row {i} has non-binary truth")));
            }
        }
        Ok(Self { truthful, k, rows })
    }

    pub fn n(&self) -> usize {
        self.truthful + self.k
    }
}

/// Conditionally independent truthful voters. Adversarial votes start as L
/// until a strategy pass fills them.
pub fn synthesize(p: &Params, trials: usize, seed: u64) -> Result<VoteDataset> {
    if trials == 0 {
        return Err(domain("need at least one trial"));
    }
    let (m, k) = (p.truthful(), p.k());
    let rows = (0..trials)
        .map(|i| {
            let mut rng = row_rng(seed, SYNTH_STREAM, i);
            let truth = u8::from(rng.gen::<f64>() < p.mu());
            let rate = if truth == 1 { p.a() } else { p.b() };
            VoteRow {
                item: i.to_string(),
                truth,
                truthful: (0..m).map(|_| rng.gen::<f64>() < rate).collect(),
                adversarial: vec![false; k],
            }
        })
        .collect();
    VoteDataset::new(m, k, rows)
}

#[derive(Clone, Debug)]
pub enum Strategy {
    /// All adversaries vote against the truthful majority; on a tie, against the truth.
    Extreme,
    /// Each adversary votes H with probability 1/2.
    Random,
    /// Per row, the H count maximizing the aggregator's loss (smallest on ties).
    BestResponse { f: Aggregator, kind: LossKind },
}

pub fn apply_adversaries(ds: &VoteDataset, strategy: &Strategy, seed: u64) -> Result<VoteDataset> {
    let (t, k) = (ds.truthful, ds.k);
    if let Strategy::BestResponse { f, .. } = strategy {
        if f.n() != t + k {
            return Err(domain(format!("aggregator has n={}, dataset n={}", f.n(), t + k)));
        }
    }
    let rows = ds
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let h = r.truthful_h();
            let adversarial = match strategy {
                Strategy::Extreme => {
                    let vote_h = match (2 * h).cmp(&t) {
                        std::cmp::Ordering::Greater => false,
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Equal => r.truth == 0,
                    };
                    vec![vote_h; k]
                }
                Strategy::Random => {
                    let mut rng = row_rng(seed, ADVERSARY_STREAM, i);
                    (0..k).map(|_| rng.gen::<bool>()).collect()
                }
                Strategy::BestResponse { f, kind } => {
                    let mut best = (0, f64::NEG_INFINITY);
                    for j in 0..=k {
                        let l = kind.eval(f.value(h + j), r.truth);
                        if l > best.1 {
                            best = (j, l);
                        }
                    }
                    (0..k).map(|a| a < best.0).collect()
                }
            };
            VoteRow {
                adversarial,
                ..r.clone()
            }
        })
        .collect();
    VoteDataset::new(t, k, rows)
}
