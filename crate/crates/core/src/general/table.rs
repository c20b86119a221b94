use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One truthful report multiset of a structure with its benchmark forecast.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub reports: Vec<u32>,
    pub opt: f64,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableStructure {
    pub id: String,
    pub entries: Vec<TableEntry>,
}

/// Finite family of structures with benchmark forecasts on each truthful
/// report multiset.
///
/// JSON form: `{"alphabet": [..]?, "structures": [{"id", "entries": [{"reports", "opt", "prob"}]}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptTable {
    /// Report values adversaries may use; defaults to those seen in entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<u32>>,
    pub structures: Vec<TableStructure>,
}

impl OptTable {
    /// Sorts every multiset and checks the table invariants.
    pub fn new(alphabet: Option<Vec<u32>>, mut structures: Vec<TableStructure>) -> Result<Self> {
        for s in &mut structures {
            for e in &mut s.entries {
                e.reports.sort_unstable();
            }
        }
        let table = Self {
            alphabet,
            structures,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: OptTable = serde_json::from_str(text)?;
        Self::new(raw.alphabet, raw.structures)
    }

    fn validate(&self) -> Result<()> {
        let mut size = None;
        for s in &self.structures {
            if s.entries.is_empty() {
                return Err(Error::Schema(format!("structure '{}' has no entries", s.id)));
            }
            let mut total = 0.0;
            for (i, e) in s.entries.iter().enumerate() {
                if !(0.0..=1.0).contains(&e.opt) {
                    return Err(Error::Schema(format!("'{}' entry {i}: opt {} outside [0, 1]", s.id, e.opt)));
                }
                if !(0.0..=1.0).contains(&e.prob) {
                    return Err(Error::Schema(format!("'{}' entry {i}: prob {} outside [0, 1]", s.id, e.prob)));
                }
                if *size.get_or_insert(e.reports.len()) != e.reports.len() {
                    return Err(Error::Schema("report multisets differ in size".into()));
                }
                if s.entries[..i].iter().any(|f| f.reports == e.reports) {
                    return Err(Error::Schema(format!("'{}' repeats multiset {:?}", s.id, e.reports)));
                }
                total += e.prob;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Schema(format!("'{}' probabilities sum to {total}", s.id)));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    /// Size of every report multiset.
    pub fn report_size(&self) -> usize {
        self.structures
            .first()
            .and_then(|s| s.entries.first())
            .map_or(0, |e| e.reports.len())
    }

    /// Sorted report alphabet.
    pub fn alphabet(&self) -> Vec<u32> {
        let mut a: Vec<u32> = match &self.alphabet {
            Some(a) => a.clone(),
            None => self
                .structures
                .iter()
                .flat_map(|s| s.entries.iter().flat_map(|e| e.reports.iter().copied()))
                .collect(),
        };
        a.sort_unstable();
        a.dedup();
        a
    }

    /// Positive-probability entries as `(structure index, entry)`.
    pub fn support(&self) -> Vec<(usize, &TableEntry)> {
        self.structures
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.entries.iter().filter(|e| e.prob > 0.0).map(move |e| (i, e)))
            .collect()
    }

    /// Smallest positive report probability.
    pub fn alpha(&self) -> f64 {
        self.support()
            .iter()
            .map(|(_, e)| e.prob)
            .fold(f64::INFINITY, f64::min)
    }
}

fn binomial_pmf(n: usize, c: usize, p: f64) -> f64 {
    let mut coef = 1.0;
    for i in 0..c {
        coef *= (n - i) as f64 / (i + 1) as f64;
    }
    coef * p.powi(c as i32) * (1.0 - p).powi((n - c) as i32)
}

/// Single structure whose benchmark is `beta*mu + (1-beta)*(#H)/n` over
/// binary reports, with binomial(n, 1/2) report probabilities.
pub fn linear_table(n: usize, beta: f64, mu: f64) -> Result<OptTable> {
    let entries = (0..=n)
        .map(|c| TableEntry {
            reports: [vec![0; n - c], vec![1; c]].concat(),
            opt: beta * mu + (1.0 - beta) * c as f64 / n as f64,
            prob: binomial_pmf(n, c, 0.5),
        })
        .collect();
    OptTable::new(
        Some(vec![0, 1]),
        vec![TableStructure {
            id: "linear".into(),
            entries,
        }],
    )
}

/// Conditionally independent experts where one of `t` experts observes the
/// state. Ordinary reports are `0`/`1`; the informed expert reports `2`/`3`.
pub fn ci_informative_table(t: usize, mu: f64, a: f64, b: f64) -> Result<OptTable> {
    let mut entries = Vec::new();
    let others = t - 1;
    for (label, weight, rate, opt) in [(2u32, 1.0 - mu, b, 0.0), (3u32, mu, a, 1.0)] {
        for c in 0..=others {
            let prob = weight * binomial_pmf(others, c, rate);
            if prob > 0.0 {
                let mut reports = [vec![0; others - c], vec![1; c]].concat();
                reports.push(label);
                entries.push(TableEntry { reports, opt, prob });
            }
        }
    }
    OptTable::new(
        Some(vec![0, 1, 2, 3]),
        vec![TableStructure {
            id: "ci-informed".into(),
            entries,
        }],
    )
}
