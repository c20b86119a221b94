use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{domain, Result};

/// Count of each report value in a multiset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReportHistogram {
    pub counts: BTreeMap<u32, u32>,
    pub total: u32,
}

impl ReportHistogram {
    pub fn of(reports: &[u32]) -> Self {
        let mut counts = BTreeMap::new();
        for &r in reports {
            *counts.entry(r).or_insert(0) += 1;
        }
        Self {
            counts,
            total: reports.len() as u32,
        }
    }

    pub fn count(&self, r: u32) -> u32 {
        self.counts.get(&r).copied().unwrap_or(0)
    }
}

/// Half the L1 distance between histograms of two equal-size multisets.
pub fn report_distance(x1: &[u32], x2: &[u32]) -> Result<usize> {
    if x1.len() != x2.len() {
        return Err(domain(format!(
            "multisets have different sizes {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    let (h1, h2) = (ReportHistogram::of(x1), ReportHistogram::of(x2));
    let diff: u32 = h1
        .counts
        .keys()
        .chain(h2.counts.keys())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|&r| h1.count(r).abs_diff(h2.count(r)))
        .sum();
    Ok((diff / 2) as usize)
}

/// Pads of size `k` that make `x1 + pad1` and `x2 + pad2` equal as multisets,
/// or `None` when `k` is smaller than their distance.
pub fn confusion_padding(x1: &[u32], x2: &[u32], k: usize) -> Option<(Vec<u32>, Vec<u32>)> {
    let d = report_distance(x1, x2).ok()?;
    if k < d {
        return None;
    }
    let (h1, h2) = (ReportHistogram::of(x1), ReportHistogram::of(x2));
    let mut pad1 = Vec::with_capacity(k);
    let mut pad2 = Vec::with_capacity(k);
    for r in h1.counts.keys().chain(h2.counts.keys()).collect::<std::collections::BTreeSet<_>>() {
        let (c1, c2) = (h1.count(*r), h2.count(*r));
        let top = c1.max(c2);
        pad1.extend(std::iter::repeat(*r).take((top - c1) as usize));
        pad2.extend(std::iter::repeat(*r).take((top - c2) as usize));
    }
    let filler = x1.iter().chain(x2).copied().min().unwrap_or(0);
    pad1.resize(k, filler);
    pad2.resize(k, filler);
    pad1.sort_unstable();
    pad2.sort_unstable();
    Some((pad1, pad2))
}

/// Merges two multisets into a sorted one.
pub(crate) fn union(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out
}

/// All multisets of size `k` over `alphabet` (sorted, deduplicated alphabet).
pub(crate) fn multisets(alphabet: &[u32], k: usize) -> Vec<Vec<u32>> {
    fn rec(alphabet: &[u32], k: usize, start: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..alphabet.len() {
            cur.push(alphabet[i]);
            rec(alphabet, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(alphabet, k, 0, &mut Vec::new(), &mut out);
    out
}
