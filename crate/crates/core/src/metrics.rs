//! Relevance, coverage and stability measures over sets of top-n lists.
//!
//! List sets are keyed by user in a `BTreeMap`, so every aggregation walks
//! users in ascending id order and is independent of insertion order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recommend::RecommendationList;

pub type ListSet = BTreeMap<usize, RecommendationList>;

/// Holdout item per evaluated user.
pub type Holdout = BTreeMap<usize, usize>;

/// Recommendation list encoded as item → reciprocal rank, for ranks `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BagOfItems {
    weights: BTreeMap<usize, f64>,
    n: usize,
}

impl BagOfItems {
    pub fn from_items(items: &[usize], n: usize) -> Self {
        let weights = items
            .iter()
            .take(n)
            .enumerate()
            .map(|(pos, &item)| (item, 1.0 / (pos + 1) as f64))
            .collect();
        BagOfItems { weights, n }
    }

    pub fn from_list(list: &RecommendationList) -> Self {
        Self::from_items(&list.items, list.n)
    }

    pub fn weight(&self, item: usize) -> f64 {
        self.weights.get(&item).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn cutoff(&self) -> usize {
        self.n
    }
}

/// Weighted Jaccard index `Σ min(wᵢ(u), wᵢ(v)) / Σ max(wᵢ(u), wᵢ(v))` over
/// the union of items. Two empty bags compare as identical (1.0).
pub fn wji(u: &BagOfItems, v: &BagOfItems) -> f64 {
    debug_assert_eq!(u.n, v.n, "bags built with different cutoffs");
    if u.is_empty() && v.is_empty() {
        log::debug!("weighted jaccard of two empty lists treated as 1.0");
        return 1.0;
    }
    let keys: BTreeSet<usize> = u.weights.keys().chain(v.weights.keys()).copied().collect();
    let (mut num, mut den) = (0.0, 0.0);
    for k in keys {
        let (a, b) = (u.weight(k), v.weight(k));
        num += a.min(b);
        den += a.max(b);
    }
    num / den
}

/// Mean weighted Jaccard index over users present in both sets.
pub fn stability(prev: &ListSet, curr: &ListSet, n: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (user, now) in curr {
        let Some(before) = prev.get(user) else { continue };
        total += wji(
            &BagOfItems::from_items(&before.items, n),
            &BagOfItems::from_items(&now.items, n),
        );
        count += 1;
    }
    if count == 0 {
        return Err(Error::NoCommonUsers);
    }
    Ok(total / count as f64)
}

fn per_holdout(lists: &ListSet, holdout: &Holdout, f: impl Fn(Option<usize>) -> f64) -> Result<f64> {
    if holdout.is_empty() {
        return Err(Error::EmptyHoldout);
    }
    let total: f64 = holdout
        .iter()
        .map(|(user, &item)| f(lists.get(user).and_then(|l| l.rank_of(item))))
        .sum();
    Ok(total / holdout.len() as f64)
}

/// Fraction of holdout users whose held-out item was recommended. A user
/// without a list counts as a miss.
pub fn hit_rate(lists: &ListSet, holdout: &Holdout) -> Result<f64> {
    per_holdout(lists, holdout, |rank| if rank.is_some() { 1.0 } else { 0.0 })
}

/// Mean reciprocal 1-based rank of the held-out item, zero on a miss.
pub fn mrr(lists: &ListSet, holdout: &Holdout) -> Result<f64> {
    per_holdout(lists, holdout, |rank| rank.map_or(0.0, |r| 1.0 / r as f64))
}

/// Distinct recommended items over the catalog size.
pub fn coverage(lists: &ListSet, catalog_size: usize) -> f64 {
    if catalog_size == 0 {
        return 0.0;
    }
    let distinct: BTreeSet<usize> = lists.values().flat_map(|l| l.items.iter().copied()).collect();
    distinct.len() as f64 / catalog_size as f64
}

/// Metrics of one model at one rank and time step. Field order is the
/// serialized column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step_index: usize,
    pub model_name: String,
    pub rank: usize,
    pub n: usize,
    pub hr: f64,
    pub mrr: f64,
    pub coverage: f64,
    pub stability: Option<f64>,
    pub n_eval_users: usize,
}

impl StepReport {
    pub const CSV_HEADER: &'static str = "step_index,model_name,rank,n,hr,mrr,coverage,stability,n_eval_users";

    /// One CSV row, no trailing newline. Missing stability is an empty field.
    pub fn to_csv_row(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.serialize(self).expect("in-memory csv write");
        let mut s = String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv");
        s.truncate(s.trim_end().len());
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}
