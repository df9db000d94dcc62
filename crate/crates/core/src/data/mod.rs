//! Interaction logs, id indexes, binarized matrices and the time-based split.

mod load;
mod split;
mod store;

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

pub use load::{load_csv, LoadedLog, Schema};
pub use split::{partition, stepwise_split, Partition, Step, StepSplit, WindowRecords};
pub use store::{read_csr, read_split, write_csr, write_split, Manifest, WindowInfo};

/// One raw interaction event.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub rating: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
}

/// Timestamped interaction events in input order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionLog {
    pub records: Vec<Interaction>,
}

impl InteractionLog {
    pub fn new(records: Vec<Interaction>) -> Self {
        InteractionLog { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_users(&self) -> usize {
        IdIndex::build(self.records.iter().map(|r| r.user.as_str())).len()
    }

    pub fn n_items(&self) -> usize {
        IdIndex::build(self.records.iter().map(|r| r.item.as_str())).len()
    }

    /// Fraction of the user × item grid that is observed.
    pub fn density(&self) -> f64 {
        let cells = self.n_users() as f64 * self.n_items() as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.records.len() as f64 / cells
        }
    }
}

/// Bijection between raw ids and dense row/column numbers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdIndex {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl IdIndex {
    /// Builds an index over the distinct ids. Numeric ids sort numerically
    /// and come first; the rest sort lexicographically.
    pub fn build<'a>(ids: impl IntoIterator<Item = &'a str>) -> Self {
        let mut ids: Vec<String> = ids.into_iter().map(str::to_owned).collect();
        ids.sort_by_cached_key(|s| (s.parse::<u64>().map_err(|_| ()), s.clone()));
        ids.dedup();
        Self::from_ordered(ids).expect("deduplicated ids")
    }

    /// Index whose position `i` is `ids[i]`; rejects duplicates.
    pub fn from_ordered(ids: Vec<String>) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if lookup.insert(id.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate id {id:?} in index")));
            }
        }
        Ok(IdIndex { ids, lookup })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, raw: &str) -> Option<usize> {
        self.lookup.get(raw).copied()
    }

    pub fn raw(&self, idx: usize) -> Option<&str> {
        self.ids.get(idx).map(String::as_str)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// Binary user × item matrix together with the indexes that label it.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    matrix: SparseMatrix,
    users: Arc<IdIndex>,
    items: Arc<IdIndex>,
}

impl InteractionMatrix {
    pub fn new(matrix: SparseMatrix, users: Arc<IdIndex>, items: Arc<IdIndex>) -> Result<Self> {
        if matrix.shape() != (users.len(), items.len()) {
            return Err(Error::mismatch(
                "interaction matrix",
                matrix.shape(),
                (users.len(), items.len()),
            ));
        }
        if matrix.values().iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidMatrix("interaction matrix must be binary".into()));
        }
        Ok(InteractionMatrix { matrix, users, items })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn users(&self) -> &Arc<IdIndex> {
        &self.users
    }

    pub fn items(&self) -> &Arc<IdIndex> {
        &self.items
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }
}

/// Binarizes `log` over fixed indexes. Records whose user or item is not
/// indexed are dropped; the second return value counts them.
pub fn to_matrix(log: &[Interaction], users: &Arc<IdIndex>, items: &Arc<IdIndex>) -> (InteractionMatrix, usize) {
    let mut dropped = 0;
    let pairs: Vec<(usize, usize)> = log
        .iter()
        .filter_map(|r| match (users.get(&r.user), items.get(&r.item)) {
            (Some(u), Some(i)) => Some((u, i)),
            _ => {
                dropped += 1;
                None
            }
        })
        .collect();
    let matrix = SparseMatrix::binary_from_pairs(users.len(), items.len(), pairs).expect("indexed pairs are in bounds");
    let m = InteractionMatrix::new(matrix, users.clone(), items.clone()).expect("binary by construction");
    (m, dropped)
}

/// Keeps records rated at least `min_rating`, collapses repeated
/// (user, item) pairs to their earliest event (first in input order on
/// timestamp ties), then drops users left with fewer than `min_user_items`
/// records. Items are never filtered. Input order is preserved.
pub fn preprocess(log: &InteractionLog, min_rating: f64, min_user_items: usize) -> Result<InteractionLog> {
    if min_rating.is_nan() || min_rating < 0.0 {
        return Err(Error::Config(format!("min_rating must be >= 0, got {min_rating}")));
    }
    let mut earliest: HashMap<(&str, &str), usize> = HashMap::new();
    for (pos, r) in log.records.iter().enumerate() {
        if r.rating < min_rating {
            continue;
        }
        earliest
            .entry((r.user.as_str(), r.item.as_str()))
            .and_modify(|best| {
                if r.timestamp < log.records[*best].timestamp {
                    *best = pos;
                }
            })
            .or_insert(pos);
    }
    let mut kept: Vec<usize> = earliest.into_values().collect();
    kept.sort_unstable();

    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for &pos in &kept {
        *per_user.entry(log.records[pos].user.as_str()).or_default() += 1;
    }
    let records: Vec<Interaction> = kept
        .into_iter()
        .filter(|&pos| per_user[log.records[pos].user.as_str()] >= min_user_items)
        .map(|pos| log.records[pos].clone())
        .collect();
    if records.is_empty() {
        return Err(Error::Data("no interactions left after preprocessing".into()));
    }
    Ok(InteractionLog::new(records))
}

#[cfg(test)]
pub(crate) fn rec(user: &str, item: &str, rating: f64, timestamp: i64) -> Interaction {
    Interaction {
        user: user.into(),
        item: item.into(),
        rating,
        timestamp,
    }
}
