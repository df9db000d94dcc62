use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::data::{to_matrix, IdIndex, Interaction, InteractionLog, InteractionMatrix};
use crate::error::{Error, Result};

/// Records of one evaluation window `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecords {
    pub start: i64,
    pub end: i64,
    pub delta: Vec<Interaction>,
    pub holdout: Vec<Interaction>,
    /// Records referencing users or items unknown to the initial training
    /// data.
    pub dropped: usize,
}

/// Record-level result of the stepwise split, before binarization.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub cutoff: i64,
    pub initial: Vec<Interaction>,
    pub windows: Vec<WindowRecords>,
    pub users: Arc<IdIndex>,
    pub items: Arc<IdIndex>,
}

/// Splits a preprocessed log by time.
///
/// Everything strictly before `max_timestamp − holdback` is initial
/// training data, and it alone defines the user and item indexes. The
/// remaining span is cut into `n_steps` equal half-open windows (the last
/// one also includes `max_timestamp`). Inside a window, records with unknown
/// users or items are dropped; then every user with at least two records
/// has the latest one held out (ties go to the later input row) and the
/// rest become that window's increment.
pub fn partition(log: &InteractionLog, holdback: i64, n_steps: usize) -> Result<Partition> {
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be at least 1".into()));
    }
    if holdback <= 0 {
        return Err(Error::Config("holdback duration must be positive".into()));
    }
    let (min_ts, max_ts) = log
        .records
        .iter()
        .fold(None, |acc: Option<(i64, i64)>, r| {
            Some(acc.map_or((r.timestamp, r.timestamp), |(lo, hi)| {
                (lo.min(r.timestamp), hi.max(r.timestamp))
            }))
        })
        .ok_or_else(|| Error::Data("cannot split an empty log".into()))?;
    let cutoff = max_ts - holdback;
    if min_ts >= cutoff {
        return Err(Error::Data(format!(
            "log spans {}s, not more than the holdback of {holdback}s",
            max_ts - min_ts
        )));
    }

    let bounds: Vec<i64> = (0..=n_steps)
        .map(|k| cutoff + ((k as i128 * holdback as i128) / n_steps as i128) as i64)
        .collect();
    let window_of = |ts: i64| -> usize {
        // first k with ts < bounds[k + 1]; the final window is closed
        bounds[1..].partition_point(|&b| b <= ts).min(n_steps - 1)
    };

    let mut initial = Vec::new();
    let mut buckets: Vec<Vec<&Interaction>> = vec![Vec::new(); n_steps];
    for r in &log.records {
        if r.timestamp < cutoff {
            initial.push(r.clone());
        } else {
            buckets[window_of(r.timestamp)].push(r);
        }
    }

    let users = Arc::new(IdIndex::build(initial.iter().map(|r| r.user.as_str())));
    let items = Arc::new(IdIndex::build(initial.iter().map(|r| r.item.as_str())));

    let windows = buckets
        .into_iter()
        .enumerate()
        .map(|(k, bucket)| {
            let start = bounds[k];
            let end = if k + 1 == n_steps { max_ts + 1 } else { bounds[k + 1] };
            let known: Vec<&Interaction> = bucket
                .iter()
                .copied()
                .filter(|r| users.get(&r.user).is_some() && items.get(&r.item).is_some())
                .collect();
            let dropped = bucket.len() - known.len();
            if dropped > 0 {
                log::info!("window {}: dropped {dropped} records with unseen users/items", k + 1);
            }

            let mut by_user: HashMap<&str, Vec<usize>> = HashMap::new();
            for (pos, r) in known.iter().enumerate() {
                by_user.entry(r.user.as_str()).or_default().push(pos);
            }
            let mut held = vec![false; known.len()];
            for positions in by_user.values().filter(|p| p.len() >= 2) {
                let latest = positions
                    .iter()
                    .copied()
                    .reduce(|best, pos| {
                        if known[pos].timestamp >= known[best].timestamp {
                            pos
                        } else {
                            best
                        }
                    })
                    .expect("non-empty");
                held[latest] = true;
            }
            let (mut delta, mut holdout) = (Vec::new(), Vec::new());
            for (r, h) in known.into_iter().zip(held) {
                if h {
                    holdout.push(r.clone());
                } else {
                    delta.push(r.clone());
                }
            }
            if delta.is_empty() && holdout.is_empty() {
                log::warn!("window {} [{start}, {end}) has no interactions", k + 1);
            }
            WindowRecords {
                start,
                end,
                delta,
                holdout,
                dropped,
            }
        })
        .collect();

    Ok(Partition {
        cutoff,
        initial,
        windows,
        users,
        items,
    })
}

/// One evaluation step: the increment matrix and the held-out targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub delta: InteractionMatrix,
    /// user row → item column
    pub holdout: BTreeMap<usize, usize>,
    pub window: (i64, i64),
    pub dropped: usize,
}

/// Initial training matrix plus the ordered evaluation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSplit {
    pub initial: InteractionMatrix,
    pub steps: Vec<Step>,
    pub cutoff: i64,
}

impl StepSplit {
    pub fn n_users(&self) -> usize {
        self.initial.users().len()
    }

    pub fn n_items(&self) -> usize {
        self.initial.items().len()
    }
}

impl Partition {
    pub fn into_split(self) -> StepSplit {
        let (initial, _) = to_matrix(&self.initial, &self.users, &self.items);
        let steps = self
            .windows
            .iter()
            .map(|w| {
                let (delta, _) = to_matrix(&w.delta, &self.users, &self.items);
                let holdout = w
                    .holdout
                    .iter()
                    .map(|r| {
                        (
                            self.users.get(&r.user).expect("indexed"),
                            self.items.get(&r.item).expect("indexed"),
                        )
                    })
                    .collect();
                Step {
                    delta,
                    holdout,
                    window: (w.start, w.end),
                    dropped: w.dropped,
                }
            })
            .collect();
        StepSplit {
            initial,
            steps,
            cutoff: self.cutoff,
        }
    }
}

/// [`partition`] followed by binarization over the initial indexes.
pub fn stepwise_split(log: &InteractionLog, holdback: i64, n_steps: usize) -> Result<StepSplit> {
    Ok(partition(log, holdback, n_steps)?.into_split())
}
