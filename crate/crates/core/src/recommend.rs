//! Projection scoring and top-n selection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FactorModel;

/// Ranked top-n items for one user, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user: usize,
    pub items: Vec<usize>,
    pub n: usize,
}

impl RecommendationList {
    pub fn empty(user: usize, n: usize) -> Self {
        RecommendationList {
            user,
            items: Vec::new(),
            n,
        }
    }

    /// 1-based position of `item`, if recommended.
    pub fn rank_of(&self, item: usize) -> Option<usize> {
        self.items.iter().position(|&i| i == item).map(|p| p + 1)
    }
}

/// Scores every item as `h · V · Vᵀ`, the projection of the user's binary
/// history `h` onto the item latent subspace.
///
/// `history` lists the item ids the user interacted with.
pub fn score_user(model: &FactorModel, history: &[usize]) -> Result<Vec<f64>> {
    let v = model.v();
    let n_items = v.n_rows();
    if let Some(&bad) = history.iter().find(|&&j| j >= n_items) {
        return Err(Error::mismatch("score_user", (1, bad + 1), (1, n_items)));
    }
    let mut latent = vec![0.0; model.rank()];
    for &j in history {
        for (l, &x) in latent.iter_mut().zip(v.row(j)) {
            *l += x;
        }
    }
    if history.is_empty() {
        return Ok(vec![0.0; n_items]);
    }
    Ok((0..n_items)
        .map(|i| v.row(i).iter().zip(&latent).map(|(a, b)| a * b).sum())
        .collect())
}

/// Picks the `n` best-scoring items not in `history` (sorted ids), ties
/// broken by ascending item id.
pub fn top_n(user: usize, scores: &[f64], history: &[usize], n: usize) -> RecommendationList {
    let mut candidates: Vec<usize> = (0..scores.len())
        .filter(|j| history.binary_search(j).is_err())
        .collect();
    let order = |&a: &usize, &b: &usize| -> Ordering { scores[b].total_cmp(&scores[a]).then(a.cmp(&b)) };
    if candidates.len() > n {
        if n > 0 {
            candidates.select_nth_unstable_by(n - 1, order);
        }
        candidates.truncate(n);
    }
    candidates.sort_unstable_by(order);
    RecommendationList {
        user,
        items: candidates,
        n,
    }
}

/// `score_user` followed by `top_n`.
pub fn recommend(model: &FactorModel, user: usize, history: &[usize], n: usize) -> Result<RecommendationList> {
    let scores = score_user(model, history)?;
    Ok(top_n(user, &scores, history, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn basis_model(n_items: usize, axes: &[usize]) -> FactorModel {
        let r = axes.len();
        let v = DenseMatrix::from_fn(n_items, r, |i, j| if axes[j] == i { 1.0 } else { 0.0 });
        FactorModel::new(DenseMatrix::zeros(2, r), DenseMatrix::identity(r), v, 0).unwrap()
    }

    #[test]
    fn projection_onto_spanned_axis() {
        let m = basis_model(5, &[1, 3]);
        assert_eq!(score_user(&m, &[3]).unwrap(), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn orthogonal_history_scores_zero() {
        let m = basis_model(5, &[1, 3]);
        assert_eq!(score_user(&m, &[0, 4]).unwrap(), vec![0.0; 5]);
        assert_eq!(score_user(&m, &[]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn out_of_range_history() {
        let m = basis_model(5, &[1]);
        assert!(score_user(&m, &[5]).is_err());
    }

    #[test]
    fn top_n_examples() {
        let s = [0.9, 0.5, 0.7];
        assert_eq!(top_n(0, &s, &[], 2).items, vec![0, 2]);
        assert_eq!(top_n(0, &s, &[0], 2).items, vec![2, 1]);
        assert_eq!(top_n(0, &[1.0; 5], &[], 3).items, vec![0, 1, 2]);
    }

    #[test]
    fn short_list_when_catalog_exhausted() {
        let l = top_n(4, &[0.1, 0.2, 0.3], &[0, 2], 5);
        assert_eq!(l.items, vec![1]);
        assert_eq!(l.user, 4);
        assert_eq!(l.rank_of(1), Some(1));
        assert_eq!(l.rank_of(0), None);
    }
}
