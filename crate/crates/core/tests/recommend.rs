mod common;

use common::*;
use proptest::prelude::*;
use psirec::recommend::{recommend, score_user, top_n};

fn scores_and_history() -> impl Strategy<Value = (Vec<f64>, Vec<usize>, usize)> {
    (2usize..40).prop_flat_map(|n_items| {
        (
            // coarse values so ties are common
            proptest::collection::vec((-4i32..4).prop_map(|x| x as f64 * 0.5), n_items),
            proptest::sample::subsequence((0..n_items).collect::<Vec<_>>(), 0..n_items),
            1usize..12,
        )
    })
}

proptest! {
    #[test]
    fn never_recommends_seen_items((scores, history, n) in scores_and_history()) {
        let list = top_n(0, &scores, &history, n);
        prop_assert!(list.items.iter().all(|i| history.binary_search(i).is_err()));
        prop_assert_eq!(list.items.len(), n.min(scores.len() - history.len()));
    }

    #[test]
    fn ordered_by_score_then_id((scores, history, n) in scores_and_history()) {
        let list = top_n(0, &scores, &history, n);
        for w in list.items.windows(2) {
            let (a, b) = (scores[w[0]], scores[w[1]]);
            prop_assert!(a > b || (a == b && w[0] < w[1]));
        }
        // nothing left out beats the last pick
        if let Some(&last) = list.items.last() {
            for j in (0..scores.len()).filter(|j| history.binary_search(j).is_err() && !list.items.contains(j)) {
                prop_assert!(scores[j] < scores[last] || (scores[j] == scores[last] && j > last));
            }
        }
    }

    #[test]
    fn positive_scaling_keeps_list((scores, history, n) in scores_and_history(), c in prop_oneof![Just(0.5), Just(2.0), Just(4.0), Just(1024.0)]) {
        let scaled: Vec<f64> = scores.iter().map(|s| s * c).collect();
        prop_assert_eq!(top_n(0, &scores, &history, n), top_n(0, &scaled, &history, n));
    }

    #[test]
    fn recommend_is_deterministic(seed in any::<u64>(), n in 1usize..10) {
        let mut r = rng(seed);
        let model = random_model(10, 25, 3, &mut r);
        let history = vec![1, 4, 9, 16];
        prop_assert_eq!(
            recommend(&model, 3, &history, n).unwrap(),
            recommend(&model, 3, &history, n).unwrap()
        );
    }

    #[test]
    fn scores_match_triple_loop(seed in any::<u64>(), history in proptest::sample::subsequence((0..30usize).collect::<Vec<_>>(), 8)) {
        let mut r = rng(seed);
        let model = random_model(6, 30, 2, &mut r);
        let v = model.v();
        let got = score_user(&model, &history).unwrap();
        for (i, g) in got.iter().enumerate() {
            let mut want = 0.0;
            for &j in &history {
                for k in 0..2 {
                    want += v[(j, k)] * v[(i, k)];
                }
            }
            prop_assert!((g - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn empty_history_scores_zero_and_bad_ids_rejected() {
    let mut r = rng(1);
    let model = random_model(4, 9, 2, &mut r);
    assert_eq!(score_user(&model, &[]).unwrap(), vec![0.0; 9]);
    assert!(score_user(&model, &[9]).is_err());
}

#[test]
fn small_examples() {
    assert_eq!(top_n(0, &[0.9, 0.5, 0.7], &[], 2).items, vec![0, 2]);
    assert_eq!(top_n(0, &[0.9, 0.5, 0.7], &[0], 2).items, vec![2, 1]);
    assert_eq!(top_n(0, &[1.0; 5], &[], 3).items, vec![0, 1, 2]);
}
