mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use psirec::metrics::{coverage, hit_rate, mrr, stability, wji, BagOfItems, Holdout, ListSet};
use psirec::RecommendationList;

fn bag(items: &[usize], n: usize) -> BagOfItems {
    BagOfItems::from_items(items, n)
}

fn distinct_list(max_len: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::sample::subsequence((0..20usize).collect::<Vec<_>>(), 0..=max_len).prop_shuffle()
}

fn list_set(users: usize) -> impl Strategy<Value = ListSet> {
    proptest::collection::vec(distinct_list(5), users).prop_map(|lists| {
        lists
            .into_iter()
            .enumerate()
            .map(|(u, items)| (u, RecommendationList { user: u, items, n: 5 }))
            .collect()
    })
}

proptest! {
    #[test]
    fn wji_symmetric(u in distinct_list(6), v in distinct_list(6)) {
        prop_assert_eq!(wji(&bag(&u, 6), &bag(&v, 6)), wji(&bag(&v, 6), &bag(&u, 6)));
    }

    #[test]
    fn wji_in_unit_interval(u in distinct_list(6), v in distinct_list(6)) {
        let x = wji(&bag(&u, 6), &bag(&v, 6));
        prop_assert!((0.0..=1.0).contains(&x));
    }

    #[test]
    fn wji_identity(u in distinct_list(6)) {
        prop_assume!(!u.is_empty());
        prop_assert_eq!(wji(&bag(&u, 6), &bag(&u, 6)), 1.0);
    }

    #[test]
    fn wji_matches_dense_oracle(u in distinct_list(6), v in distinct_list(6)) {
        let got = wji(&bag(&u, 6), &bag(&v, 6));
        prop_assert!((got - wji_dense_oracle(&u, &v, 6)).abs() <= 1e-15);
    }

    #[test]
    fn bag_weights_are_reciprocal_ranks(u in distinct_list(8), n in 1usize..8) {
        let b = bag(&u, n);
        prop_assert!(b.len() <= n);
        for (pos, &item) in u.iter().enumerate() {
            let w = b.weight(item);
            if pos < n {
                prop_assert_eq!(w, 1.0 / (pos + 1) as f64);
            } else {
                prop_assert_eq!(w, 0.0);
            }
        }
    }

    #[test]
    fn hit_rate_bounds_mrr(lists in list_set(6), targets in proptest::collection::vec(0..20usize, 6)) {
        let holdout: Holdout = targets.into_iter().enumerate().collect();
        let hr = hit_rate(&lists, &holdout).unwrap();
        let m = mrr(&lists, &holdout).unwrap();
        prop_assert!(hr >= m);
        prop_assert!((0.0..=1.0).contains(&hr) && (0.0..=1.0).contains(&m));
    }

    #[test]
    fn aggregations_ignore_insertion_order(
        prev in list_set(6),
        curr in list_set(6),
        targets in proptest::collection::vec(0..20usize, 6),
    ) {
        let holdout: Holdout = targets.iter().copied().enumerate().collect();
        let reversed = |s: &ListSet| -> ListSet { s.iter().rev().map(|(k, v)| (*k, v.clone())).collect() };
        let rev_holdout: Holdout = targets.into_iter().enumerate().rev().collect();
        prop_assert_eq!(stability(&prev, &curr, 5).unwrap(), stability(&reversed(&prev), &reversed(&curr), 5).unwrap());
        prop_assert_eq!(hit_rate(&curr, &holdout).unwrap(), hit_rate(&reversed(&curr), &rev_holdout).unwrap());
        prop_assert_eq!(mrr(&curr, &holdout).unwrap(), mrr(&reversed(&curr), &rev_holdout).unwrap());
        prop_assert_eq!(coverage(&curr, 20), coverage(&reversed(&curr), 20));
    }
}

#[test]
fn swapped_top_pair_gives_four_sevenths() {
    let (a, b, c) = (10, 20, 30);
    let got = wji(&bag(&[a, b, c], 3), &bag(&[b, a, c], 3));
    assert!((got - 4.0 / 7.0).abs() <= 1e-15);
    assert!((wji_dense_oracle(&[a, b, c], &[b, a, c], 3) - 4.0 / 7.0).abs() <= 1e-15);
}

#[test]
fn earlier_swaps_are_penalized_more() {
    let rows = all_swaps(6, |u, v, n| wji(&bag(u, n), &bag(v, n)));
    for n in 3..=6 {
        let of = |i: usize, j: usize| rows.iter().find(|r| (r.0, r.1, r.2) == (n, i, j)).unwrap().3;
        assert!(of(0, n - 1) < of(n - 2, n - 1), "n = {n}");
        for i in 0..n - 2 {
            assert!(of(i, i + 1) < of(i + 1, i + 2), "adjacent swaps at n = {n}");
        }
        for r in rows.iter().filter(|r| r.0 == n && (r.1, r.2) != (0, n - 1)) {
            assert!(of(0, n - 1) < r.3);
        }
    }
}

#[test]
fn extremes_and_empty_bags() {
    assert_eq!(wji(&bag(&[1, 2], 2), &bag(&[3, 4], 2)), 0.0);
    assert_eq!(wji(&bag(&[], 2), &bag(&[], 2)), 1.0);
    assert_eq!(wji(&bag(&[1], 2), &bag(&[], 2)), 0.0);
}

#[test]
fn stability_of_mixed_users() {
    let list = |u: usize, items: &[usize]| RecommendationList {
        user: u,
        items: items.to_vec(),
        n: 3,
    };
    let prev: ListSet = BTreeMap::from([(0, list(0, &[1, 2, 3])), (1, list(1, &[1, 2, 3])), (9, list(9, &[7]))]);
    let curr: ListSet = BTreeMap::from([(0, list(0, &[1, 2, 3])), (1, list(1, &[2, 1, 3])), (5, list(5, &[7]))]);
    assert!((stability(&prev, &curr, 3).unwrap() - 11.0 / 14.0).abs() <= 1e-15);
    let other: ListSet = BTreeMap::from([(4, list(4, &[1]))]);
    assert!(stability(&prev, &other, 3).is_err());
}

#[test]
fn relevance_examples() {
    let list = |u: usize, items: &[usize]| {
        (
            u,
            RecommendationList {
                user: u,
                items: items.to_vec(),
                n: 3,
            },
        )
    };
    let lists: ListSet = [
        list(0, &[5, 6, 7]),
        list(1, &[5, 6, 7]),
        list(2, &[1, 2, 3]),
        list(3, &[]),
        list(4, &[9]),
    ]
    .into_iter()
    .collect();
    let holdout: Holdout = BTreeMap::from([(0, 5), (1, 7), (2, 4), (3, 1), (4, 8)]);
    assert!((hit_rate(&lists, &holdout).unwrap() - 0.4).abs() <= 1e-15);
    assert!((mrr(&lists, &holdout).unwrap() - (1.0 + 1.0 / 3.0) / 5.0).abs() <= 1e-15);
    assert!((coverage(&lists, 20) - 7.0 / 20.0).abs() <= 1e-15);
    assert!(hit_rate(&lists, &Holdout::new()).is_err());
    assert!(mrr(&lists, &Holdout::new()).is_err());
}
