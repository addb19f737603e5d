mod common;

use common::*;
use genealab_core::{
    age, canonical_hash, compose, concatenate, decompose, decompose_retaining, diameter, graft,
    graft_assigned, isomorphic, matrix::validate_matrix, metric_transform, truncate,
    GenealogyError, MetricMap, Space, TreeBuilder,
};
use proptest::prelude::*;

#[test]
fn truncation_caps_distances() {
    let t = truncate(&pair(0.5, 0.5, 6.0), 2.0).unwrap();
    assert_eq!(t.distance(0, 1), 4.0);
    let s = random_space(9, &mut rng(3));
    assert!(isomorphic(&truncate(&s, diameter(&s) / 2.0).unwrap(), &s));
    assert!(isomorphic(&truncate(&s, 100.0).unwrap(), &s));
}

#[test]
fn concatenation_identity_and_pairs() {
    let u = random_space(7, &mut rng(4));
    let h = diameter(&u) / 2.0 + 1.0;
    assert!(isomorphic(
        &concatenate(&[&u, &Space::zero()], h).unwrap(),
        &u
    ));
    let c = concatenate(&[&leaf(0.25), &leaf(1.5)], 3.0).unwrap();
    assert_eq!(c.leaf_count(), 2);
    assert_eq!(c.distance(0, 1), 6.0);
    assert_eq!(c.total_mass(), 1.75);
}

#[test]
fn concatenation_rejects_tall_components() {
    let err = concatenate(&[&leaf(1.0), &pair(0.5, 0.5, 7.0)], 3.0).unwrap_err();
    assert!(matches!(
        err,
        GenealogyError::ComponentTooTall { index: 1, .. }
    ));
}

#[test]
fn semigroup_laws_on_random_triples() {
    let mut r = rng(5);
    for _ in 0..1000 {
        let (u, v, w) = (
            random_space(5, &mut r),
            random_space(4, &mut r),
            random_space(6, &mut r),
        );
        let h = [&u, &v, &w].iter().map(|s| diameter(s)).fold(0.0, f64::max) / 2.0 + 0.5;
        let uv = concatenate(&[&u, &v], h).unwrap();
        let vw = concatenate(&[&v, &w], h).unwrap();
        let left = concatenate(&[&uv, &w], h).unwrap();
        let right = concatenate(&[&u, &vw], h).unwrap();
        assert_eq!(canonical_hash(&left), canonical_hash(&right));
        assert_eq!(
            canonical_hash(&uv),
            canonical_hash(&concatenate(&[&v, &u], h).unwrap())
        );
        assert_eq!(
            canonical_hash(&concatenate(&[&u, &Space::zero()], h).unwrap()),
            canonical_hash(&u)
        );
    }
}

#[test]
fn truncation_consistency_on_random_pairs() {
    let mut r = rng(6);
    for _ in 0..1000 {
        let (u, v) = (random_space(6, &mut r), random_space(5, &mut r));
        let h = diameter(&u).max(diameter(&v)) / 2.0 + 0.25 * r.random_range(1..5) as f64;
        let h2 = h * r.random_range(1..20) as f64 / 20.0;
        let left = truncate(&concatenate(&[&u, &v], h).unwrap(), h2).unwrap();
        let right = concatenate(
            &[&truncate(&u, h2).unwrap(), &truncate(&v, h2).unwrap()],
            h2,
        )
        .unwrap();
        assert_eq!(canonical_hash(&left), canonical_hash(&right));
    }
}

use rand::Rng;

#[test]
fn repeated_truncation_keeps_the_smaller_level() {
    let mut r = rng(7);
    for _ in 0..1000 {
        let u = random_space(8, &mut r);
        let h = 0.25 * r.random_range(0..16) as f64;
        let h2 = h * r.random_range(0..=10) as f64 / 10.0;
        let twice = truncate(&truncate(&u, h).unwrap(), h2).unwrap();
        assert_eq!(
            canonical_hash(&twice),
            canonical_hash(&truncate(&u, h2).unwrap())
        );
    }
}

#[test]
fn graft_of_a_coalesced_top_is_the_top() {
    let top = pair(0.5, 0.5, 1.5);
    let base = pair(0.5, 0.5, 10.0);
    let g = graft(&base, &top, 1.0, &mut rng(8)).unwrap();
    assert!(isomorphic(&g, &top));
}

#[test]
fn graft_onto_a_single_leaf_adds_2t() {
    let top = pair(0.5, 0.5, 2.0);
    let g = graft(&leaf(1.0), &top, 1.0, &mut rng(9)).unwrap();
    assert_eq!(g.distance(0, 1), 2.0);
    let mut b = TreeBuilder::new();
    let kids = (0..3).map(|_| b.leaf(1.0 / 3.0, ())).collect();
    let root = b.internal(0.5, kids);
    let star = b.build(Some(root)).unwrap();
    let top = concatenate(&[&star, &leaf(1.0)], 1.5).unwrap();
    let g = graft(&leaf(1.0), &top, 1.5, &mut rng(9)).unwrap();
    assert_eq!(g.distance(0, 3), 3.0);
    assert_eq!(g.distance(0, 1), 0.5);
}

#[test]
fn graft_pair_distance_is_a_coin_between_2_and_12() {
    // Two lines that never coalesced within t = 1 over a base of two leaves
    // at distance 10: the ancestors differ with probability 1/2 exactly.
    let base = pair(0.5, 0.5, 10.0);
    let top = pair(0.5, 0.5, 2.0);
    let mut r = rng(10);
    let reps = 100_000;
    let mut far = 0usize;
    for _ in 0..reps {
        match graft(&base, &top, 1.0, &mut r).unwrap().distance(0, 1) {
            12.0 => far += 1,
            2.0 => {}
            other => panic!("unexpected distance {other}"),
        }
    }
    let p = far as f64 / reps as f64;
    assert!(
        (p - 0.5).abs() <= 3.0 * (0.25 / reps as f64).sqrt(),
        "p = {p}"
    );
}

#[test]
fn graft_errors() {
    let top = pair(0.5, 0.5, 3.0);
    assert!(matches!(
        graft(&leaf(1.0), &top, 1.0, &mut rng(0)),
        Err(GenealogyError::TopTooTall { .. })
    ));
    assert_eq!(
        graft(&Space::zero(), &pair(0.5, 0.5, 1.0), 1.0, &mut rng(0)).unwrap_err(),
        GenealogyError::EmptyBase
    );
}

#[test]
fn explicit_assignment_drops_unused_ancestors() {
    let base = random_space(5, &mut rng(12));
    let mut b = TreeBuilder::new();
    let x = b.leaf(0.5, ());
    let y = b.leaf(0.5, ());
    let l0 = base.leaf_order()[0];
    let l1 = base.leaf_order()[4];
    let g = graft_assigned(&base, b, &[(x, l0), (y, l1)], 0.75).unwrap();
    assert_eq!(g.leaf_count(), 2);
    assert_eq!(g.distance(0, 1), 1.5 + base.distance(l0, l1));
}

#[test]
fn metric_transform_examples() {
    let s = random_space(8, &mut rng(13));
    let id = |r: f64| r;
    assert!(isomorphic(
        &metric_transform(&s, &MetricMap::Custom(&id)).unwrap(),
        &s
    ));
    let t = metric_transform(&pair(0.5, 0.5, 3.0), &MetricMap::OneMinusExp).unwrap();
    assert_eq!(t.distance(0, 1), 1.0 - (-3.0f64).exp());
    let shift = |r: f64| r + 1.0;
    assert_eq!(
        metric_transform(&s, &MetricMap::Custom(&shift)).unwrap_err(),
        GenealogyError::NonMonotoneMap
    );
    let down = |r: f64| -r;
    assert_eq!(
        metric_transform(&s, &MetricMap::Custom(&down)).unwrap_err(),
        GenealogyError::NonMonotoneMap
    );
    let d = diameter(&s);
    let bounded = metric_transform(&s, &MetricMap::OneMinusExp).unwrap();
    assert!((diameter(&bounded) - (1.0 - (-d).exp())).abs() < 1e-15);
    assert!(diameter(&bounded) < 1.0);
}

#[test]
fn aging_adds_twice_the_time() {
    let s = random_space(6, &mut rng(14));
    let a = age(&s, 0.75).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            let expect = if i == j { 0.0 } else { s.distance(i, j) + 1.5 };
            assert_eq!(a.distance(i, j), expect);
        }
    }
}

#[test]
fn decomposition_round_trip() {
    let z = decompose(&Space::zero()).unwrap();
    assert_eq!(z.total_mass, 0.0);
    assert!(z.normalized.is_none());
    let mut r = rng(15);
    for _ in 0..200 {
        let s = random_space(7, &mut r);
        let d = decompose(&s).unwrap();
        assert!((d.normalized.as_ref().unwrap().total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(canonical_hash(&compose(&d).unwrap()), canonical_hash(&s));
        let scaled = decompose(&s.scale_masses(3.5).unwrap()).unwrap();
        assert!((scaled.total_mass - 3.5 * d.total_mass).abs() < 1e-12);
        assert_eq!(
            canonical_hash(scaled.normalized.as_ref().unwrap()),
            canonical_hash(d.normalized.as_ref().unwrap())
        );
    }
    let kept = decompose_retaining(&Space::zero(), &pair(1.0, 3.0, 2.0)).unwrap();
    assert_eq!(kept.total_mass, 0.0);
    assert_eq!(kept.normalized.as_ref().unwrap().total_mass(), 1.0);
    assert!(compose(&kept).unwrap().is_zero());
}

#[test]
fn zero_mass_leaves_do_not_change_the_class() {
    let mut b = TreeBuilder::new();
    let x = b.leaf(0.5, ());
    let y = b.leaf(0.5, ());
    let ghost = b.leaf(0.0, ());
    let inner = b.internal(2.0, vec![x, y]);
    let root = b.internal(9.0, vec![inner, ghost]);
    let s = b.build(Some(root)).unwrap();
    assert!(isomorphic(&s, &pair(0.5, 0.5, 2.0)));
    assert_eq!(diameter(&s), 2.0);
}

proptest! {
    #[test]
    fn concatenation_and_truncation_stay_ultrametric(seed in any::<u64>(), n in 1usize..10, h in 0.0f64..6.0) {
        let mut r = rng(seed);
        let (u, v) = (random_space(n, &mut r), random_space(n, &mut r));
        let t = truncate(&u, h).unwrap();
        prop_assert!(diameter(&t) <= 2.0 * h);
        let hh = diameter(&u).max(diameter(&v)) / 2.0 + 0.5;
        let c = concatenate(&[&u, &v], hh).unwrap();
        prop_assert!(validate_matrix(&c.distance_matrix(), c.leaf_count()).is_ok());
        prop_assert_eq!(c.leaf_count(), u.leaf_count() + v.leaf_count());
    }

    #[test]
    fn grafts_are_ultrametric(seed in any::<u64>(), n in 1usize..9, m in 1usize..9) {
        let mut r = rng(seed);
        let base = random_space(n, &mut r);
        let top = random_space(m, &mut r);
        let t = diameter(&top) / 2.0 + 0.25;
        let g = graft(&base, &top, t, &mut r).unwrap();
        prop_assert!(validate_matrix(&g.distance_matrix(), g.leaf_count()).is_ok());
        prop_assert_eq!(g.leaf_count(), top.leaf_count());
        for i in 0..m {
            for j in 0..m {
                if top.distance(i, j) < 2.0 * t {
                    prop_assert_eq!(g.distance(i, j), top.distance(i, j));
                } else {
                    prop_assert!(g.distance(i, j) >= 2.0 * t);
                }
            }
        }
    }

    #[test]
    fn metric_transform_stays_ultrametric(seed in any::<u64>(), n in 1usize..14) {
        let s = random_space(n, &mut rng(seed));
        let t = metric_transform(&s, &MetricMap::OneMinusExp).unwrap();
        prop_assert!(validate_matrix(&t.distance_matrix(), n).is_ok());
        let sq = |r: f64| r.sqrt();
        let t = metric_transform(&s, &MetricMap::Custom(&sq)).unwrap();
        prop_assert!(validate_matrix(&t.distance_matrix(), n).is_ok());
    }

    #[test]
    fn relabelled_copies_are_isomorphic(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let d = random_ultrametric(n, &mut r);
        let m = random_masses(n, &mut r);
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut r);
        let pd: Vec<f64> = (0..n * n).map(|k| d[perm[k / n] * n + perm[k % n]]).collect();
        let pm: Vec<f64> = perm.iter().map(|&i| m[i]).collect();
        let a = genealab_core::from_distance_matrix(&d, &m).unwrap();
        let b = genealab_core::from_distance_matrix(&pd, &pm).unwrap();
        prop_assert!(isomorphic(&a, &b));
        prop_assert_eq!(genealab_core::to_json(&a), genealab_core::to_json(&b));
    }
}
