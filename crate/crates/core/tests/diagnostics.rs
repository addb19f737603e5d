mod common;

use common::*;
use genealab_core::{
    canonical_hash, covering_number, diameter, from_json, gp_distance_bounds, isomorphic, to_json,
    GenealogyError, GpSearch, Mark, MarkedSpace, Space, TreeBuilder,
};
use proptest::prelude::*;

#[test]
fn diameter_and_covering_on_fixtures() {
    let s = pair(0.5, 0.5, 5.0);
    assert_eq!(diameter(&s), 5.0);
    assert_eq!(covering_number(&s, 0.1).unwrap(), 2);
    assert_eq!(covering_number(&s, 6.0).unwrap(), 1);
    assert_eq!(
        covering_number(&Space::zero(), 0.1).unwrap_err(),
        GenealogyError::EmptySpace
    );
    assert!(covering_number(&s, 0.0).is_err());

    // ((a:0.4, b:0.1)@1, (c:0.3, d:0.2)@2)@8.
    let mut b = TreeBuilder::new();
    let l: Vec<_> = [0.4, 0.1, 0.3, 0.2]
        .iter()
        .map(|&m| b.leaf(m, ()))
        .collect();
    let x = b.internal(1.0, vec![l[0], l[1]]);
    let y = b.internal(2.0, vec![l[2], l[3]]);
    let root = b.internal(8.0, vec![x, y]);
    let s = b.build(Some(root)).unwrap();
    assert_eq!(diameter(&s), 8.0);
    // eps = 0.05: four singleton balls, 0.95 needs all of them.
    assert_eq!(covering_number(&s, 0.05).unwrap(), 4);
    // eps = 0.15: 0.85 covered by 0.4 + 0.3 + 0.2.
    assert_eq!(covering_number(&s, 0.15).unwrap(), 3);
    // eps = 0.35: 0.65 covered by 0.4 + 0.3.
    assert_eq!(covering_number(&s, 0.35).unwrap(), 2);
    // eps = 1: balls {a,b} (0.5), c, d; 0.0 needs one ball.
    assert_eq!(covering_number(&s, 1.0).unwrap(), 1);
    // eps = 0.4 but raw masses scaled: the measure is normalized first.
    let scaled = s.scale_masses(10.0).unwrap();
    assert_eq!(covering_number(&scaled, 0.15).unwrap(), 3);
}

#[test]
fn hash_distinguishes_distances_and_merges_duplicates() {
    assert!(!isomorphic(&pair(0.5, 0.5, 4.0), &pair(0.5, 0.5, 6.0)));
    let mut r = rng(21);
    for _ in 0..100 {
        let s = random_space(6, &mut r);
        // Split leaf 0 into two zero-distance copies of masses a and b.
        let n = s.leaf_count();
        let d0 = s.distance_matrix();
        let mut d = vec![0.0; (n + 1) * (n + 1)];
        let src = |i: usize| if i == n { 0 } else { i };
        for i in 0..=n {
            for j in 0..=n {
                d[i * (n + 1) + j] = if src(i) == src(j) {
                    0.0
                } else {
                    d0[src(i) * n + src(j)]
                };
            }
        }
        let mut m = s.leaf_masses();
        let a = m[0] * 0.25;
        m[0] -= a;
        m.push(a);
        let split = genealab_core::from_distance_matrix(&d, &m).unwrap();
        assert!(isomorphic(&split, &s));
        assert!(brute_force_isomorphic(&split.reduced(), &s.reduced()));
    }
}

/// Exhaustive search for a mass- and distance-preserving bijection.
fn brute_force_isomorphic(a: &Space, b: &Space) -> bool {
    let n = a.leaf_count();
    if n != b.leaf_count() {
        return false;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    fn search(a: &Space, b: &Space, perm: &mut Vec<usize>, k: usize) -> bool {
        let n = perm.len();
        if k == n {
            return true;
        }
        for i in k..n {
            perm.swap(k, i);
            let ok = (a.leaf_mass(k) - b.leaf_mass(perm[k])).abs() < 1e-12
                && (0..k).all(|j| a.distance(j, k) == b.distance(perm[j], perm[k]));
            if ok && search(a, b, perm, k + 1) {
                return true;
            }
            perm.swap(k, i);
        }
        false
    }
    search(a, b, &mut perm, 0)
}

#[test]
fn different_marks_are_kept_apart() {
    let mk = |t0: u32, t1: u32| -> MarkedSpace {
        MarkedSpace::star(&[0.5, 0.5], &[Mark::new(0, t0), Mark::new(0, t1)], 0.0).unwrap()
    };
    assert_eq!(mk(1, 1).reduced().leaf_count(), 1);
    assert_eq!(mk(1, 2).reduced().leaf_count(), 2);
    assert!(!isomorphic(&mk(1, 1), &mk(1, 2)));
}

#[test]
fn gp_bounds_examples() {
    let a = pair(0.5, 0.5, 4.0);
    let b = pair(0.5, 0.5, 6.0);
    let bounds = gp_distance_bounds(&a, &b, GpSearch::default(), &mut rng(1)).unwrap();
    assert!((bounds.lower - 1.0).abs() < 1e-12, "{bounds:?}");
    assert!(bounds.upper >= bounds.lower);
    let s = random_space(7, &mut rng(2));
    let same = gp_distance_bounds(&s, &s, GpSearch::default(), &mut rng(3)).unwrap();
    assert_eq!(same.lower, 0.0);
    assert!(same.upper.abs() < 1e-12);
    let err = gp_distance_bounds(&Space::zero(), &s, GpSearch::default(), &mut rng(3)).unwrap_err();
    assert_eq!(err, GenealogyError::EmptySpace);
}

#[test]
fn gp_bound_ordering_on_random_pairs() {
    let mut r = rng(4);
    for k in 0..1000 {
        let (n, m) = if k % 10 == 0 {
            (12, 10)
        } else {
            (1 + k % 6, 1 + (k / 6) % 6)
        };
        let a = random_space(n, &mut r);
        let b = random_space(m, &mut r);
        let g = gp_distance_bounds(&a, &b, GpSearch::default(), &mut r).unwrap();
        assert!(g.lower >= 0.0 && g.lower <= g.upper, "{g:?}");
    }
}

#[test]
fn json_round_trip_and_stability() {
    let mut r = rng(5);
    for _ in 0..50 {
        let s = random_marked(8, 3, &mut r);
        let text = to_json(&s);
        let back: MarkedSpace = from_json(&text).unwrap();
        assert!(isomorphic(&back, &s));
        assert_eq!(to_json(&back), text);
        assert_eq!(to_json(&s.reduced()), text);
    }
    assert!(from_json::<f64, ()>(&to_json(&Space::zero()))
        .unwrap()
        .is_zero());
    let unmarked = to_json(&pair(0.5, 0.5, 6.0));
    assert!(from_json::<f64, Mark>(&unmarked).is_err());
    assert!(from_json::<f64, ()>("{\"schema\":\"nope\"}").is_err());
}

proptest! {
    #[test]
    fn canonicalization_is_idempotent(seed in any::<u64>(), n in 1usize..15) {
        let s = random_marked(n, 2, &mut rng(seed));
        let once = s.reduced();
        prop_assert_eq!(to_json(&once), to_json(&once.reduced()));
        prop_assert_eq!(canonical_hash(&once), canonical_hash(&s));
    }

    #[test]
    fn covering_number_is_monotone(seed in any::<u64>(), n in 1usize..15) {
        let s = random_space(n, &mut rng(seed));
        let mut last = usize::MAX;
        for k in 1..40 {
            let c = covering_number(&s, k as f64 * 0.05).unwrap();
            prop_assert!(c <= last && c >= 1);
            last = c;
        }
    }
}
