use std::collections::HashSet;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiseq::error::Error;
use semiseq::oracle::brute_sequencing;
use semiseq::sequencing::is_sequencing;
use semiseq::{GElem, GroupSpec, Sign};

/// Partial products distinct and none equal to the identity before the end.
fn naive_is_sequencing(spec: &GroupSpec, ord: &[GElem]) -> bool {
    let mut seen = HashSet::new();
    let mut acc = spec.identity();
    for (i, &g) in ord.iter().enumerate() {
        acc = spec.mul(acc, g);
        if (spec.is_identity(acc) && i + 1 < ord.len()) || !seen.insert(acc) {
            return false;
        }
    }
    true
}

fn small_specs() -> Vec<GroupSpec> {
    vec![
        GroupSpec::cyclic(7).unwrap(),
        GroupSpec::dihedral(5).unwrap(),
        GroupSpec::dihedral(7).unwrap(),
        GroupSpec::new(5, vec![4], vec![Sign::Minus]).unwrap(),
        GroupSpec::new(3, vec![2, 2], vec![Sign::Minus, Sign::Plus]).unwrap(),
    ]
}

fn random_subset(spec: &GroupSpec, size: usize, rng: &mut impl Rng) -> Vec<GElem> {
    let items: Vec<GElem> = spec.elements().filter(|&g| !spec.is_identity(g)).collect();
    items.choose_multiple(rng, size).copied().collect()
}

#[test]
fn predicate_matches_naive_on_random_orderings() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut yes = 0;
    for spec in small_specs() {
        for _ in 0..400 {
            let n = rng.gen_range(1..=6);
            let mut ord = random_subset(&spec, n, &mut rng);
            ord.shuffle(&mut rng);
            let naive = naive_is_sequencing(&spec, &ord);
            yes += naive as usize;
            assert_eq!(is_sequencing(&spec, &ord), naive, "{ord:?}");
        }
    }
    assert!(yes > 100, "too few positive cases: {yes}");
}

#[test]
fn oracle_agrees_with_permutation_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for spec in small_specs() {
        for _ in 0..60 {
            let n = rng.gen_range(1..=6);
            let set = random_subset(&spec, n, &mut rng);
            let exists = set.iter().copied().permutations(n).any(|p| naive_is_sequencing(&spec, &p));
            match brute_sequencing(&spec, &set, 12) {
                Ok(ord) => {
                    assert!(exists);
                    assert!(naive_is_sequencing(&spec, ord.elements()));
                    let mut got = ord.elements().to_vec();
                    let mut want = set.clone();
                    got.sort();
                    want.sort();
                    assert_eq!(got, want);
                }
                Err(Error::NotSequenceable) => assert!(!exists, "{set:?}"),
                Err(e) => panic!("{e}"),
            }
        }
    }
}
