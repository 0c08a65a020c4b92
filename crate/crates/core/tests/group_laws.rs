use proptest::prelude::*;
use semiseq::{GElem, GroupSpec, Sign};

fn specs() -> Vec<GroupSpec> {
    vec![
        GroupSpec::cyclic(101).unwrap(),
        GroupSpec::dihedral(97).unwrap(),
        GroupSpec::new(13, vec![4], vec![Sign::Minus]).unwrap(),
        GroupSpec::new(11, vec![2, 3], vec![Sign::Minus, Sign::Plus]).unwrap(),
        GroupSpec::new(1_000_003, vec![6], vec![Sign::Minus]).unwrap(),
    ]
}

fn elem(spec: &GroupSpec, x: u64, a: u32) -> GElem {
    GElem::new(x % spec.p(), a % spec.h_size())
}

proptest! {
    #[test]
    fn associative(which in 0usize..5, xs in prop::array::uniform3(any::<u64>()), as_ in prop::array::uniform3(any::<u32>())) {
        let spec = &specs()[which];
        let [g, h, k] = [0, 1, 2].map(|i| elem(spec, xs[i], as_[i]));
        prop_assert_eq!(spec.mul(spec.mul(g, h), k), spec.mul(g, spec.mul(h, k)));
    }

    #[test]
    fn identity_and_inverse(which in 0usize..5, x in any::<u64>(), a in any::<u32>()) {
        let spec = &specs()[which];
        let g = elem(spec, x, a);
        let e = spec.identity();
        prop_assert_eq!(spec.mul(g, e), g);
        prop_assert_eq!(spec.mul(e, g), g);
        prop_assert!(spec.is_identity(spec.mul(g, spec.inv(g))));
        prop_assert!(spec.is_identity(spec.mul(spec.inv(g), g)));
        prop_assert_eq!(spec.inv(spec.inv(g)), g);
    }

    #[test]
    fn scaling_is_an_automorphism(which in 0usize..5, lam in 1u64..1_000_000, xs in prop::array::uniform2(any::<u64>()), as_ in prop::array::uniform2(any::<u32>())) {
        let spec = &specs()[which];
        let lam = lam % spec.p();
        prop_assume!(lam != 0);
        let [g, h] = [0, 1].map(|i| elem(spec, xs[i], as_[i]));
        prop_assert_eq!(spec.scale(lam, spec.mul(g, h)), spec.mul(spec.scale(lam, g), spec.scale(lam, h)));
    }

    #[test]
    fn lift_round_trips(which in 0usize..5, x in any::<u64>()) {
        let spec = &specs()[which];
        let x = x % spec.p();
        let l = spec.lift(x);
        prop_assert!(2 * l.unsigned_abs() <= spec.p());
        prop_assert_eq!(spec.reduce(l), x);
    }
}

#[test]
fn element_count_matches_order() {
    for spec in specs().into_iter().filter(|s| s.p() < 1000) {
        let all: std::collections::HashSet<GElem> = spec.elements().collect();
        assert_eq!(all.len() as u64, spec.order());
    }
}
