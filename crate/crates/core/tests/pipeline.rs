use graphbox::analysis::{finite_bounds_check, gm, gm_capped, ratio_series, Counter, ScaleSchedule};
use graphbox::grid::{graph_box_count, Cap, GridScale, RationalPoint};
use graphbox::oracles::{brute_force_occupancy, Generator};
use graphbox::polyline::BigRational;
use graphbox::sets::{CountedSet, Exponent, ExplicitSet, SetSpec};
use graphbox::witness::build_witness;
use proptest::prelude::*;

fn m(v: u64) -> GridScale {
    GridScale::new(v).unwrap()
}

fn explicit(raw: Vec<(u64, u64)>) -> ExplicitSet {
    ExplicitSet::from_points(
        raw.into_iter()
            .filter(|(n, d)| n <= d)
            .map(|(n, d)| RationalPoint::new(n, d).unwrap())
            .collect(),
    )
}

#[test]
fn witness_on_truncated_power_set_realizes_gm() {
    let set = CountedSet::power(Exponent::integer(1).unwrap());
    let one = BigRational::from_integer(1.into());
    for mv in [4u64, 16, 64, 256] {
        let points = set.explicit_for(mv, mv).unwrap();
        let w = build_witness(&points, m(mv), &one).unwrap();
        assert_eq!(w.bound, gm(&set, m(mv)).unwrap());
        assert!(w.is_sound());
        // the graph over the selected points alone meets every promised cell
        let pts: Vec<(BigRational, BigRational)> =
            w.points.iter().map(|p| (p.x.to_big_rational(), w.function.eval(&p.x.to_big_rational()))).collect();
        assert!(graph_box_count(&pts, m(mv)).unwrap() >= w.bound);
    }
}

#[test]
fn spec_strings_build_the_same_sets_as_constructors() {
    let s: SetSpec = "cantor:ratio=1/3,depth=5".parse().unwrap();
    let built = s.build().unwrap();
    let direct = CountedSet::cantor(1, 3, 5).unwrap();
    let schedule = ScaleSchedule::geometric(3, 3, 243).unwrap();
    assert_eq!(
        ratio_series(&built, &schedule, Counter::Gm).unwrap(),
        ratio_series(&direct, &schedule, Counter::Gm).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_sandwich_on_explicit_sets(
        raw in proptest::collection::vec((0u64..=4096, 1u64..=4096), 1..200),
        mv in 4u64..=512,
    ) {
        let set = explicit(raw);
        prop_assume!(!set.is_empty());
        let counted = CountedSet::explicit(set.clone());
        let r = finite_bounds_check(&counted, m(mv)).unwrap();
        prop_assert!(r.pass(), "{:?}", r);
        prop_assert_eq!(gm_capped(&counted, m(mv), Cap::Bounded(1)).unwrap(), r.n);
        let brute = brute_force_occupancy(&Generator::Points(&set), m(mv), Cap::Bounded(mv)).unwrap();
        prop_assert_eq!(brute.total(), r.gm);
    }

    #[test]
    fn power_counts_match_enumeration(num in 1u32..=4, den in 1u32..=3, mv in 1u64..=3000) {
        let p = Exponent::new(num, den).unwrap();
        let set = CountedSet::power(p);
        for cap in [Cap::Bounded(1), Cap::Bounded(mv), Cap::Unbounded] {
            let want = brute_force_occupancy(&Generator::Power(p), m(mv), cap).unwrap();
            prop_assert_eq!(set.occupancy(m(mv), cap).unwrap(), want);
        }
    }

    #[test]
    fn witnesses_are_sound(
        raw in proptest::collection::vec((0u64..=1024, 1u64..=1024), 1..120),
        mv in 1u64..=128,
        hn in 1i64..=4,
    ) {
        let set = explicit(raw);
        prop_assume!(!set.is_empty());
        let h = BigRational::new(hn.into(), 4.into());
        match build_witness(&set, m(mv), &h) {
            Ok(w) => {
                prop_assert!(w.is_sound());
                prop_assert!(w.columns_distinct());
            }
            Err(graphbox::Error::Capacity { .. }) => prop_assert!(mv * hn as u64 / 4 == 0),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
