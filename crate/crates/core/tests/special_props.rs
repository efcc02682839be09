mod common;

use common::*;
use frobtower::series::Side;
use frobtower::special::{is_special, lift_triangular, SpecialSide};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn lift_random_local_towers() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut fails = Vec::new();
    for case in 0..100 {
        let p = if rng.gen_bool(0.5) { 2 } else { 3 };
        let rank = rng.gen_range(1..=3);
        let l = random_local_b(&mut rng, p, Side::At0, rank, 4, 24);
        match lift_triangular(&l, 32, 24) {
            Ok(res) => {
                let sp = is_special(&res.special.tower, SpecialSide::Rsi, 32, 24).unwrap().special;
                if !res.report.ok || !sp {
                    fails.push(format!("{case}: report {:?} special {sp}", res.report));
                }
            }
            Err(e) => fails.push(format!("{case}: p={p} r={rank} {e}")),
        }
    }
    assert!(fails.is_empty(), "{fails:#?}");
}

#[test]
fn transfer_between_lifts() {
    use frobtower::special::transfer_local_witness;
    use frobtower::tower::gauge_apply_with;
    let mut rng = StdRng::seed_from_u64(11);
    let mut fails = Vec::new();
    for case in 0..50 {
        let p = if rng.gen_bool(0.5) { 2 } else { 3 };
        let rank = rng.gen_range(1..=3);
        let l = random_local_b(&mut rng, p, Side::At0, rank, 4, 40);
        let phi = random_local_gauge(&mut rng, p, Side::At0, rank, 4, 40);
        let l2 = gauge_apply_with(&l, &phi, 40).unwrap();
        let r1 = lift_triangular(&l, 32, 40).unwrap();
        let r2 = lift_triangular(&l2, 32, 40).unwrap();
        let psi = r2.witness.compose(&phi).compose(&r1.witness.inverse(40).unwrap());
        match transfer_local_witness(&r1.special, &r2.special, &psi) {
            Ok(_) => {}
            Err(e) => fails.push(format!("{case}: p={p} r={rank} {e} finite {} {}", r1.finite, r2.finite)),
        }
    }
    assert!(fails.is_empty(), "{fails:#?}");
}

#[test]
fn glue_random_pairs() {
    use frobtower::special::glue_triangular;
    let mut rng = StdRng::seed_from_u64(13);
    let mut fails = Vec::new();
    let mut windows = Vec::new();
    for case in 0..50 {
        let p = if rng.gen_bool(0.5) { 2 } else { 3 };
        let rank = rng.gen_range(1..=3);
        let a = random_local_b(&mut rng, p, Side::At0, rank, 4, 40);
        let b = mirror_partner(&mut rng, &a, 40);
        match glue_triangular(&a, &b, 32, 40) {
            Ok(g) if g.report_disc0.ok && g.report_discinf.ok => windows.push((g.report_disc0.min_window, g.report_discinf.min_window)),
            Ok(g) => fails.push(format!("{case}: {:?} {:?}", g.report_disc0, g.report_discinf)),
            Err(e) => fails.push(format!("{case}: p={p} r={rank} {e}")),
        }
    }
    assert!(fails.is_empty(), "{fails:#?}");
}

mod invariants {
    use super::*;
    use frobtower::series::Ring;
    use frobtower::special::{is_diagonal_split, SplitOutcome};
    use frobtower::tower::{gauge_apply_with, restrict};
    use frobtower::unipotent::UnipClass;
    use proptest::prelude::*;

    fn expanded_trivial_at_inf(c: &UnipClass) -> bool {
        (c.prefix.len()..=12).all(|n| c.expand_level(n).unwrap().terms().all(|(e, _)| e <= -1))
    }

    fn gm_case(seed: u64) -> (u64, frobtower::tower::Tower<frobtower::series::LaurentPoly>, StdRng) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = if rand::Rng::gen_bool(&mut rng, 0.5) { 2 } else { 3 };
        let rank = rand::Rng::gen_range(&mut rng, 1..=3);
        let t = random_gm_b(&mut rng, p, rank, 2);
        (p, t, rng)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn is_special_is_gauge_invariant(seed in any::<u64>()) {
            let (p, t, mut rng) = gm_case(seed);
            let phi = random_gm_gauge(&mut rng, p, t.rank(), 2);
            let t2 = gauge_apply_with(&t, &phi, 40).unwrap();
            for side in [SpecialSide::Rsi, SpecialSide::Rs0] {
                prop_assert_eq!(
                    is_special(&t, side, 32, 40).unwrap().special,
                    is_special(&t2, side, 32, 40).unwrap().special
                );
            }
        }

        #[test]
        fn split_verdicts_match_expanded_classes(seed in any::<u64>()) {
            let (_, t, _) = gm_case(seed);
            let local = restrict(&t, Side::AtInf, 40);
            match is_diagonal_split(&local, 32, 40).unwrap() {
                SplitOutcome::Split(d) => {
                    prop_assert!(d.report.ok);
                    for e in &d.trace {
                        prop_assert!(expanded_trivial_at_inf(e.class.as_ref().unwrap()));
                    }
                }
                SplitOutcome::NotSplit(c) => {
                    prop_assert!(!expanded_trivial_at_inf(c.class.as_ref().unwrap()));
                }
            }
            // over gm splitting implies splitting at both discs
            if is_diagonal_split(&t, 32, 40).unwrap().is_split() {
                prop_assert!(is_diagonal_split(&restrict(&t, Side::At0, 40), 32, 40).unwrap().is_split());
                prop_assert!(is_diagonal_split(&local, 32, 40).unwrap().is_split());
            }
            let _ = Ring::Gm;
        }
    }
}
