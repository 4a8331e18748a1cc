use ect_core::domain::{LabelTree, Side};
use ect_core::reductions::{decode, NodeClassifierSet, ReductionKind, ReductionModel};
use ect_core::tournaments::{
    build_schedule, build_schedule_with, min_dethroning_cost, Engine, Phase, SearchOptions, Semantics, TournamentConfig,
};
use proptest::prelude::*;

#[test]
fn complete_semantics_corrects_m_minus_one_errors() {
    for k in [4, 8] {
        for m in 1..=3 {
            let r = min_dethroning_cost(&TournamentConfig::new(k, m, Semantics::Complete), &SearchOptions::default())
                .unwrap();
            assert!(r.cost as usize >= m, "k={k} m={m} cost={}", r.cost);
        }
    }
}

#[test]
fn single_tournament_decodes_like_the_filter_tree() {
    for k in 2..=9 {
        let tree = LabelTree::paired(k).unwrap();
        for mask in 0u32..(1 << (k - 1)) {
            let decisions: Vec<Side> = (0..k - 1).map(|i| Side::from_bit(((mask >> i) & 1) as u8)).collect();
            let model = ReductionModel::from_parts(
                ReductionKind::FilterTree,
                tree.clone(),
                NodeClassifierSet::from_decisions(&decisions),
            )
            .unwrap();
            let mut engine = Engine::new(k, 1, Semantics::Complete, false).unwrap();
            engine
                .play(|pm| {
                    assert_eq!(pm.phase, Phase::First { tournament: 1 });
                    Ok(decisions[pm.node])
                })
                .unwrap();
            assert_eq!(engine.champion(), Some(decode(&model, &[]).label), "k={k} mask={mask:b}");
        }
    }
}

#[test]
fn single_tournament_matches_pair_like_the_paired_tree() {
    for k in 2..=33 {
        let tree = LabelTree::paired(k).unwrap();
        let s = build_schedule(k, 1, Semantics::Complete).unwrap();
        for mt in s.rounds.iter().flatten() {
            let node = tree.node(mt.node);
            assert!(tree.contains(mt.node, mt.a) && tree.contains(mt.node, mt.b));
            assert_eq!(tree.side_of(mt.node, mt.a), Side::Left);
            assert_eq!(tree.side_of(mt.node, mt.b), Side::Right);
            assert_eq!(node.height(), tree.levels().iter().position(|l| l.contains(&mt.node)).unwrap() + 1);
        }
    }
}

#[test]
fn legality_over_the_grid() {
    let mut k = 4;
    while k <= 1024 {
        for m in 1..=10 {
            for sem in [Semantics::Complete, Semantics::Pool] {
                let s = build_schedule(k, m, sem).unwrap();
                assert!(s.double_plays().is_empty(), "{sem:?} k={k} m={m}");
                if sem == Semantics::Pool {
                    for l in 0..k {
                        let won = s.winners.iter().position(|w| *w == Some(l));
                        assert_eq!(s.losses[l], won.unwrap_or(m));
                    }
                }
            }
        }
        k *= 2;
    }
}

proptest! {
    #[test]
    fn any_outcomes_give_a_legal_schedule(k in 2usize..40, m in 1usize..6, pool in any::<bool>(), seed in any::<u64>()) {
        let sem = if pool { Semantics::Pool } else { Semantics::Complete };
        let mut state = seed | 1;
        let s = build_schedule_with(k, m, sem, |_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            Ok(Side::from_bit((state & 1) as u8))
        }).unwrap();
        prop_assert!(s.double_plays().is_empty());
        let reference = build_schedule(k, m, sem).unwrap();
        prop_assert_eq!(s.occupancy(), reference.occupancy());
        if pool {
            for l in 0..k {
                let won = s.winners.iter().position(|w| *w == Some(l));
                prop_assert_eq!(s.losses[l], won.unwrap_or(m));
            }
        }
    }

    #[test]
    fn full_run_never_double_books(k in 2usize..24, m in 1usize..6, pool in any::<bool>(), repeated in any::<bool>(), seed in any::<u64>()) {
        let sem = if pool { Semantics::Pool } else { Semantics::Complete };
        let mut engine = Engine::new(k, m, sem, repeated).unwrap();
        let mut state = seed | 1;
        let log = engine.play(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            Ok(Side::from_bit((state >> 63) as u8))
        }).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (pm, _) in &log {
            prop_assert!(seen.insert((pm.round, pm.a)));
            prop_assert!(seen.insert((pm.round, pm.b)));
        }
        prop_assert!(engine.champion().is_some());
    }
}
