mod common;

use common::{random_free_cell, random_influence, random_map};
use iakrc_core::cost::Cost;
use iakrc_core::grid::{Cell, CellKind, Direction, GridMap};
use iakrc_core::maplayers::{
    aggregate_graph, ConfidenceParams, ConfidenceStats, Edge, GeometricLayer, InterferenceLayer, RegulationLayer,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_edge(w: i32, rng: &mut impl Rng) -> Edge {
    let u = Cell::new(rng.gen_range(0..w), rng.gen_range(0..w));
    let d = Direction::ALL[rng.gen_range(0..4)];
    (u, u.step(d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn blocked_set_respects_fifo_and_threshold(seed in any::<u64>(), cap in 1usize..12, steps in 1u64..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ConfidenceParams { fifo_capacity: cap, ..ConfidenceParams::default() };
        let mut conf = ConfidenceStats::default();
        for now in 0..steps {
            for _ in 0..rng.gen_range(0..6) {
                let e = random_edge(5, &mut rng);
                conf.record(e, rng.gen_bool(0.4));
            }
            conf.refresh(now, &params);
            prop_assert!(conf.blocked().len() <= cap);
            prop_assert_eq!(conf.fifo().len(), conf.blocked().len());
            prop_assert!(conf.fifo().iter().all(|e| conf.is_blocked(*e)));
            for e in conf.blocked() {
                let (succ, total) = conf.counts(*e).unwrap();
                prop_assert!(total > 0);
                prop_assert!((f64::from(succ) / f64::from(total)) < params.threshold);
            }
        }
    }

    #[test]
    fn more_influence_never_lowers_weights(seed in any::<u64>(), cm in 0.0..4.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(8, 8, 0.2, &mut rng);
        let geo = GeometricLayer::fully_observed(&map);
        let low = random_influence(8, 8, 1.0, &mut rng);
        let mut high = low.clone();
        for c in map.cells() {
            high.set(c, low.at(c) + rng.gen_range(0.0..1.0));
        }
        let (reg, conf) = (RegulationLayer::new(), ConfidenceStats::default());
        let gl = aggregate_graph(&geo, &reg, &conf, Some(&low), cm, 0).unwrap();
        let gh = aggregate_graph(&geo, &reg, &conf, Some(&high), cm, 0).unwrap();
        for ((u, v, wl), (_, _, wh)) in gl.edges().zip(gh.edges()) {
            prop_assert!(wl <= wh, "{u}->{v}");
        }
    }

    #[test]
    fn incremental_observation_matches_batch(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(12, 12, 0.25, &mut rng);
        let views: Vec<Cell> = (0..6).filter_map(|_| random_free_cell(&map, &mut rng)).collect();
        let (reg, conf) = (RegulationLayer::new(), ConfidenceStats::default());

        let mut inc = GeometricLayer::new(12, 12);
        let mut prev = aggregate_graph(&inc, &reg, &conf, None, 0.0, 0).unwrap();
        for (t, v) in views.iter().enumerate() {
            inc.update_from_sight(&map, *v, 5.0).unwrap();
            let dirty = inc.take_dirty();
            let next = aggregate_graph(&inc, &reg, &conf, None, 0.0, t as u64 + 1).unwrap();
            // Every changed edge ends at or starts from a freshly dirtied cell.
            for i in prev.changed_tails(&next) {
                let u = prev.cell_at(i);
                let touches = dirty.contains(&u) || Direction::ALL.iter().any(|d| dirty.contains(&u.step(*d)));
                prop_assert!(touches, "{u} changed without a dirty neighbour");
            }
            prev = next;
        }

        let mut batch = GeometricLayer::new(12, 12);
        for v in views.iter().rev() {
            batch.update_from_sight(&map, *v, 5.0).unwrap();
        }
        for c in map.cells() {
            prop_assert_eq!(inc.knowledge(c), batch.knowledge(c));
        }
        let gb = aggregate_graph(&batch, &reg, &conf, None, 0.0, 0).unwrap();
        prop_assert!(prev.changed_tails(&gb).is_empty());
    }
}

#[test]
fn interference_only_moves_finite_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let mut map = random_map(10, 10, 0.2, &mut rng);
        map.set(Cell::new(5, 5), CellKind::Door('A')).unwrap();
        let geo = GeometricLayer::fully_observed(&map);
        let reg = RegulationLayer::new();
        let mut conf = ConfidenceStats::default();
        for _ in 0..20 {
            conf.record(random_edge(10, &mut rng), false);
        }
        conf.refresh(0, &ConfidenceParams::default());
        let flat = aggregate_graph(&geo, &reg, &conf, None, 1.5, 0).unwrap();
        let il = random_influence(10, 10, 2.0, &mut rng);
        let bumpy = aggregate_graph(&geo, &reg, &conf, Some(&il), 1.5, 0).unwrap();
        for ((u, v, a), (_, _, b)) in flat.edges().zip(bumpy.edges()) {
            assert_eq!(a.is_finite(), b.is_finite(), "{u}->{v}");
            if let Cost::Finite(b) = b {
                assert!((b - (1.0 + 1.5 * il.at(v))).abs() < 1e-12);
                assert_eq!(a, Cost::ONE);
            }
        }
    }
}

#[test]
fn topology_layers_do_not_touch_interference_costs() {
    let map = GridMap::new(6, 6).unwrap();
    let geo = GeometricLayer::fully_observed(&map);
    let mut il = InterferenceLayer::new(6, 6);
    for c in map.cells() {
        il.set(c, 0.1 * f64::from(c.x));
    }
    let plain = aggregate_graph(&geo, &RegulationLayer::new(), &ConfidenceStats::default(), Some(&il), 1.5, 0).unwrap();
    let mut conf = ConfidenceStats::default();
    let bad = (Cell::new(1, 1), Cell::new(2, 1));
    conf.record(bad, false);
    conf.refresh(0, &ConfidenceParams::default());
    let gated = aggregate_graph(&geo, &RegulationLayer::new(), &conf, Some(&il), 1.5, 0).unwrap();
    for ((u, v, a), (_, _, b)) in plain.edges().zip(gated.edges()) {
        if (u, v) == bad {
            assert!(!b.is_finite());
        } else {
            assert_eq!(a, b);
        }
    }
}
