use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::{ArcId, DynamicGraph, NodeId};
use crate::instance::fixtures::{diamond, random_tiny};
use crate::instance::Commodity;

const EPS: f64 = 1e-4;

fn random_duals(instance: &Instance, seed: u64) -> DualValues {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = DualValues::zero(instance);
    for row in d.capacity.iter_mut().skip(1) {
        for u in row.iter_mut() {
            if rng.gen_bool(0.6) {
                *u = -rng.gen_range(0.0..1.5);
            }
        }
    }
    for u in &mut d.convexity {
        *u = rng.gen_range(-2.0..2.0);
    }
    d
}

fn down(inst: &Instance) -> Path {
    Path::new(&inst.graph, vec![ArcId(2), ArcId(3)]).unwrap()
}

#[test]
fn reduced_cost_formula() {
    let inst = diamond(3, 10.0, 4.0);
    let up = inst.commodities[0].initial_path.clone();
    let zero = DualValues::zero(&inst);
    assert_eq!(reduced_cost(&inst, 0, &PathSequence::repeat(&up, 2), &zero, 0.0).unwrap(), 0.0);
    let flip = PathSequence::new(vec![down(&inst), up.clone()]);
    assert_eq!(reduced_cost(&inst, 0, &flip, &zero, 0.0).unwrap(), 2.0);

    let mut duals = DualValues::zero(&inst);
    duals.convexity[0] = -1.0;
    duals.capacity[1][2] = -0.5;
    let once = PathSequence::new(vec![down(&inst), down(&inst)]);
    assert_eq!(reduced_cost(&inst, 0, &once, &duals, 0.0).unwrap(), 4.0);

    let half = Path::new(&inst.graph, vec![ArcId(0)]).unwrap();
    assert!(reduced_cost(&inst, 0, &PathSequence::repeat(&half, 2), &zero, 0.0).is_err());
}

#[test]
fn static_zero_duals_keep_initial_path() {
    let inst = diamond(4, 10.0, 1.0);
    let up = inst.commodities[0].initial_path.clone();
    let p = CommodityPricer::new(&inst, 0, &DualValues::zero(&inst), EPS);
    for col in [p.price_all_in_one().unwrap(), p.price_shortest_paths().unwrap()] {
        assert_eq!(col.sequence, PathSequence::repeat(&up, 3));
        assert!((col.reduced_cost - 6.0 * EPS).abs() < 1e-12);
    }
    let cache = p.interval_paths().unwrap();
    assert_eq!(cache.entries.len(), 6);
    assert!(cache.shortest_path_calls <= 6);
    assert_eq!(min_path_changes(&inst, 0).unwrap(), 0);
}

#[test]
fn disconnection_splits_intervals() {
    // A single route whose middle arc vanishes at step 2 of 3.
    let mut g = DynamicGraph::from_arcs(3, &[(0, 1), (1, 2), (0, 2)], 5.0, 4);
    g.set_active(2, ArcId(1), false);
    let p = Path::new(&g, vec![ArcId(0), ArcId(1)]).unwrap();
    let c = Commodity {
        origins: vec![NodeId(0); 4],
        destinations: vec![NodeId(2); 4],
        demand: 1.0,
        initial_path: p,
    };
    g.set_active(2, ArcId(2), false);
    let inst = Instance::new(g.clone(), vec![c.clone()], 1.0, 0.0).unwrap();
    let pricer = CommodityPricer::new(&inst, 0, &DualValues::zero(&inst), EPS);
    assert!(matches!(pricer.interval_paths(), Err(PricingError::Infeasible { step: 2, .. })));

    g.set_active(2, ArcId(2), true);
    g.set_active(1, ArcId(2), false);
    g.set_active(3, ArcId(2), false);
    let inst = Instance::new(g, vec![c], 1.0, 0.0).unwrap();
    let cache = CommodityPricer::new(&inst, 0, &DualValues::zero(&inst), EPS).interval_paths().unwrap();
    assert!(cache.get(1, 2).is_none());
    assert!(cache.get(2, 3).is_none());
    assert!(cache.get(1, 1).is_some() && cache.get(2, 2).is_some() && cache.get(3, 3).is_some());
    // Breaking the initial path at step 2 forces two changes.
    assert_eq!(min_path_changes(&inst, 0).unwrap(), 2);
}

#[test]
fn one_forced_change() {
    let mut inst = diamond(5, 10.0, 1.0);
    inst.graph.set_active(3, ArcId(0), false);
    assert_eq!(min_path_changes(&inst, 0).unwrap(), 1);
}

#[test]
fn interval_costs_are_additive() {
    let inst = random_tiny(7, 5, 4, 1).unwrap_or_else(|| diamond(5, 3.0, 1.0));
    let duals = random_duals(&inst, 3);
    let p = CommodityPricer::new(&inst, 0, &duals, EPS);
    let cache = p.interval_paths().unwrap();
    for (&(t1, t2), e) in &cache.entries {
        if let Some((path, cost)) = e {
            let sum: f64 = (t1..=t2).map(|t| path.cost(p.step_costs(t)).unwrap()).sum();
            assert!((sum - cost).abs() < 1e-9);
        }
    }
}

#[test]
fn switching_paths_when_prices_move() {
    let inst = diamond(3, 10.0, 1.0);
    let mut duals = DualValues::zero(&inst);
    // Upper route expensive at step 1, lower route expensive at step 2.
    duals.capacity[1][0] = -5.0;
    duals.capacity[2][2] = -5.0;
    let mut cheap = inst.clone();
    cheap.alpha = 0.01;
    let p = CommodityPricer::new(&cheap, 0, &duals, EPS);
    let col = p.price_all_in_one().unwrap();
    assert_eq!(col.sequence, PathSequence::new(vec![down(&inst), inst.commodities[0].initial_path.clone()]));
    let brute = brute_force_pricing(&cheap, 0, &duals, EPS).unwrap();
    assert!((col.reduced_cost - brute.reduced_cost).abs() < 1e-9);
    assert!((p.price_shortest_paths().unwrap().reduced_cost - brute.reduced_cost).abs() < 1e-9);
}

#[test]
fn candidate_dp_forced_and_enumerated() {
    let inst = diamond(3, 10.0, 1.0);
    let up = inst.commodities[0].initial_path.clone();
    let p = CommodityPricer::new(&inst, 0, &random_duals(&inst, 11), EPS);
    let col = p.candidate_dp(&[vec![down(&inst)], vec![up.clone()]]).unwrap();
    assert_eq!(col.sequence, PathSequence::new(vec![down(&inst), up.clone()]));
    assert!(matches!(p.candidate_dp(&[vec![up.clone()], vec![]]), Err(PricingError::EmptyCandidates(2))));

    let both = vec![up.clone(), down(&inst)];
    let col = p.candidate_dp(&[both.clone(), both.clone()]).unwrap();
    let mut best = f64::INFINITY;
    for a in &both {
        for b in &both {
            best = best.min(p.evaluate(&PathSequence::new(vec![a.clone(), b.clone()])));
        }
    }
    assert!((col.reduced_cost - best).abs() < 1e-12);
}

#[test]
fn k_shortest_guard() {
    let inst = diamond(3, 10.0, 1.0);
    let zero = DualValues::zero(&inst);
    let p = CommodityPricer::new(&inst, 0, &zero, 0.0);
    let (_, exact) = p.price_k_shortest(1).unwrap();
    assert!(!exact);
    let (col, exact) = p.price_k_shortest(10).unwrap();
    assert!(exact);
    assert!((col.reduced_cost - p.price_all_in_one().unwrap().reduced_cost).abs() < 1e-12);

    let g = DynamicGraph::from_arcs(2, &[(0, 1)], 1.0, 3);
    let c = Commodity {
        origins: vec![NodeId(0); 3],
        destinations: vec![NodeId(1); 3],
        demand: 1.0,
        initial_path: Path::new(&g, vec![ArcId(0)]).unwrap(),
    };
    let line = Instance::new(g, vec![c], 1.0, 0.0).unwrap();
    let (_, exact) = CommodityPricer::new(&line, 0, &DualValues::zero(&line), EPS).price_k_shortest(1).unwrap();
    assert!(exact);
}

#[test]
fn brute_force_limits() {
    let inst = diamond(2, 10.0, 1.0);
    let duals = random_duals(&inst, 5);
    let col = brute_force_pricing(&inst, 0, &duals, EPS).unwrap();
    let up = inst.commodities[0].initial_path.clone();
    let a = reduced_cost(&inst, 0, &PathSequence::repeat(&up, 1), &duals, EPS).unwrap();
    let b = reduced_cost(&inst, 0, &PathSequence::repeat(&down(&inst), 1), &duals, EPS).unwrap();
    assert!((col.reduced_cost - a.min(b)).abs() < 1e-12);

    // Complete graph on 9 nodes: thousands of paths per step.
    let arcs: Vec<(usize, usize)> = (0..9).flat_map(|u| (0..9).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    let g = DynamicGraph::from_arcs(9, &arcs, 1.0, 3);
    let c = Commodity {
        origins: vec![NodeId(0); 3],
        destinations: vec![NodeId(8); 3],
        demand: 1.0,
        initial_path: Path::new(&g, vec![g.find_arc(NodeId(0), NodeId(8)).unwrap()]).unwrap(),
    };
    let big = Instance::new(g, vec![c], 1.0, 0.0).unwrap();
    assert!(matches!(
        brute_force_pricing(&big, 0, &DualValues::zero(&big), EPS),
        Err(PricingError::SearchTooLarge(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn schemes_agree_with_brute_force(seed in any::<u64>(), horizon in 1usize..=4, alpha in prop::sample::select(vec![0.3, 1.0, 2.5])) {
        let Some(mut inst) = random_tiny(seed, 5, horizon, 1) else { return Ok(()) };
        inst.alpha = alpha;
        let duals = random_duals(&inst, seed ^ 0x5eed);
        let brute = brute_force_pricing(&inst, 0, &duals, EPS).unwrap();
        let p = CommodityPricer::new(&inst, 0, &duals, EPS);
        let (aio, cache) = p.all_in_one_with_cache().unwrap();
        prop_assert!(cache.shortest_path_calls <= horizon * (horizon + 1) / 2);
        prop_assert!((aio.reduced_cost - brute.reduced_cost).abs() < 1e-9, "{} vs {}", aio.reduced_cost, brute.reduced_cost);
        let direct = reduced_cost(&inst, 0, &aio.sequence, &duals, EPS).unwrap();
        prop_assert!((direct - aio.reduced_cost).abs() < 1e-9);
        let sp = p.price_shortest_paths().unwrap();
        prop_assert!((sp.reduced_cost - brute.reduced_cost).abs() < 1e-9);
        let (ks, exact) = p.price_k_shortest(50).unwrap();
        if exact {
            prop_assert!((ks.reduced_cost - brute.reduced_cost).abs() < 1e-9);
        }
        prop_assert!(ks.reduced_cost >= brute.reduced_cost - 1e-9);
    }

    #[test]
    fn min_changes_matches_enumeration(seed in any::<u64>(), horizon in 1usize..=4) {
        let Some(inst) = random_tiny(seed, 5, horizon, 1) else { return Ok(()) };
        let mut unit = inst.clone();
        unit.alpha = 1.0;
        let brute = brute_force_pricing(&unit, 0, &DualValues::zero(&unit), 0.0).unwrap();
        prop_assert_eq!(min_path_changes(&inst, 0).unwrap() as f64, brute.reduced_cost);
    }
}

#[test]
fn random_fixture_is_mostly_feasible() {
    let hits = (0..100).filter(|&s| random_tiny(s, 5, 4, 1).is_some()).count();
    assert!(hits >= 40, "{hits}");
}
