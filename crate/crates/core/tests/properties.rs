//! Invariants over random tiny instances and short simulations.

mod common;

use proptest::prelude::*;
use slicebed::embed_nl::solve_nl;
use slicebed::embed_pl::solve_pl;
use slicebed::engine::{Engine, EngineKind};
use slicebed::model::{
    check_embedding, Embedding, LinkId, NodeId, ResidualState, Scenario, SliceRequest,
};
use slicebed::paths::generate_candidates;
use slicebed::pricing::{PriceSnapshot, PricingPolicy};
use slicebed::sim::{generate_trace, run, RunOptions};

fn instance(seed: u64) -> (Scenario, SliceRequest) {
    let mut rng = common::rng(seed);
    let scenario = common::tiny_scenario(&mut rng);
    let slice = common::tiny_slice(&scenario, &mut rng, seed);
    (scenario, slice)
}

fn touched_nodes(scenario: &Scenario, emb: &Embedding) -> Vec<NodeId> {
    let net = &scenario.network;
    let mut nodes = Vec::new();
    for s in &emb.services {
        nodes.extend(&s.placement);
        for l in s.segments.iter().flatten() {
            nodes.push(net.link(*l).source);
            nodes.push(net.link(*l).target);
        }
    }
    nodes
}

fn embeddings(scenario: &Scenario, state: &ResidualState, slice: &SliceRequest) -> Vec<Embedding> {
    let prices = PriceSnapshot::base(&scenario.network);
    let mut out = Vec::new();
    if let Ok(a) = solve_nl(scenario, state, slice, &prices) {
        out.push(a.embedding);
    }
    for k in [1, 3] {
        if let Ok(a) = solve_pl(scenario, state, slice, &prices, k) {
            out.push(a.embedding);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn embeddings_stay_inside_permitted_operators(seed in any::<u64>()) {
        let (scenario, slice) = instance(seed);
        let permitted = common::permitted_operators(&scenario, &slice);
        let state = ResidualState::new(&scenario.network);
        for emb in embeddings(&scenario, &state, &slice) {
            for v in touched_nodes(&scenario, &emb) {
                prop_assert!(permitted.contains(&scenario.network.node(v).operator_id));
            }
        }
    }

    #[test]
    fn candidates_are_feasible_alone_and_ranked(seed in any::<u64>(), k in 1usize..6) {
        let (scenario, slice) = instance(seed);
        let state = ResidualState::new(&scenario.network);
        let prices = PriceSnapshot::base(&scenario.network);
        let Ok(lists) = generate_candidates(&scenario, &state, &slice, k, &prices) else {
            return Ok(());
        };
        prop_assert_eq!(lists.len(), slice.services.len());
        for (service, list) in slice.services.iter().zip(&lists) {
            prop_assert!(list.len() <= k);
            for (i, c) in list.iter().enumerate() {
                prop_assert_eq!(c.index, i);
                prop_assert!(c.latency <= service.max_latency);
                prop_assert!(c.fits(&scenario, &state));
                let single = Embedding {
                    slice_id: slice.id,
                    services: vec![slicebed::model::ServiceEmbedding {
                        service_id: service.id,
                        placement: c.placement.clone(),
                        segments: c.segments.clone(),
                        cost: c.cost,
                        latency: c.latency,
                    }],
                    total_cost: c.cost,
                };
                let solo = SliceRequest { services: vec![service.clone()], ..slice.clone() };
                prop_assert!(check_embedding(&scenario, &state, &solo, &single).is_ok());
            }
            for w in list.windows(2) {
                prop_assert!(w[0].cost <= w[1].cost);
            }
        }
    }

    #[test]
    fn checker_accepts_solutions_and_rejects_damaged_ones(seed in any::<u64>()) {
        let (scenario, slice) = instance(seed);
        let state = ResidualState::new(&scenario.network);
        let net = &scenario.network;
        for emb in embeddings(&scenario, &state, &slice) {
            prop_assert!(check_embedding(&scenario, &state, &slice, &emb).is_ok());

            let mut cut = emb.clone();
            if let Some(seg) = cut.services.iter_mut().flat_map(|s| s.segments.iter_mut()).find(|s| !s.is_empty()) {
                seg.remove(0);
                prop_assert!(check_embedding(&scenario, &state, &slice, &cut).is_err());
            }

            let mut moved = emb.clone();
            if let Some(v) = moved.services.iter_mut().flat_map(|s| s.placement.iter_mut()).next() {
                if let Some(other) = net.nodes.iter().find(|n| !n.is_function_node) {
                    *v = other.id;
                    prop_assert!(check_embedding(&scenario, &state, &slice, &moved).is_err());
                }
            }

            let mut full = ResidualState::new(net);
            let used: Vec<LinkId> = emb.services.iter().flat_map(|s| s.segments.iter().flatten().copied()).collect();
            if let Some(&l) = used.first() {
                let filler = SliceRequest { id: u64::MAX, ..slice.clone() };
                let mut fp = slicebed::model::Footprint::default();
                fp.links.insert(l, net.link(l).capacity);
                full.reserve(net, filler.id, fp).unwrap();
                prop_assert!(check_embedding(&scenario, &full, &slice, &emb).is_err());
            }
        }
    }

    #[test]
    fn reserve_then_release_restores_the_ledger(seed in any::<u64>()) {
        let (scenario, slice) = instance(seed);
        let mut state = ResidualState::new(&scenario.network);
        if let Some(emb) = embeddings(&scenario, &state, &slice).into_iter().next() {
            state.reserve_embedding(&scenario, &slice, &emb).unwrap();
            prop_assert!(state.is_active(slice.id));
            state.release(slice.id).unwrap();
            prop_assert!(state.is_pristine());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn short_runs_conserve_capacity(seed in any::<u64>(), kleinrock in any::<bool>(), nl in any::<bool>()) {
        let scenario = slicebed::fixtures::line_scenario(4, 12.0);
        let mut workload = scenario.workload.clone();
        workload.seed = seed;
        workload.arrival_rate = 1.0;
        workload.mean_holding_time = 3.0;
        workload.horizon = 40.0;
        let trace = generate_trace(&scenario, &workload);
        let mut policy = PricingPolicy::default();
        if kleinrock {
            policy = PricingPolicy::kleinrock(100.0);
        }
        let kind = if nl { EngineKind::Nl } else { EngineKind::Pl { k: 3 } };
        let engine = Engine::new(kind, policy);
        let options = RunOptions { verify: true, audit: true, trace: true, sample_interval: 1.0 };
        let r = run(&scenario, &trace, workload.horizon, &engine, &options);
        let all = r.metrics.all();
        prop_assert_eq!(all.offered as usize, trace.len());
        prop_assert_eq!(all.accepted + all.blocked, all.offered);
        prop_assert_eq!(r.metrics.checker_failures, 0);
        prop_assert_eq!(r.metrics.conservation_violations, 0);
        prop_assert!(r.metrics.drained_to_initial);
        prop_assert!(r.metrics.max_concurrent as f64 >= r.metrics.mean_concurrent);
    }
}
