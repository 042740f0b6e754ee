//! The shipped demo scenario, checked against hand calculations.

use slicebed::embed_nl::solve_nl;
use slicebed::embed_pl::solve_pl;
use slicebed::model::{LinkId, NodeId, ResidualState, Scenario};
use slicebed::pricing::PriceSnapshot;

fn demo() -> Scenario {
    Scenario::load(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/demo.json")).unwrap()
}

#[test]
fn inventory() {
    let s = demo();
    assert_eq!(s.network.operators.len(), 3);
    assert_eq!(s.network.nodes.len(), 7);
    assert_eq!(s.network.function_nodes().count(), 5);
    // Eight undirected links, one directed link per direction.
    assert_eq!(s.network.links.len(), 16);
    assert_eq!(s.slices.len(), 1);
}

#[test]
fn stored_request_costs_match_hand_computation() {
    let s = demo();
    let slice = &s.slices[0];
    let state = ResidualState::new(&s.network);
    let prices = PriceSnapshot::base(&s.network);
    let nl = solve_nl(&s, &state, slice, &prices).unwrap();
    // Service 0 crosses links 0-1, 1-2, 2-3, 3-5, 5-4 (unit prices
    // 1 + 3 + 1 + 3 + 1) at 5 Mb/s and runs both VNFs on node 3
    // (1.5 + 2.5). Service 1 takes link 6-3 (price 4) at 2 Mb/s and runs
    // the NAT on node 3 (1.25).
    assert_eq!(nl.embedding.total_cost, 45.0 + 4.0 + 8.0 + 1.25);
    let first = &nl.embedding.services[0];
    assert_eq!(first.placement, vec![NodeId(3), NodeId(3)]);
    assert_eq!(first.latency, 11.0 + 3.0);
    let second = &nl.embedding.services[1];
    assert_eq!(second.segments, vec![vec![LinkId(14)], vec![]]);
    for k in [1, 2, 8] {
        let pl = solve_pl(&s, &state, slice, &prices, k).unwrap();
        assert!(pl.embedding.total_cost >= nl.embedding.total_cost);
    }
}
