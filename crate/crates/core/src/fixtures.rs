//! Small hand-checkable scenarios shared by unit tests, integration tests
//! and the examples in the README.

use crate::model::{NodeId, OperatorId, Scenario, ServiceChain, SliceRequest, TrustSpec, VnfId};

/// `n` function nodes of operator 1 in a line, joined by undirected links
/// of capacity `link_capacity`, delay 1 and unit price 1. Link `2i` goes
/// from `i` to `i+1` and link `2i+1` back. Each node has 10 units of
/// "cpu" at price 1. VNF 0 takes delay 2 and 1 cpu; VNF 1 takes delay 1
/// and 2 cpu.
pub fn line_scenario(n: usize, link_capacity: f64) -> Scenario {
    let nodes: Vec<String> = (0..n)
        .map(|i| {
            format!(
                r#"{{"id": {i}, "operator_id": 1, "is_function_node": true, "capacity": [10], "unit_price": [1]}}"#
            )
        })
        .collect();
    let links: Vec<String> = (0..n.saturating_sub(1))
        .map(|i| {
            format!(
                r#"{{"id": {i}, "endpoints": [{i}, {}], "capacity": {link_capacity}, "prop_delay": 1, "unit_price": 1}}"#,
                i + 1
            )
        })
        .collect();
    let text = format!(
        r#"{{
  "resources": [{{"id": 0, "name": "cpu"}}],
  "operators": [{{"id": 1, "name": "A"}}],
  "nodes": [{}],
  "links": [{}],
  "vnfs": [
    {{"id": 0, "name": "fw", "proc_delay": 2, "demand": [1]}},
    {{"id": 1, "name": "dpi", "proc_delay": 1, "demand": [2]}}
  ]
}}"#,
        nodes.join(","),
        links.join(",")
    );
    Scenario::from_json(&text).expect("fixture scenario is valid")
}

/// Nodes 0 and 2 of operator 1 joined through node 1 of operator 2; both
/// operators trust each other. Links: 0 = 0->1, 1 = 1->0, 2 = 1->2, 3 = 2->1.
pub fn two_operator_line() -> Scenario {
    let text = r#"{
  "resources": [{"id": 0, "name": "cpu"}],
  "operators": [{"id": 1, "name": "A"}, {"id": 2, "name": "B"}],
  "nodes": [
    {"id": 0, "operator_id": 1, "is_function_node": true, "capacity": [4], "unit_price": [1]},
    {"id": 1, "operator_id": 2, "is_function_node": true, "capacity": [4], "unit_price": [1]},
    {"id": 2, "operator_id": 1, "is_function_node": true, "capacity": [4], "unit_price": [1]}
  ],
  "links": [
    {"id": 0, "endpoints": [0, 1], "capacity": 10, "prop_delay": 1, "unit_price": 1},
    {"id": 1, "endpoints": [1, 2], "capacity": 10, "prop_delay": 1, "unit_price": 1}
  ],
  "trust": [{"operator": 1, "trusts": [2]}, {"operator": 2, "trusts": [1]}],
  "vnfs": [{"id": 0, "proc_delay": 1, "demand": [1]}]
}"#;
    Scenario::from_json(text).expect("fixture scenario is valid")
}

/// A slice whose services are `(source, sink, bandwidth, max_latency,
/// chain)`, with service ids in order, the catalog derived from the
/// scenario, and the origin set to the operator of the first source.
pub fn simple_slice(
    scenario: &Scenario,
    id: u64,
    services: &[(usize, usize, f64, f64, Vec<usize>)],
) -> SliceRequest {
    let services: Vec<ServiceChain> = services
        .iter()
        .enumerate()
        .map(|(i, (s, t, b, lat, chain))| ServiceChain {
            id: i,
            source: NodeId(*s),
            sink: NodeId(*t),
            vnf_sequence: chain.iter().map(|&f| VnfId(f)).collect(),
            bandwidth: *b,
            max_latency: *lat,
        })
        .collect();
    let origin = services
        .first()
        .map(|s| scenario.network.node(s.source).operator_id)
        .unwrap_or(OperatorId(1));
    SliceRequest {
        id,
        slice_type: None,
        vnf_catalog: SliceRequest::derive_catalog(scenario, &services),
        services,
        trust_spec: TrustSpec {
            origin,
            allow: Vec::new(),
            deny: Vec::new(),
        },
        arrival_time: 0.0,
        holding_time: 1.0,
    }
}
