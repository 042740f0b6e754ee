//! Shortest and k-shortest loopless paths on the expanded network, and the
//! candidate paths the path–link formulation chooses from.
//!
//! Paths are edge sequences from the expanded source to the expanded sink.
//! Equal-weight paths are ordered by their expanded node sequence, then by
//! their edge sequence, so results never depend on hash or heap order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::Serialize;

use crate::expand::{build_expanded, ExpandError, ExpandedNetwork};
use crate::model::{
    allowed_operators, LinkId, ModelError, NodeId, ResidualState, ResourceId, Scenario,
    SliceRequest,
};
use crate::pricing::PriceSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Cost,
    Latency,
}

impl Weight {
    fn of(self, exp: &ExpandedNetwork, edge: usize) -> f64 {
        let e = exp.edge(edge);
        match self {
            Weight::Cost => e.cost,
            Weight::Latency => e.latency,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub edges: Vec<usize>,
    pub nodes: Vec<usize>,
    pub weight: f64,
}

impl Path {
    fn from_edges(exp: &ExpandedNetwork, weight: Weight, edges: Vec<usize>) -> Self {
        let nodes = exp.path_nodes(&edges);
        let w = edges.iter().map(|&e| weight.of(exp, e)).sum();
        Self {
            edges,
            nodes,
            weight: w,
        }
    }

    fn order(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| self.nodes.cmp(&other.nodes))
            .then_with(|| self.edges.cmp(&other.edges))
    }
}

struct Ranked(Path);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.0.order(&other.0) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.order(&other.0)
    }
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // Reversed so that BinaryHeap pops the smallest (dist, node).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Dijkstra from `from` to `to` avoiding `banned_nodes` and `banned_edges`.
/// Among equal-weight predecessors the one with the smaller node sequence
/// from `from` wins.
fn dijkstra(
    exp: &ExpandedNetwork,
    weight: Weight,
    from: usize,
    to: usize,
    banned_nodes: &[bool],
    banned_edges: &BTreeSet<usize>,
) -> Option<Vec<usize>> {
    let n = exp.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(HeapItem {
        dist: 0.0,
        node: from,
    });
    let trace = |pred: &[Option<usize>], mut at: usize| {
        let mut seq = vec![at];
        while let Some(e) = pred[at] {
            at = exp.edge(e).from;
            seq.push(at);
        }
        seq.reverse();
        seq
    };
    while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == to {
            break;
        }
        for &e in exp.out_edges(u) {
            if banned_edges.contains(&e) {
                continue;
            }
            let w = exp.edge(e).to;
            if banned_nodes[w] || done[w] {
                continue;
            }
            let nd = d + weight.of(exp, e);
            let better = match nd.total_cmp(&dist[w]) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => {
                    let incumbent = pred[w].expect("finite distance has a predecessor");
                    let mut mine = trace(&pred, u);
                    let mut theirs = trace(&pred, exp.edge(incumbent).from);
                    mine.push(w);
                    theirs.push(w);
                    (mine, e) < (theirs, incumbent)
                }
            };
            if better {
                dist[w] = nd;
                pred[w] = Some(e);
                heap.push(HeapItem { dist: nd, node: w });
            }
        }
    }
    if !done[to] {
        return None;
    }
    let mut edges = Vec::new();
    let mut at = to;
    while let Some(e) = pred[at] {
        edges.push(e);
        at = exp.edge(e).from;
    }
    edges.reverse();
    Some(edges)
}

/// Minimum-weight path from the expanded source to the expanded sink.
pub fn shortest_path(exp: &ExpandedNetwork, weight: Weight) -> Option<Path> {
    let banned = vec![false; exp.num_nodes()];
    dijkstra(
        exp,
        weight,
        exp.source(),
        exp.sink(),
        &banned,
        &BTreeSet::new(),
    )
    .map(|edges| Path::from_edges(exp, weight, edges))
}

/// Up to `k` loopless source-to-sink paths in nondecreasing weight (Yen's
/// deviation search).
pub fn k_shortest_paths(exp: &ExpandedNetwork, k: usize, weight: Weight) -> Vec<Path> {
    let mut accepted: Vec<Path> = Vec::new();
    if k == 0 {
        return accepted;
    }
    let Some(first) = shortest_path(exp, weight) else {
        return accepted;
    };
    accepted.push(first);
    let mut pending: BTreeSet<Ranked> = BTreeSet::new();
    let mut known: BTreeSet<Vec<usize>> = BTreeSet::new();
    known.insert(accepted[0].edges.clone());
    let mut banned_nodes = vec![false; exp.num_nodes()];
    while accepted.len() < k {
        let last = accepted.last().expect("nonempty").clone();
        for i in 0..last.edges.len() {
            let spur = last.nodes[i];
            let root_edges = &last.edges[..i];
            let mut banned_edges = BTreeSet::new();
            for p in &accepted {
                if p.edges.len() > i && p.edges[..i] == *root_edges {
                    banned_edges.insert(p.edges[i]);
                }
            }
            for &v in &last.nodes[..i] {
                banned_nodes[v] = true;
            }
            let spur_path = dijkstra(exp, weight, spur, exp.sink(), &banned_nodes, &banned_edges);
            for &v in &last.nodes[..i] {
                banned_nodes[v] = false;
            }
            if let Some(tail) = spur_path {
                let mut edges = root_edges.to_vec();
                edges.extend(tail);
                if known.insert(edges.clone()) {
                    pending.insert(Ranked(Path::from_edges(exp, weight, edges)));
                }
            }
        }
        match pending.pop_first() {
            Some(Ranked(p)) => accepted.push(p),
            None => break,
        }
    }
    accepted
}

/// A trust- and order-compliant embedding of one service.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidatePath {
    pub service_id: usize,
    /// Rank within the service's candidate list.
    pub index: usize,
    pub placement: Vec<NodeId>,
    pub segments: Vec<Vec<LinkId>>,
    pub cost: f64,
    pub latency: f64,
    /// Part of `cost` due to VNF placement.
    pub placement_cost: f64,
    pub expanded_nodes: Vec<usize>,
    /// Bandwidth per link, counting every traversal.
    pub link_use: Vec<(LinkId, f64)>,
    /// Demand per (node, resource), counting every placed VNF.
    pub node_use: Vec<((NodeId, ResourceId), f64)>,
}

impl CandidatePath {
    fn new(
        scenario: &Scenario,
        slice: &SliceRequest,
        exp: &ExpandedNetwork,
        path: &Path,
        index: usize,
    ) -> Self {
        let service = slice
            .services
            .iter()
            .find(|s| s.id == exp.service_id)
            .expect("expanded network belongs to the slice");
        let mapped = exp.map_back(&path.edges);
        let mut links: BTreeMap<LinkId, f64> = BTreeMap::new();
        for &l in mapped.segments.iter().flatten() {
            *links.entry(l).or_insert(0.0) += service.bandwidth;
        }
        let mut nodes: BTreeMap<(NodeId, ResourceId), f64> = BTreeMap::new();
        for (&f, &v) in service.vnf_sequence.iter().zip(&mapped.placement) {
            for (r, &d) in scenario.vnf(f).demand.iter().enumerate() {
                if d > 0.0 {
                    *nodes.entry((v, ResourceId(r))).or_insert(0.0) += d;
                }
            }
        }
        Self {
            service_id: exp.service_id,
            index,
            placement: mapped.placement,
            segments: mapped.segments,
            cost: mapped.cost,
            latency: mapped.latency,
            placement_cost: mapped.placement_cost,
            expanded_nodes: path.nodes.clone(),
            link_use: links.into_iter().collect(),
            node_use: nodes.into_iter().collect(),
        }
    }

    /// Whether the candidate fits on its own into the residual capacities.
    pub fn fits(&self, scenario: &Scenario, state: &ResidualState) -> bool {
        let net = &scenario.network;
        self.link_use
            .iter()
            .all(|&(l, a)| state.link_fits(net, l, a))
            && self.node_use.iter().all(|&((v, r), a)| {
                let mut demand = vec![0.0; net.num_resources()];
                demand[r.0] = a;
                state.node_fits(net, v, &demand)
            })
    }

    pub fn routing_cost(&self) -> f64 {
        self.cost - self.placement_cost
    }
}

/// Latency test with the same rounding slack as the embedding checker.
fn within_budget(latency: f64, max: f64) -> bool {
    latency <= max * (1.0 + 1e-12)
}

/// Candidate paths of every service of `slice`, in service order.
///
/// Each list holds the `k` cheapest loopless paths of the service's
/// expanded network, minus those over the latency budget and those that do
/// not fit alone into the residual capacities. An empty list means the
/// service cannot be embedded from these candidates.
pub fn generate_candidates(
    scenario: &Scenario,
    state: &ResidualState,
    slice: &SliceRequest,
    k: usize,
    prices: &PriceSnapshot,
) -> Result<Vec<Vec<CandidatePath>>, ModelError> {
    let allowed = allowed_operators(slice, &scenario.trust)?;
    let mut out = Vec::with_capacity(slice.services.len());
    for service in &slice.services {
        let exp = match build_expanded(scenario, slice, service, &allowed, prices, None) {
            Ok(exp) => exp,
            Err(ExpandError::UnreachableEndpoints { .. }) => {
                out.push(Vec::new());
                continue;
            }
        };
        let mut list = Vec::new();
        for path in k_shortest_paths(&exp, k, Weight::Cost) {
            let cand = CandidatePath::new(scenario, slice, &exp, &path, list.len());
            if within_budget(cand.latency, service.max_latency) && cand.fits(scenario, state) {
                list.push(cand);
            }
        }
        out.push(list);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{line_scenario, simple_slice};

    fn diamond() -> Scenario {
        // 0 -> 1 -> 3 costs 1 + 2, 0 -> 2 -> 3 costs 2 + 3, 0 -> 3 costs 5.
        let text = r#"{
  "resources": [{"id": 0, "name": "cpu"}],
  "operators": [{"id": 1, "name": "A"}],
  "nodes": [
    {"id": 0, "operator_id": 1, "is_function_node": false, "capacity": [0], "unit_price": [0]},
    {"id": 1, "operator_id": 1, "is_function_node": false, "capacity": [0], "unit_price": [0]},
    {"id": 2, "operator_id": 1, "is_function_node": false, "capacity": [0], "unit_price": [0]},
    {"id": 3, "operator_id": 1, "is_function_node": false, "capacity": [0], "unit_price": [0]}
  ],
  "links": [
    {"id": 0, "endpoints": [0, 1], "capacity": 10, "prop_delay": 1, "unit_price": 1, "directed": true},
    {"id": 1, "endpoints": [1, 3], "capacity": 10, "prop_delay": 1, "unit_price": 2, "directed": true},
    {"id": 2, "endpoints": [0, 2], "capacity": 10, "prop_delay": 1, "unit_price": 2, "directed": true},
    {"id": 3, "endpoints": [2, 3], "capacity": 10, "prop_delay": 1, "unit_price": 3, "directed": true},
    {"id": 4, "endpoints": [0, 3], "capacity": 10, "prop_delay": 5, "unit_price": 5, "directed": true}
  ],
  "vnfs": []
}"#;
        Scenario::from_json(text).unwrap()
    }

    fn expanded(s: &Scenario, slice: &SliceRequest) -> ExpandedNetwork {
        let allowed = allowed_operators(slice, &s.trust).unwrap();
        let prices = PriceSnapshot::base(&s.network);
        build_expanded(s, slice, &slice.services[0], &allowed, &prices, None).unwrap()
    }

    #[test]
    fn diamond_costs() {
        let s = diamond();
        let slice = simple_slice(&s, 1, &[(0, 3, 1.0, 10.0, vec![])]);
        let exp = expanded(&s, &slice);
        let best = shortest_path(&exp, Weight::Cost).unwrap();
        assert_eq!(best.weight, 3.0);
        let two: Vec<f64> = k_shortest_paths(&exp, 2, Weight::Cost)
            .iter()
            .map(|p| p.weight)
            .collect();
        assert_eq!(two, vec![3.0, 5.0]);
        let all = k_shortest_paths(&exp, 10, Weight::Cost);
        assert_eq!(all.len(), 3);
        // Tie at cost 5 broken by node sequence: [0, 2, 3] before [0, 3].
        assert_eq!(all[1].nodes, vec![0, 2, 3]);
        assert_eq!(all[2].nodes, vec![0, 3]);
        assert_eq!(shortest_path(&exp, Weight::Latency).unwrap().weight, 2.0);
    }

    #[test]
    fn k_one_is_shortest_path() {
        let s = diamond();
        let slice = simple_slice(&s, 1, &[(0, 3, 1.0, 10.0, vec![])]);
        let exp = expanded(&s, &slice);
        assert_eq!(
            k_shortest_paths(&exp, 1, Weight::Cost),
            vec![shortest_path(&exp, Weight::Cost).unwrap()]
        );
        assert!(k_shortest_paths(&exp, 0, Weight::Cost).is_empty());
    }

    #[test]
    fn disconnected_has_no_path() {
        let s = diamond();
        let slice = simple_slice(&s, 1, &[(3, 0, 1.0, 10.0, vec![])]);
        let exp = expanded(&s, &slice);
        assert!(shortest_path(&exp, Weight::Cost).is_none());
        assert!(k_shortest_paths(&exp, 3, Weight::Cost).is_empty());
    }

    #[test]
    fn latency_budget_filters_candidates() {
        let s = line_scenario(3, 10.0);
        let prices = PriceSnapshot::base(&s.network);
        let st = ResidualState::new(&s.network);
        let slice = simple_slice(&s, 1, &[(0, 2, 1.0, 3.9, vec![0])]);
        let c = generate_candidates(&s, &st, &slice, 8, &prices).unwrap();
        assert!(c[0].is_empty());
        let slice = simple_slice(&s, 1, &[(0, 2, 1.0, 4.0, vec![0])]);
        let c = generate_candidates(&s, &st, &slice, 8, &prices).unwrap();
        assert_eq!(c[0].len(), 3);
        for (i, cand) in c[0].iter().enumerate() {
            assert_eq!(cand.index, i);
            assert_eq!(cand.latency, 4.0);
            assert_eq!(cand.link_use, vec![(LinkId(0), 1.0), (LinkId(2), 1.0)]);
        }
    }

    #[test]
    fn candidates_are_sorted_by_cost() {
        let s = line_scenario(4, 10.0);
        let prices = PriceSnapshot::base(&s.network);
        let st = ResidualState::new(&s.network);
        let slice = simple_slice(&s, 1, &[(0, 3, 2.0, 100.0, vec![0, 1])]);
        let c = generate_candidates(&s, &st, &slice, 50, &prices).unwrap();
        assert!(c[0].len() > 4);
        assert!(c[0].windows(2).all(|w| w[0].cost <= w[1].cost));
    }
}
