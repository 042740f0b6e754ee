//! Layered expansion of the physical network for one service chain.
//!
//! For a chain `f_1 .. f_m` the expanded network holds `m + 1` copies
//! (layers) of the physical node set. Expanded node `k * |V| + v` is node
//! `v` in layer `k`. Every allowed physical link is copied into every
//! layer, and a processing edge joins `v` in layer `k - 1` to `v` in layer
//! `k` when `f_k` may run at `v`. A path from the source in layer 0 to the
//! sink in layer `m` therefore fixes both the route and the in-order
//! placement of the chain.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{
    LinkId, NodeId, OperatorId, ResidualState, Scenario, ServiceChain, ServiceEmbedding,
    SliceRequest, VnfId,
};
use crate::pricing::PriceSnapshot;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExpandError {
    #[error("service {service}: source or sink belongs to an operator outside the trusted set")]
    UnreachableEndpoints { service: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Copy of a physical link inside one layer.
    Link(LinkId),
    /// Running the VNF at chain position `position` on the edge's node.
    Process { position: usize, vnf: VnfId },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpandedEdge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub cost: f64,
    pub latency: f64,
}

/// A path of the expanded network translated back to the physical one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappedPath {
    pub placement: Vec<NodeId>,
    pub segments: Vec<Vec<LinkId>>,
    pub cost: f64,
    pub latency: f64,
    /// Part of `cost` due to processing edges.
    pub placement_cost: f64,
}

impl MappedPath {
    pub fn into_service_embedding(self, service_id: usize) -> ServiceEmbedding {
        ServiceEmbedding {
            service_id,
            placement: self.placement,
            segments: self.segments,
            cost: self.cost,
            latency: self.latency,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpandedNetwork {
    pub service_id: usize,
    num_phys: usize,
    num_layers: usize,
    source: usize,
    sink: usize,
    chain: Vec<VnfId>,
    allowed: Vec<bool>,
    edges: Vec<ExpandedEdge>,
    out: Vec<Vec<usize>>,
    link_edge: Vec<Vec<Option<usize>>>,
    process_edge: Vec<Vec<Option<usize>>>,
}

/// Physical nodes whose operator is in `allowed`.
pub fn allowed_nodes(scenario: &Scenario, allowed: &BTreeSet<OperatorId>) -> Vec<bool> {
    scenario
        .network
        .nodes
        .iter()
        .map(|n| allowed.contains(&n.operator_id))
        .collect()
}

/// Builds the expanded network of `service`.
///
/// Nodes of operators outside `allowed` keep their index but get no edges.
/// Edge costs come from `prices`: a link copy costs its unit price times
/// the service bandwidth, a processing edge costs the priced demand of the
/// VNF. When `residual` is given, link copies without room for the service
/// bandwidth and processing edges on nodes without room for the VNF are
/// left out, since no feasible embedding can use them.
pub fn build_expanded(
    scenario: &Scenario,
    slice: &SliceRequest,
    service: &ServiceChain,
    allowed: &BTreeSet<OperatorId>,
    prices: &PriceSnapshot,
    residual: Option<&ResidualState>,
) -> Result<ExpandedNetwork, ExpandError> {
    let net = &scenario.network;
    let n = net.nodes.len();
    let m = service.vnf_sequence.len();
    let allowed = allowed_nodes(scenario, allowed);
    if !allowed[service.source.0] || !allowed[service.sink.0] {
        return Err(ExpandError::UnreachableEndpoints {
            service: service.id,
        });
    }
    let layers = m + 1;
    let mut exp = ExpandedNetwork {
        service_id: service.id,
        num_phys: n,
        num_layers: layers,
        source: service.source.0,
        sink: m * n + service.sink.0,
        chain: service.vnf_sequence.clone(),
        allowed,
        edges: Vec::new(),
        out: vec![Vec::new(); n * layers],
        link_edge: vec![vec![None; net.links.len()]; layers],
        process_edge: vec![vec![None; n]; m],
    };
    let usable_links: Vec<LinkId> = net
        .links
        .iter()
        .filter(|l| exp.allowed[l.source.0] && exp.allowed[l.target.0])
        .filter(|l| residual.is_none_or(|st| st.link_fits(net, l.id, service.bandwidth)))
        .map(|l| l.id)
        .collect();
    for k in 0..layers {
        for &l in &usable_links {
            let link = net.link(l);
            let idx = exp.push(ExpandedEdge {
                from: k * n + link.source.0,
                to: k * n + link.target.0,
                kind: EdgeKind::Link(l),
                cost: prices.hop_cost(l, service.bandwidth),
                latency: link.prop_delay,
            });
            exp.link_edge[k][l.0] = Some(idx);
        }
        if k == m {
            break;
        }
        let f = service.vnf_sequence[k];
        let vnf = scenario.vnf(f);
        let mut hosts: Vec<NodeId> = slice.candidate_nodes(f).to_vec();
        hosts.sort();
        hosts.dedup();
        for v in hosts {
            if !exp.allowed[v.0] || !net.node(v).is_function_node {
                continue;
            }
            if residual.is_some_and(|st| !st.node_fits(net, v, &vnf.demand)) {
                continue;
            }
            let idx = exp.push(ExpandedEdge {
                from: k * n + v.0,
                to: (k + 1) * n + v.0,
                kind: EdgeKind::Process {
                    position: k,
                    vnf: f,
                },
                cost: prices.placement_cost(v, &vnf.demand),
                latency: vnf.proc_delay,
            });
            exp.process_edge[k][v.0] = Some(idx);
        }
    }
    Ok(exp)
}

impl ExpandedNetwork {
    fn push(&mut self, e: ExpandedEdge) -> usize {
        let idx = self.edges.len();
        self.out[e.from].push(idx);
        self.edges.push(e);
        idx
    }

    pub fn num_nodes(&self) -> usize {
        self.num_phys * self.num_layers
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn num_phys_nodes(&self) -> usize {
        self.num_phys
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn chain(&self) -> &[VnfId] {
        &self.chain
    }

    pub fn edges(&self) -> &[ExpandedEdge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &ExpandedEdge {
        &self.edges[idx]
    }

    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    /// Expanded id of physical node `v` in layer `layer`.
    pub fn node_id(&self, layer: usize, v: NodeId) -> usize {
        layer * self.num_phys + v.0
    }

    pub fn layer_of(&self, node: usize) -> usize {
        node / self.num_phys
    }

    pub fn phys_of(&self, node: usize) -> NodeId {
        NodeId(node % self.num_phys)
    }

    pub fn is_allowed(&self, v: NodeId) -> bool {
        self.allowed[v.0]
    }

    pub fn num_process_edges(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| matches!(e.kind, EdgeKind::Process { .. }))
            .count()
    }

    /// Expanded nodes visited by the edge sequence `path`, starting at the
    /// source.
    pub fn path_nodes(&self, path: &[usize]) -> Vec<usize> {
        let mut nodes = Vec::with_capacity(path.len() + 1);
        nodes.push(path.first().map_or(self.source, |&e| self.edges[e].from));
        nodes.extend(path.iter().map(|&e| self.edges[e].to));
        nodes
    }

    /// Translates a source-to-sink edge sequence into placement, per-hop
    /// routes, cost and latency. Cost and latency are summed along the
    /// path.
    pub fn map_back(&self, path: &[usize]) -> MappedPath {
        let mut placement = Vec::with_capacity(self.chain.len());
        let mut segments = vec![Vec::new()];
        let mut cost = 0.0;
        let mut latency = 0.0;
        let mut placement_cost = 0.0;
        for &idx in path {
            let e = &self.edges[idx];
            cost += e.cost;
            latency += e.latency;
            match e.kind {
                EdgeKind::Link(l) => segments.last_mut().expect("nonempty").push(l),
                EdgeKind::Process { .. } => {
                    placement.push(self.phys_of(e.from));
                    placement_cost += e.cost;
                    segments.push(Vec::new());
                }
            }
        }
        debug_assert_eq!(placement.len(), self.chain.len());
        MappedPath {
            placement,
            segments,
            cost,
            latency,
            placement_cost,
        }
    }

    /// Inverse of [`Self::map_back`]: the edge sequence realizing the given
    /// placement and routes, if every element exists in this network.
    pub fn encode(&self, placement: &[NodeId], segments: &[Vec<LinkId>]) -> Option<Vec<usize>> {
        if placement.len() != self.chain.len() || segments.len() != self.num_layers {
            return None;
        }
        let mut path = Vec::new();
        for (k, seg) in segments.iter().enumerate() {
            for &l in seg {
                path.push((*self.link_edge[k].get(l.0)?)?);
            }
            if k < placement.len() {
                path.push((*self.process_edge[k].get(placement[k].0)?)?);
            }
        }
        let nodes = self.path_nodes(&path);
        let contiguous = path
            .iter()
            .zip(&nodes)
            .all(|(&e, &at)| self.edges[e].from == at);
        (contiguous && nodes.last() == Some(&self.sink)).then_some(path)
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph expanded_service_{} {{", self.service_id);
        let _ = writeln!(s, "  rankdir=LR;");
        for k in 0..self.num_layers {
            let _ = writeln!(s, "  subgraph cluster_layer{k} {{");
            let _ = writeln!(s, "    label=\"layer {k}\";");
            for v in 0..self.num_phys {
                if !self.allowed[v] {
                    continue;
                }
                let id = k * self.num_phys + v;
                let shape = if id == self.source || id == self.sink {
                    "doublecircle"
                } else {
                    "circle"
                };
                let _ = writeln!(s, "    n{id} [label=\"{v}@{k}\", shape={shape}];");
            }
            let _ = writeln!(s, "  }}");
        }
        for e in &self.edges {
            let (label, style) = match e.kind {
                EdgeKind::Link(l) => (format!("e{l}"), "solid"),
                EdgeKind::Process { vnf, .. } => (format!("f{vnf}"), "dashed"),
            };
            let _ = writeln!(
                s,
                "  n{} -> n{} [label=\"{label} c={} d={}\", style={style}];",
                e.from, e.to, e.cost, e.latency
            );
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{line_scenario, simple_slice, two_operator_line};
    use crate::model::allowed_operators;

    fn build(
        scenario: &Scenario,
        slice: &SliceRequest,
        residual: Option<&ResidualState>,
    ) -> Result<ExpandedNetwork, ExpandError> {
        let allowed = allowed_operators(slice, &scenario.trust).unwrap();
        let prices = PriceSnapshot::base(&scenario.network);
        build_expanded(
            scenario,
            slice,
            &slice.services[0],
            &allowed,
            &prices,
            residual,
        )
    }

    #[test]
    fn empty_chain_is_the_physical_network() {
        let s = line_scenario(3, 10.0);
        let slice = simple_slice(&s, 1, &[(0, 2, 1.0, 10.0, vec![])]);
        let exp = build(&s, &slice, None).unwrap();
        assert_eq!(exp.num_nodes(), 3);
        assert_eq!(exp.num_process_edges(), 0);
        assert_eq!(exp.edges().len(), s.network.links.len());
        assert_eq!(exp.sink(), 2);
    }

    #[test]
    fn counts_on_three_nodes_two_vnfs() {
        let s = line_scenario(3, 10.0);
        let mut slice = simple_slice(&s, 1, &[(0, 2, 1.0, 10.0, vec![0, 1])]);
        slice.vnf_catalog[1].candidate_nodes = vec![NodeId(1), NodeId(2)];
        let exp = build(&s, &slice, None).unwrap();
        assert_eq!(exp.num_nodes(), 9);
        // 3 hosts for VNF 0 plus 2 for VNF 1; 4 link copies per layer.
        assert_eq!(exp.num_process_edges(), 5);
        assert_eq!(exp.edges().len(), 5 + 3 * 4);
        for e in exp.edges() {
            if let EdgeKind::Process { .. } = e.kind {
                assert_eq!(exp.phys_of(e.from), exp.phys_of(e.to));
                assert_eq!(exp.layer_of(e.from) + 1, exp.layer_of(e.to));
            }
        }
    }

    #[test]
    fn untrusted_hosts_have_no_edges() {
        let s = two_operator_line();
        let mut slice = simple_slice(&s, 1, &[(0, 2, 1.0, 10.0, vec![0])]);
        slice.trust_spec.deny = vec![OperatorId(2)];
        let exp = build(&s, &slice, None).unwrap();
        assert!(!exp.is_allowed(NodeId(1)));
        // Every link touches node 1; only the processing edges at 0 and 2 remain.
        let hosts: Vec<NodeId> = exp.edges().iter().map(|e| exp.phys_of(e.from)).collect();
        assert_eq!(hosts, vec![NodeId(0), NodeId(2)]);
        assert_eq!(exp.num_process_edges(), 2);
    }

    #[test]
    fn denied_endpoint_is_unreachable() {
        let s = two_operator_line();
        let mut slice = simple_slice(&s, 1, &[(0, 1, 1.0, 10.0, vec![])]);
        slice.trust_spec.deny = vec![OperatorId(2)];
        assert_eq!(
            build(&s, &slice, None).unwrap_err(),
            ExpandError::UnreachableEndpoints { service: 0 }
        );
    }

    #[test]
    fn co_located_chain_maps_to_empty_route() {
        let s = line_scenario(2, 10.0);
        let slice = simple_slice(&s, 1, &[(0, 1, 1.0, 10.0, vec![0, 1])]);
        let exp = build(&s, &slice, None).unwrap();
        // Process both VNFs at node 1 after one hop.
        let hop = exp.link_edge[0][0].unwrap();
        let p0 = exp.process_edge[0][1].unwrap();
        let p1 = exp.process_edge[1][1].unwrap();
        let mapped = exp.map_back(&[hop, p0, p1]);
        assert_eq!(mapped.placement, vec![NodeId(1), NodeId(1)]);
        assert_eq!(mapped.segments, vec![vec![LinkId(0)], vec![], vec![]]);
        assert_eq!(mapped.latency, 1.0 + 2.0 + 1.0);
        assert_eq!(mapped.cost, 1.0 + 1.0 + 2.0);
        assert_eq!(mapped.placement_cost, 3.0);
        assert_eq!(
            exp.encode(&mapped.placement, &mapped.segments),
            Some(vec![hop, p0, p1])
        );
    }

    #[test]
    fn encode_rejects_broken_walks() {
        let s = line_scenario(3, 10.0);
        let slice = simple_slice(&s, 1, &[(0, 2, 1.0, 10.0, vec![0])]);
        let exp = build(&s, &slice, None).unwrap();
        assert!(exp
            .encode(&[NodeId(1)], &[vec![LinkId(0)], vec![LinkId(2)]])
            .is_some());
        assert!(exp
            .encode(&[NodeId(2)], &[vec![LinkId(0)], vec![LinkId(2)]])
            .is_none());
        assert!(exp.encode(&[NodeId(1)], &[vec![LinkId(0)]]).is_none());
    }

    #[test]
    fn residual_pruning_drops_full_elements() {
        let s = line_scenario(3, 10.0);
        let slice = simple_slice(&s, 1, &[(0, 2, 4.0, 10.0, vec![1])]);
        let mut st = ResidualState::new(&s.network);
        let mut fp = crate::model::Footprint::default();
        fp.links.insert(LinkId(0), 7.0);
        fp.nodes
            .insert((NodeId(1), crate::model::ResourceId(0)), 9.0);
        st.reserve(&s.network, 9, fp).unwrap();
        let exp = build(&s, &slice, Some(&st)).unwrap();
        assert!(exp.link_edge.iter().all(|layer| layer[0].is_none()));
        assert!(exp.process_edge[0][1].is_none());
        assert!(exp.process_edge[0][0].is_some());
    }

    #[test]
    fn dot_output_lists_edges() {
        let s = line_scenario(2, 10.0);
        let slice = simple_slice(&s, 1, &[(0, 1, 1.0, 10.0, vec![0])]);
        let dot = build(&s, &slice, None).unwrap().to_dot();
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("->").count(), 2 * 2 + 2);
    }
}
