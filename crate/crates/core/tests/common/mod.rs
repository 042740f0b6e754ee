//! Instance generators and brute-force oracles shared by the integration
//! tests and the acceptance suite. Nothing here calls the embedding code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slicebed::model::{
    Embedding, LinkEntry, NodeEntry, NodeId, Operator, OperatorId, Resource, ResourceId, Scenario,
    ScenarioFile, ServiceChain, SliceRequest, TrustEntry, TrustSpec, Vnf, VnfId,
};
use slicebed_milp::{IlpModel, Relation, VarId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A tiny scenario with integer data: 2 to 4 nodes, 1 or 2 operators,
/// one resource, 1 or 2 VNFs, random undirected links and random trust.
/// Capacities are small so that they bind.
pub fn tiny_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let n = rng.random_range(2..=4usize);
    let ops = rng.random_range(1..=2u32);
    let operators: Vec<Operator> = (1..=ops)
        .map(|i| Operator {
            id: OperatorId(i),
            name: format!("op{i}"),
        })
        .collect();
    let nodes: Vec<NodeEntry> = (0..n)
        .map(|i| {
            let function = i == 0 || rng.random_bool(0.7);
            NodeEntry {
                id: NodeId(i),
                operator_id: OperatorId(if i == 0 { 1 } else { rng.random_range(1..=ops) }),
                is_function_node: function,
                capacity: if function {
                    vec![rng.random_range(1..=6) as f64]
                } else {
                    vec![]
                },
                unit_price: if function {
                    vec![rng.random_range(1..=4) as f64]
                } else {
                    vec![]
                },
            }
        })
        .collect();
    let mut links = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.65) {
                links.push(LinkEntry {
                    id: links.len(),
                    endpoints: [NodeId(a), NodeId(b)],
                    capacity: rng.random_range(1..=8) as f64,
                    prop_delay: rng.random_range(1..=4) as f64,
                    unit_price: rng.random_range(1..=5) as f64,
                    directed: false,
                });
            }
        }
    }
    let trust = if ops == 2 {
        vec![
            TrustEntry {
                operator: OperatorId(1),
                trusts: if rng.random_bool(0.7) {
                    vec![OperatorId(2)]
                } else {
                    vec![]
                },
            },
            TrustEntry {
                operator: OperatorId(2),
                trusts: vec![OperatorId(1)],
            },
        ]
    } else {
        vec![]
    };
    let vnfs: Vec<Vnf> = (0..rng.random_range(1..=2usize))
        .map(|f| Vnf {
            id: VnfId(f),
            name: format!("f{f}"),
            proc_delay: rng.random_range(0..=2) as f64,
            demand: vec![rng.random_range(1..=3) as f64],
            deployable_on: Vec::new(),
        })
        .collect();
    let file = ScenarioFile {
        units: String::new(),
        resources: vec![Resource {
            id: ResourceId(0),
            name: "cpu".into(),
        }],
        operators,
        nodes,
        links,
        trust,
        vnfs,
        slice_types: Vec::new(),
        workload: Default::default(),
        pricing: Default::default(),
        shared_vnf_per_slice: false,
        slices: Vec::new(),
    };
    Scenario::from_file(file).expect("tiny scenario is valid")
}

/// A request with 1 or 2 services, chains of distinct VNFs of length 0 to
/// 2, and random trust lists.
pub fn tiny_slice(scenario: &Scenario, rng: &mut ChaCha8Rng, id: u64) -> SliceRequest {
    let n = scenario.network.nodes.len();
    let vnf_ids: Vec<VnfId> = scenario.vnfs.iter().map(|v| v.id).collect();
    let services: Vec<ServiceChain> = (0..rng.random_range(1..=2usize))
        .map(|g| {
            let len = rng.random_range(0..=vnf_ids.len().min(2));
            ServiceChain {
                id: g,
                source: NodeId(rng.random_range(0..n)),
                sink: NodeId(rng.random_range(0..n)),
                vnf_sequence: vnf_ids.choose_multiple(rng, len).copied().collect(),
                bandwidth: rng.random_range(1..=4) as f64,
                max_latency: rng.random_range(2..=14) as f64,
            }
        })
        .collect();
    let origin = OperatorId(1);
    let ops = scenario.network.operators.len() as u32;
    let mut allow = Vec::new();
    let mut deny = Vec::new();
    if ops == 2 {
        match rng.random_range(0..4) {
            0 => allow.push(OperatorId(2)),
            1 => deny.push(OperatorId(2)),
            _ => {}
        }
    }
    SliceRequest {
        id,
        slice_type: None,
        vnf_catalog: SliceRequest::derive_catalog(scenario, &services),
        services,
        trust_spec: TrustSpec {
            origin,
            allow,
            deny,
        },
        arrival_time: 0.0,
        holding_time: 1.0,
    }
}

/// Operators a request may use, from the raw trust entries of the file.
pub fn permitted_operators(scenario: &Scenario, slice: &SliceRequest) -> BTreeSet<OperatorId> {
    let spec = &slice.trust_spec;
    let file = scenario.to_file();
    let mut ops: BTreeSet<OperatorId> = BTreeSet::from([spec.origin]);
    for entry in file.trust.iter().filter(|e| e.operator == spec.origin) {
        ops.extend(entry.trusts.iter().copied());
    }
    ops.extend(spec.allow.iter().copied());
    for d in &spec.deny {
        ops.remove(d);
    }
    ops
}

/// Simple directed paths from `a` to `b` through permitted nodes, as
/// link-id sequences. `a == b` gives the single empty path.
pub fn simple_paths(scenario: &Scenario, ok: &[bool], a: usize, b: usize) -> Vec<Vec<usize>> {
    fn dfs(
        scenario: &Scenario,
        ok: &[bool],
        at: usize,
        target: usize,
        seen: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == target {
            out.push(path.clone());
            return;
        }
        for (id, link) in scenario.network.links.iter().enumerate() {
            let (from, to) = (link.source.0, link.target.0);
            if from != at || !ok[to] || seen[to] {
                continue;
            }
            seen[to] = true;
            path.push(id);
            dfs(scenario, ok, to, target, seen, path, out);
            path.pop();
            seen[to] = false;
        }
    }
    let mut out = Vec::new();
    if !ok[a] || !ok[b] {
        return out;
    }
    let mut seen = vec![false; scenario.network.nodes.len()];
    seen[a] = true;
    dfs(scenario, ok, a, b, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// One way to embed one service: hosts, routes, cost, latency and load.
#[derive(Debug, Clone)]
pub struct ServiceOption {
    pub placement: Vec<usize>,
    pub segments: Vec<Vec<usize>>,
    pub cost: f64,
    pub latency: f64,
    pub link_load: Vec<f64>,
    pub node_load: Vec<Vec<f64>>,
}

/// Every (placement, simple route per hop) combination of one service,
/// ignoring capacities and latency.
pub fn service_options(scenario: &Scenario, slice: &SliceRequest, g: usize) -> Vec<ServiceOption> {
    let net = &scenario.network;
    let permitted = permitted_operators(scenario, slice);
    let ok: Vec<bool> = net
        .nodes
        .iter()
        .map(|n| permitted.contains(&n.operator_id))
        .collect();
    let service = &slice.services[g];
    let hosts: Vec<Vec<usize>> = service
        .vnf_sequence
        .iter()
        .map(|&f| {
            let catalog = &slice.requirement(f).expect("catalog entry").candidate_nodes;
            net.nodes
                .iter()
                .filter(|n| n.is_function_node && ok[n.id.0] && catalog.contains(&n.id))
                .map(|n| n.id.0)
                .collect()
        })
        .collect();
    let mut placements: Vec<Vec<usize>> = vec![Vec::new()];
    for h in &hosts {
        placements = placements
            .into_iter()
            .flat_map(|p| {
                h.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for placement in placements {
        let mut stops = vec![service.source.0];
        stops.extend(&placement);
        stops.push(service.sink.0);
        let hop_paths: Vec<Vec<Vec<usize>>> = stops
            .windows(2)
            .map(|w| simple_paths(scenario, &ok, w[0], w[1]))
            .collect();
        let mut routes: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
        for choices in &hop_paths {
            routes = routes
                .into_iter()
                .flat_map(|r| {
                    choices.iter().map(move |c| {
                        let mut s = r.clone();
                        s.push(c.clone());
                        s
                    })
                })
                .collect();
        }
        for segments in routes {
            let b = service.bandwidth;
            let mut link_load = vec![0.0; net.links.len()];
            let mut cost = 0.0;
            let mut latency = 0.0;
            for &l in segments.iter().flatten() {
                link_load[l] += b;
                cost += b * net.links[l].unit_price;
                latency += net.links[l].prop_delay;
            }
            let mut node_load = vec![vec![0.0; net.num_resources()]; net.nodes.len()];
            for (&f, &v) in service.vnf_sequence.iter().zip(&placement) {
                let vnf = &scenario.vnfs[f.0];
                latency += vnf.proc_delay;
                for (r, d) in vnf.demand.iter().enumerate() {
                    node_load[v][r] += d;
                    cost += d * net.nodes[v].unit_price[r];
                }
            }
            out.push(ServiceOption {
                placement: placement.clone(),
                segments,
                cost,
                latency,
                link_load,
                node_load,
            });
        }
    }
    out
}

/// Cheapest joint embedding on an empty network, by exhaustive search.
pub fn brute_force(scenario: &Scenario, slice: &SliceRequest) -> Option<f64> {
    let net = &scenario.network;
    let options: Vec<Vec<ServiceOption>> = (0..slice.services.len())
        .map(|g| {
            service_options(scenario, slice, g)
                .into_iter()
                .filter(|o| o.latency <= slice.services[g].max_latency)
                .collect()
        })
        .collect();
    let mut best: Option<f64> = None;
    let mut link = vec![0.0; net.links.len()];
    let mut node = vec![vec![0.0; net.num_resources()]; net.nodes.len()];
    fn go(
        scenario: &Scenario,
        options: &[Vec<ServiceOption>],
        g: usize,
        cost: f64,
        link: &mut Vec<f64>,
        node: &mut Vec<Vec<f64>>,
        best: &mut Option<f64>,
    ) {
        let net = &scenario.network;
        if best.is_some_and(|b| cost >= b) {
            return;
        }
        if g == options.len() {
            *best = Some(cost);
            return;
        }
        for o in &options[g] {
            let fits_links = o
                .link_load
                .iter()
                .enumerate()
                .all(|(l, x)| link[l] + x <= net.links[l].capacity);
            let fits_nodes = o.node_load.iter().enumerate().all(|(v, row)| {
                row.iter()
                    .enumerate()
                    .all(|(r, x)| *x == 0.0 || node[v][r] + x <= net.nodes[v].capacity[r])
            });
            if !fits_links || !fits_nodes {
                continue;
            }
            for (l, x) in o.link_load.iter().enumerate() {
                link[l] += x;
            }
            for (v, row) in o.node_load.iter().enumerate() {
                for (r, x) in row.iter().enumerate() {
                    node[v][r] += x;
                }
            }
            go(scenario, options, g + 1, cost + o.cost, link, node, best);
            for (l, x) in o.link_load.iter().enumerate() {
                link[l] -= x;
            }
            for (v, row) in o.node_load.iter().enumerate() {
                for (r, x) in row.iter().enumerate() {
                    node[v][r] -= x;
                }
            }
        }
    }
    go(scenario, &options, 0, 0.0, &mut link, &mut node, &mut best);
    best
}

/// Number of simple expanded paths of the service with the most of them.
pub fn max_expanded_paths(scenario: &Scenario, slice: &SliceRequest) -> usize {
    (0..slice.services.len())
        .map(|g| service_options(scenario, slice, g).len())
        .max()
        .unwrap_or(0)
}

/// Cost of `emb` recomputed from the raw network data.
pub fn embedding_cost(scenario: &Scenario, slice: &SliceRequest, emb: &Embedding) -> f64 {
    let net = &scenario.network;
    let mut cost = 0.0;
    for se in &emb.services {
        let service = slice
            .services
            .iter()
            .find(|s| s.id == se.service_id)
            .unwrap();
        for l in se.segments.iter().flatten() {
            cost += service.bandwidth * net.links[l.0].unit_price;
        }
        for (&f, v) in service.vnf_sequence.iter().zip(&se.placement) {
            for (r, d) in scenario.vnfs[f.0].demand.iter().enumerate() {
                cost += d * net.nodes[v.0].unit_price[r];
            }
        }
    }
    cost
}

/// Random pure-binary model with small integer data.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize, m: usize) -> IlpModel {
    let mut model = IlpModel::new();
    let vars: Vec<VarId> = (0..n)
        .map(|j| model.add_binary(format!("x{j}"), rng.random_range(-9..=9) as f64))
        .collect();
    for i in 0..m {
        let terms: Vec<(VarId, f64)> = vars
            .iter()
            .filter_map(|&v| {
                if rng.random_bool(0.5) {
                    Some((v, rng.random_range(-4..=6) as f64))
                } else {
                    None
                }
            })
            .collect();
        let relation = match rng.random_range(0..8) {
            0 => Relation::Eq,
            1..=5 => Relation::Le,
            _ => Relation::Ge,
        };
        model.add_constraint(
            format!("c{i}"),
            terms,
            relation,
            rng.random_range(-3..=9) as f64,
        );
    }
    model
}
