//! Random multi-operator scenarios.
//!
//! Each operator owns a connected random graph. A few of its nodes are
//! border nodes, and every pair of border nodes of different operators is
//! joined with probability `inter_link_probability`. Capacities are then
//! scaled so that the expected offered load, routed at static prices,
//! occupies a fraction `rho` of the total link and node capacity.

use std::collections::VecDeque;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::workload::{default_slice_types, pick_type, quantize, sample_slice, stream};
use crate::expand::build_expanded;
use crate::model::{
    allowed_operators, LinkEntry, ModelError, NodeEntry, NodeId, Operator, OperatorId, Resource,
    ResourceId, Scenario, ScenarioFile, SliceType, TrustEntry, Vnf, VnfId, WorkloadSpec,
    SCENARIO_UNITS,
};
use crate::paths::{shortest_path, Weight};
use crate::pricing::{PriceSnapshot, PricingPolicy};

/// Default utilization targets of the four congestion regimes.
pub const CONGESTION_REGIMES: [f64; 4] = [0.3, 0.6, 0.8, 0.95];

const TOPOLOGY_STREAM: u64 = 10;
const REFERENCE_STREAM: u64 = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioGen {
    pub operators: usize,
    pub nodes_per_operator: usize,
    /// Probability of a link between two nodes of the same operator.
    pub intra_link_probability: f64,
    pub border_nodes_per_operator: usize,
    /// Probability of a link between two border nodes of different operators.
    pub inter_link_probability: f64,
    pub function_node_fraction: f64,
    /// Probability that an operator trusts another one.
    pub trust_density: f64,
    pub vnfs: usize,
    /// Target utilization of the reference load.
    pub rho: f64,
    /// Requests sampled to estimate the reference load.
    pub reference_samples: usize,
    /// Attempts at drawing a connected operator graph.
    pub max_retries: usize,
    pub slice_types: Vec<SliceType>,
    pub workload: WorkloadSpec,
    pub pricing: PricingPolicy,
}

impl Default for ScenarioGen {
    fn default() -> Self {
        Self {
            operators: 3,
            nodes_per_operator: 10,
            intra_link_probability: 0.3,
            border_nodes_per_operator: 3,
            inter_link_probability: 0.3,
            function_node_fraction: 0.6,
            trust_density: 0.7,
            vnfs: 6,
            rho: 0.8,
            reference_samples: 200,
            max_retries: 1000,
            slice_types: default_slice_types(),
            workload: WorkloadSpec::default(),
            pricing: PricingPolicy::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    Invalid(String),
    #[error("operator {operator}: no connected graph after {retries} attempts")]
    Disconnected { operator: u32, retries: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ScenarioGen {
    pub fn validate(&self) -> Result<(), GenError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        let fail = |m: &str| Err(GenError::Invalid(m.to_string()));
        if self.operators == 0 {
            return fail("operators >= 1");
        }
        if self.nodes_per_operator < 2 {
            return fail("nodes_per_operator >= 2");
        }
        if self.border_nodes_per_operator == 0
            || self.border_nodes_per_operator > self.nodes_per_operator
        {
            return fail("1 <= border_nodes_per_operator <= nodes_per_operator");
        }
        if !prob(self.intra_link_probability)
            || !prob(self.inter_link_probability)
            || !prob(self.function_node_fraction)
            || !prob(self.trust_density)
        {
            return fail("probabilities must lie in [0, 1]");
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return fail("rho > 0");
        }
        if self.vnfs == 0 {
            return fail("vnfs >= 1");
        }
        Ok(())
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.iter().all(|&s| s)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    quantize(rng.random_range(lo..=hi))
}

/// Draws a scenario. The same parameters and seed always give the same
/// file.
pub fn generate_scenario(gen: &ScenarioGen, seed: u64) -> Result<ScenarioFile, GenError> {
    gen.validate()?;
    let mut rng = stream(seed, TOPOLOGY_STREAM);
    let n = gen.nodes_per_operator;
    let resources = vec![
        Resource {
            id: ResourceId(0),
            name: "cpu".into(),
        },
        Resource {
            id: ResourceId(1),
            name: "mem".into(),
        },
    ];
    let operators: Vec<Operator> = (1..=gen.operators as u32)
        .map(|i| Operator {
            id: OperatorId(i),
            name: format!("op{i}"),
        })
        .collect();

    let mut nodes = Vec::new();
    let mut links = Vec::new();
    let mut borders: Vec<Vec<usize>> = Vec::new();
    for op in &operators {
        let offset = nodes.len();
        let edges = (0..gen.max_retries.max(1))
            .find_map(|_| {
                let mut edges = Vec::new();
                for a in 0..n {
                    for b in a + 1..n {
                        if rng.random_bool(gen.intra_link_probability) {
                            edges.push((a, b));
                        }
                    }
                }
                connected(n, &edges).then_some(edges)
            })
            .ok_or(GenError::Disconnected {
                operator: op.id.0,
                retries: gen.max_retries,
            })?;
        let factor = rng.random_range(0.8..=1.2);
        let mut function: Vec<bool> = (0..n)
            .map(|_| rng.random_bool(gen.function_node_fraction))
            .collect();
        if !function.iter().any(|&f| f) {
            function[rng.random_range(0..n)] = true;
        }
        for (i, &is_function) in function.iter().enumerate() {
            let (capacity, unit_price) = if is_function {
                (
                    vec![
                        rng.random_range(20..=40) as f64,
                        rng.random_range(20..=40) as f64,
                    ],
                    vec![
                        uniform(&mut rng, 1.0, 3.0) * factor,
                        uniform(&mut rng, 0.5, 1.5) * factor,
                    ],
                )
            } else {
                (vec![0.0, 0.0], vec![0.0, 0.0])
            };
            nodes.push(NodeEntry {
                id: NodeId(offset + i),
                operator_id: op.id,
                is_function_node: is_function,
                capacity,
                unit_price: unit_price.into_iter().map(quantize).collect(),
            });
        }
        for (a, b) in edges {
            links.push(LinkEntry {
                id: links.len(),
                endpoints: [NodeId(offset + a), NodeId(offset + b)],
                capacity: rng.random_range(40..=100) as f64,
                prop_delay: uniform(&mut rng, 1.0, 3.0),
                unit_price: quantize(uniform(&mut rng, 1.0, 2.0) * factor),
                directed: false,
            });
        }
        let mut local: Vec<usize> = (0..n).map(|i| offset + i).collect();
        local.shuffle(&mut rng);
        local.truncate(gen.border_nodes_per_operator);
        local.sort();
        borders.push(local);
    }

    for i in 0..operators.len() {
        for j in i + 1..operators.len() {
            for &a in &borders[i] {
                for &b in &borders[j] {
                    if rng.random_bool(gen.inter_link_probability) {
                        links.push(LinkEntry {
                            id: links.len(),
                            endpoints: [NodeId(a), NodeId(b)],
                            capacity: rng.random_range(20..=60) as f64,
                            prop_delay: uniform(&mut rng, 3.0, 6.0),
                            unit_price: uniform(&mut rng, 3.0, 5.0),
                            directed: false,
                        });
                    }
                }
            }
        }
    }

    let mut trust = Vec::new();
    for a in &operators {
        let trusts: Vec<OperatorId> = operators
            .iter()
            .filter(|b| b.id != a.id)
            .filter(|_| rng.random_bool(gen.trust_density))
            .map(|b| b.id)
            .collect();
        if !trusts.is_empty() {
            trust.push(TrustEntry {
                operator: a.id,
                trusts,
            });
        }
    }

    let function_nodes: Vec<NodeId> = nodes
        .iter()
        .filter(|n| n.is_function_node)
        .map(|n| n.id)
        .collect();
    let vnfs: Vec<Vnf> = (0..gen.vnfs)
        .map(|i| {
            let mut hosts: Vec<NodeId> = function_nodes
                .iter()
                .copied()
                .filter(|_| rng.random_bool(0.7))
                .collect();
            if hosts.is_empty() {
                hosts.push(
                    *function_nodes
                        .choose(&mut rng)
                        .expect("every operator has one"),
                );
            }
            Vnf {
                id: VnfId(i),
                name: format!("vnf{i}"),
                proc_delay: uniform(&mut rng, 0.5, 2.0),
                demand: vec![
                    rng.random_range(1..=4) as f64,
                    rng.random_range(1..=4) as f64,
                ],
                deployable_on: hosts,
            }
        })
        .collect();

    let mut file = ScenarioFile {
        units: SCENARIO_UNITS.to_string(),
        resources,
        operators,
        nodes,
        links,
        trust,
        vnfs,
        slice_types: gen.slice_types.clone(),
        workload: gen.workload.clone(),
        pricing: gen.pricing,
        shared_vnf_per_slice: false,
        slices: Vec::new(),
    };
    scale_capacities(&mut file, gen, seed)?;
    Ok(file)
}

/// Rescales link and node capacities so that the reference load takes a
/// fraction `rho` of each total. No element drops below the largest single
/// demand it may have to carry.
fn scale_capacities(file: &mut ScenarioFile, gen: &ScenarioGen, seed: u64) -> Result<(), GenError> {
    let scenario = Scenario::from_file(file.clone())?;
    let net = &scenario.network;
    let types = if scenario.slice_types.is_empty() {
        default_slice_types()
    } else {
        scenario.slice_types.clone()
    };
    let prices = PriceSnapshot::base(net);
    let mut rng = stream(seed, REFERENCE_STREAM);
    let mut link_use = 0.0;
    let mut node_use = vec![0.0; net.num_resources()];
    let samples = gen.reference_samples.max(1);
    for id in 0..samples {
        let kind = pick_type(&types, &mut rng);
        let slice = sample_slice(&scenario, kind, id as u64, &mut rng);
        let allowed = allowed_operators(&slice, &scenario.trust)?;
        for service in &slice.services {
            let Ok(exp) = build_expanded(&scenario, &slice, service, &allowed, &prices, None)
            else {
                continue;
            };
            let Some(path) = shortest_path(&exp, Weight::Cost) else {
                continue;
            };
            let mapped = exp.map_back(&path.edges);
            link_use +=
                service.bandwidth * mapped.segments.iter().map(Vec::len).sum::<usize>() as f64;
            for &f in &service.vnf_sequence {
                for (r, d) in scenario.vnf(f).demand.iter().enumerate() {
                    node_use[r] += d;
                }
            }
        }
    }
    let load = gen.workload.arrival_rate * gen.workload.mean_holding_time / samples as f64;

    let link_floor = types
        .iter()
        .map(|t| t.bandwidth[1])
        .fold(0.0, f64::max)
        .ceil();
    let link_total: f64 = net.links.iter().map(|l| l.capacity).sum();
    let link_factor = load * link_use / (gen.rho * link_total);
    for l in &mut file.links {
        l.capacity = (l.capacity * link_factor).ceil().max(link_floor).max(1.0);
    }
    for (r, &used) in node_use.iter().enumerate() {
        let total: f64 = net.function_nodes().map(|n| n.capacity[r]).sum();
        let floor = scenario
            .vnfs
            .iter()
            .map(|v| v.demand[r])
            .fold(0.0, f64::max);
        let factor = load * used / (gen.rho * total);
        for n in file.nodes.iter_mut().filter(|n| n.is_function_node) {
            n.capacity[r] = (n.capacity[r] * factor).ceil().max(floor).max(1.0);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(pi: f64) -> ScenarioGen {
        ScenarioGen {
            operators: 2,
            nodes_per_operator: 3,
            intra_link_probability: 0.7,
            border_nodes_per_operator: 1,
            inter_link_probability: pi,
            reference_samples: 20,
            ..ScenarioGen::default()
        }
    }

    fn inter_links(file: &ScenarioFile) -> usize {
        let op = |v: NodeId| file.nodes[v.0].operator_id;
        file.links
            .iter()
            .filter(|l| op(l.endpoints[0]) != op(l.endpoints[1]))
            .count()
    }

    #[test]
    fn isolated_operators_without_inter_links() {
        let file = generate_scenario(&small(0.0), 3).unwrap();
        assert_eq!(inter_links(&file), 0);
    }

    #[test]
    fn single_border_pair_gives_one_link() {
        let file = generate_scenario(&small(1.0), 3).unwrap();
        assert_eq!(inter_links(&file), 1);
        assert!(Scenario::from_file(file).is_ok());
    }

    #[test]
    fn same_seed_same_bytes() {
        let g = ScenarioGen::default();
        let a = serde_json::to_string(&generate_scenario(&g, 9).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_scenario(&g, 9).unwrap()).unwrap();
        let c = serde_json::to_string(&generate_scenario(&g, 10).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn operator_graphs_are_connected() {
        let g = ScenarioGen::default();
        let file = generate_scenario(&g, 4).unwrap();
        for op in 1..=3u32 {
            let ids: Vec<usize> = file
                .nodes
                .iter()
                .filter(|n| n.operator_id.0 == op)
                .map(|n| n.id.0)
                .collect();
            let local = |v: NodeId| ids.iter().position(|&i| i == v.0);
            let edges: Vec<(usize, usize)> = file
                .links
                .iter()
                .filter_map(|l| Some((local(l.endpoints[0])?, local(l.endpoints[1])?)))
                .collect();
            assert!(connected(ids.len(), &edges));
        }
    }

    #[test]
    fn higher_rho_means_less_capacity() {
        let total = |rho: f64| {
            let g = ScenarioGen {
                rho,
                ..ScenarioGen::default()
            };
            let f = generate_scenario(&g, 5).unwrap();
            f.links.iter().map(|l| l.capacity).sum::<f64>()
        };
        assert!(total(0.95) < total(0.3));
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let g = ScenarioGen {
            inter_link_probability: 1.5,
            ..ScenarioGen::default()
        };
        assert!(matches!(
            generate_scenario(&g, 1),
            Err(GenError::Invalid(_))
        ));
        let g = ScenarioGen {
            intra_link_probability: 0.0,
            max_retries: 5,
            ..ScenarioGen::default()
        };
        assert!(matches!(
            generate_scenario(&g, 1),
            Err(GenError::Disconnected { .. })
        ));
    }
}
