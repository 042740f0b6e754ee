use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    invalid, LinkId, ModelError, NodeId, Operator, OperatorId, PhysLink, PhysNode, PhysicalNetwork,
    Resource, SliceRequest, TrustRelation, Vnf, VnfSharing,
};
use crate::pricing::PricingPolicy;

/// Default content of the `_units` field of generated scenario files.
pub const SCENARIO_UNITS: &str = "bandwidth and link capacity in Mb/s; delays and latency bounds in ms; \
times (arrival rate, holding time, horizon) in abstract time units; prices in cost units per unit of capacity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: NodeId,
    pub operator_id: OperatorId,
    #[serde(default)]
    pub is_function_node: bool,
    #[serde(default)]
    pub capacity: Vec<f64>,
    #[serde(default)]
    pub unit_price: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEntry {
    pub id: usize,
    pub endpoints: [NodeId; 2],
    pub capacity: f64,
    pub prop_delay: f64,
    pub unit_price: f64,
    /// Undirected links are expanded into one link per direction.
    #[serde(default)]
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustEntry {
    pub operator: OperatorId,
    pub trusts: Vec<OperatorId>,
}

/// Template the simulator draws slice requests from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceType {
    pub name: String,
    pub weight: f64,
    /// Inclusive range of the number of services per slice.
    pub services: [usize; 2],
    /// Inclusive range of the chain length of each service.
    pub chain_length: [usize; 2],
    pub bandwidth: [f64; 2],
    pub max_latency: [f64; 2],
    /// Operators (other than the origin) put on the deny-list.
    #[serde(default)]
    pub deny_count: usize,
    /// Operators not trusted by the origin that are explicitly allowed.
    #[serde(default)]
    pub allow_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    /// Slice arrivals per time unit.
    pub arrival_rate: f64,
    pub mean_holding_time: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Use the mean holding time for every slice instead of sampling.
    #[serde(default)]
    pub deterministic_holding: bool,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            arrival_rate: 2.0,
            mean_holding_time: 20.0,
            horizon: 500.0,
            seed: 1,
            deterministic_holding: false,
        }
    }
}

pub type PricingBlock = PricingPolicy;

/// On-disk layout of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(rename = "_units", default)]
    pub units: String,
    pub resources: Vec<Resource>,
    pub operators: Vec<Operator>,
    pub nodes: Vec<NodeEntry>,
    pub links: Vec<LinkEntry>,
    #[serde(default)]
    pub trust: Vec<TrustEntry>,
    pub vnfs: Vec<Vnf>,
    #[serde(default)]
    pub slice_types: Vec<SliceType>,
    #[serde(default)]
    pub workload: WorkloadSpec,
    #[serde(default)]
    pub pricing: PricingPolicy,
    #[serde(default)]
    pub shared_vnf_per_slice: bool,
    /// Optional concrete requests, used by `solve` and the examples.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slices: Vec<SliceRequest>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub network: PhysicalNetwork,
    pub trust: TrustRelation,
    pub vnfs: Vec<Vnf>,
    pub slice_types: Vec<SliceType>,
    pub workload: WorkloadSpec,
    pub pricing: PricingPolicy,
    pub sharing: VnfSharing,
    pub slices: Vec<SliceRequest>,
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    /// Validates every invariant of the file contents, reporting the first
    /// violation.
    pub fn from_file(file: ScenarioFile) -> Result<Self, ModelError> {
        let r = file.resources.len();
        let mut names = BTreeSet::new();
        for (i, res) in file.resources.iter().enumerate() {
            if res.id.0 != i {
                return Err(invalid(format!("resource ids must be dense 0..{r}")));
            }
            if !names.insert(res.name.as_str()) {
                return Err(invalid(format!("duplicate resource name {:?}", res.name)));
            }
        }

        let n_ops = file.operators.len();
        if n_ops == 0 {
            return Err(invalid("at least one operator is required"));
        }
        let op_ids: BTreeSet<u32> = file.operators.iter().map(|o| o.id.0).collect();
        if op_ids.len() != n_ops || op_ids != (1..=n_ops as u32).collect() {
            return Err(invalid(format!(
                "operator ids must be unique and dense 1..={n_ops}"
            )));
        }
        let mut operators = file.operators.clone();
        operators.sort_by_key(|o| o.id);

        let mut nodes = Vec::with_capacity(file.nodes.len());
        for (i, entry) in file.nodes.iter().enumerate() {
            if entry.id.0 != i {
                return Err(invalid(format!(
                    "node ids must be dense 0..{}",
                    file.nodes.len()
                )));
            }
            if !op_ids.contains(&entry.operator_id.0) {
                return Err(invalid(format!(
                    "node {i}: unknown operator {}",
                    entry.operator_id
                )));
            }
            let fill = |v: &Vec<f64>, what: &str| -> Result<Vec<f64>, ModelError> {
                let v = if v.is_empty() {
                    vec![0.0; r]
                } else {
                    v.clone()
                };
                if v.len() != r {
                    return Err(invalid(format!("node {i}: {what} must have length {r}")));
                }
                if !v.iter().all(|&x| finite_nonneg(x)) {
                    return Err(invalid(format!("node {i}: {what} entries must be >= 0")));
                }
                Ok(v)
            };
            let capacity = fill(&entry.capacity, "capacity")?;
            let unit_price = fill(&entry.unit_price, "unit_price")?;
            if !entry.is_function_node && capacity.iter().any(|&c| c > 0.0) {
                return Err(invalid(format!(
                    "node {i}: only function nodes carry capacity"
                )));
            }
            nodes.push(PhysNode {
                id: entry.id,
                operator_id: entry.operator_id,
                is_function_node: entry.is_function_node,
                capacity,
                unit_price,
            });
        }

        let mut links = Vec::with_capacity(file.links.len() * 2);
        let mut link_ids = BTreeSet::new();
        for entry in &file.links {
            let id = entry.id;
            if !link_ids.insert(id) {
                return Err(invalid(format!("duplicate link id {id}")));
            }
            let [a, b] = entry.endpoints;
            if a.0 >= nodes.len() || b.0 >= nodes.len() {
                return Err(invalid(format!("link {id}: unknown endpoint")));
            }
            if a == b {
                return Err(invalid(format!("link {id}: no self-loops")));
            }
            if !(entry.capacity > 0.0 && entry.capacity.is_finite()) {
                return Err(invalid(format!("link {id}: capacity > 0")));
            }
            if !finite_nonneg(entry.prop_delay) {
                return Err(invalid(format!("link {id}: prop_delay >= 0")));
            }
            if !finite_nonneg(entry.unit_price) {
                return Err(invalid(format!("link {id}: unit_price >= 0")));
            }
            let directions: &[(NodeId, NodeId)] = if entry.directed {
                &[(a, b)]
            } else {
                &[(a, b), (b, a)]
            };
            for &(source, target) in directions {
                links.push(PhysLink {
                    id: LinkId(links.len()),
                    file_id: id,
                    source,
                    target,
                    capacity: entry.capacity,
                    prop_delay: entry.prop_delay,
                    unit_price: entry.unit_price,
                });
            }
        }

        let network = PhysicalNetwork::new(file.resources.clone(), operators, nodes, links);

        let mut trust = TrustRelation::identity(n_ops);
        for entry in &file.trust {
            let Some(i) = network.operator_index(entry.operator) else {
                return Err(invalid(format!(
                    "trust: unknown operator {}",
                    entry.operator
                )));
            };
            for &other in &entry.trusts {
                let Some(j) = network.operator_index(other) else {
                    return Err(invalid(format!("trust: unknown operator {other}")));
                };
                trust.set(i, j, true);
            }
        }

        for (i, vnf) in file.vnfs.iter().enumerate() {
            if vnf.id.0 != i {
                return Err(invalid(format!(
                    "VNF ids must be dense 0..{}",
                    file.vnfs.len()
                )));
            }
            if !finite_nonneg(vnf.proc_delay) {
                return Err(invalid(format!("VNF {i}: proc_delay >= 0")));
            }
            if vnf.demand.len() != r || !vnf.demand.iter().all(|&x| finite_nonneg(x)) {
                return Err(invalid(format!(
                    "VNF {i}: demand must have {r} entries, all >= 0"
                )));
            }
            for &v in &vnf.deployable_on {
                if v.0 >= network.nodes.len() || !network.node(v).is_function_node {
                    return Err(invalid(format!(
                        "VNF {i}: deployable node {v} is not a function node"
                    )));
                }
            }
            if vnf.deployable_on.is_empty() && network.function_nodes().next().is_none() {
                return Err(invalid(format!("VNF {i}: no function node can host it")));
            }
        }

        validate_slice_types(&file.slice_types)?;

        let w = &file.workload;
        if !finite_nonneg(w.arrival_rate) {
            return Err(invalid("workload: arrival_rate >= 0"));
        }
        if !(w.mean_holding_time > 0.0 && w.mean_holding_time.is_finite()) {
            return Err(invalid("workload: mean_holding_time > 0"));
        }
        if !(w.horizon > 0.0 && w.horizon.is_finite()) {
            return Err(invalid("workload: horizon > 0"));
        }
        file.pricing.validate().map_err(invalid)?;

        let scenario = Scenario {
            network,
            trust,
            vnfs: file.vnfs,
            slice_types: file.slice_types,
            workload: file.workload,
            pricing: file.pricing,
            sharing: if file.shared_vnf_per_slice {
                VnfSharing::PerSlice
            } else {
                VnfSharing::PerService
            },
            slices: Vec::new(),
        };
        for slice in &file.slices {
            scenario.validate_slice(slice)?;
        }
        let mut ids = BTreeSet::new();
        if !file.slices.iter().all(|s| ids.insert(s.id)) {
            return Err(invalid("slice ids must be unique"));
        }
        Ok(Scenario {
            slices: file.slices,
            ..scenario
        })
    }
}

impl Scenario {
    /// File form of this scenario, with every link written as a directed
    /// entry whose id is its internal index.
    pub fn to_file(&self) -> ScenarioFile {
        let net = &self.network;
        ScenarioFile {
            units: SCENARIO_UNITS.to_string(),
            resources: net.resources.clone(),
            operators: net.operators.clone(),
            nodes: net
                .nodes
                .iter()
                .map(|n| NodeEntry {
                    id: n.id,
                    operator_id: n.operator_id,
                    is_function_node: n.is_function_node,
                    capacity: n.capacity.clone(),
                    unit_price: n.unit_price.clone(),
                })
                .collect(),
            links: net
                .links
                .iter()
                .map(|l| LinkEntry {
                    id: l.id.0,
                    endpoints: [l.source, l.target],
                    capacity: l.capacity,
                    prop_delay: l.prop_delay,
                    unit_price: l.unit_price,
                    directed: true,
                })
                .collect(),
            trust: self
                .trust
                .to_adjacency()
                .into_iter()
                .filter(|(_, t)| !t.is_empty())
                .map(|(operator, trusts)| TrustEntry { operator, trusts })
                .collect(),
            vnfs: self.vnfs.clone(),
            slice_types: self.slice_types.clone(),
            workload: self.workload.clone(),
            pricing: self.pricing,
            shared_vnf_per_slice: self.sharing == VnfSharing::PerSlice,
            slices: self.slices.clone(),
        }
    }
}

pub(crate) fn validate_slice_types(types: &[SliceType]) -> Result<(), ModelError> {
    if types.is_empty() {
        return Ok(());
    }
    let mut total = 0.0;
    for t in types {
        let name = &t.name;
        if !finite_nonneg(t.weight) {
            return Err(invalid(format!("slice type {name}: weight >= 0")));
        }
        total += t.weight;
        if t.services[0] == 0 || t.services[0] > t.services[1] {
            return Err(invalid(format!(
                "slice type {name}: services range must be 1 <= min <= max"
            )));
        }
        if t.chain_length[0] > t.chain_length[1] {
            return Err(invalid(format!(
                "slice type {name}: chain_length min <= max"
            )));
        }
        if !(t.bandwidth[0] > 0.0 && t.bandwidth[0] <= t.bandwidth[1] && t.bandwidth[1].is_finite())
        {
            return Err(invalid(format!(
                "slice type {name}: bandwidth range must be positive"
            )));
        }
        if !(t.max_latency[0] > 0.0
            && t.max_latency[0] <= t.max_latency[1]
            && t.max_latency[1].is_finite())
        {
            return Err(invalid(format!(
                "slice type {name}: max_latency range must be positive"
            )));
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!(
            "slice type weights must sum to 1 (got {total})"
        )));
    }
    Ok(())
}
