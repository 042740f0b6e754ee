//! Domain types of the multi-operator substrate and of slice requests.
//!
//! Everything here is immutable after [`Scenario::load`] except the
//! [`ResidualState`] ledger. [`check_embedding`] re-verifies embeddings
//! from first principles and is the oracle the formulations are tested
//! against.

mod check;
mod ledger;
mod scenario;
mod trust;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use check::{check_embedding, Violation};
pub use ledger::{Footprint, ResidualState};
pub use scenario::{
    LinkEntry, NodeEntry, PricingBlock, Scenario, ScenarioFile, SliceType, TrustEntry,
    WorkloadSpec, SCENARIO_UNITS,
};
pub use trust::{allowed_operators, TrustRelation};

macro_rules! index_newtype {
    ($(#[$meta:meta])* $name:ident($inner:ty)) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

index_newtype!(
    /// Dense index of a physical node.
    NodeId(usize)
);
index_newtype!(
    /// Dense index of a directed physical link.
    LinkId(usize)
);
index_newtype!(
    /// Operator identifier, numbered from 1.
    OperatorId(u32)
);
index_newtype!(VnfId(usize));
index_newtype!(ResourceId(usize));

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("slice {slice} is untrustable: its origin operator {origin} is denied")]
    Untrustable { slice: u64, origin: OperatorId },
    #[error("slice {0} is not active")]
    UnknownSlice(u64),
    #[error("slice {0} is already active")]
    DuplicateSlice(u64),
    #[error("reserving slice {slice} overflows {element}")]
    CapacityOverflow { slice: u64, element: String },
}

pub(crate) fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::Validation(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resource {
    pub id: ResourceId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    pub id: OperatorId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysNode {
    pub id: NodeId,
    pub operator_id: OperatorId,
    pub is_function_node: bool,
    /// Per-resource capacity; all zero for non-function nodes.
    pub capacity: Vec<f64>,
    /// Cost per unit of each resource.
    pub unit_price: Vec<f64>,
}

/// A directed link. Undirected links in scenario files become two of these.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysLink {
    pub id: LinkId,
    /// Identifier of the link entry in the scenario file.
    pub file_id: usize,
    pub source: NodeId,
    pub target: NodeId,
    pub capacity: f64,
    pub prop_delay: f64,
    pub unit_price: f64,
}

#[derive(Debug, Clone)]
pub struct PhysicalNetwork {
    pub resources: Vec<Resource>,
    pub operators: Vec<Operator>,
    pub nodes: Vec<PhysNode>,
    pub links: Vec<PhysLink>,
    out_links: Vec<Vec<LinkId>>,
}

impl PhysicalNetwork {
    /// Builds the adjacency index; inputs are assumed validated.
    pub fn new(
        resources: Vec<Resource>,
        operators: Vec<Operator>,
        nodes: Vec<PhysNode>,
        links: Vec<PhysLink>,
    ) -> Self {
        let mut out_links = vec![Vec::new(); nodes.len()];
        for l in &links {
            out_links[l.source.0].push(l.id);
        }
        Self {
            resources,
            operators,
            nodes,
            links,
            out_links,
        }
    }

    pub fn node(&self, id: NodeId) -> &PhysNode {
        &self.nodes[id.0]
    }

    pub fn link(&self, id: LinkId) -> &PhysLink {
        &self.links[id.0]
    }

    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out_links[node.0]
    }

    pub fn num_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn operator_index(&self, id: OperatorId) -> Option<usize> {
        self.operators.iter().position(|o| o.id == id)
    }

    pub fn function_nodes(&self) -> impl Iterator<Item = &PhysNode> {
        self.nodes.iter().filter(|n| n.is_function_node)
    }

    pub fn nodes_of(&self, operator: OperatorId) -> impl Iterator<Item = &PhysNode> {
        self.nodes.iter().filter(move |n| n.operator_id == operator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vnf {
    pub id: VnfId,
    #[serde(default)]
    pub name: String,
    /// Per-packet processing delay.
    pub proc_delay: f64,
    /// Required amount of each resource.
    pub demand: Vec<f64>,
    /// Function nodes able to host this VNF; empty means all of them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deployable_on: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceChain {
    pub id: usize,
    pub source: NodeId,
    pub sink: NodeId,
    pub vnf_sequence: Vec<VnfId>,
    pub bandwidth: f64,
    pub max_latency: f64,
}

/// Per-slice information about one VNF of the slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnfRequirement {
    pub vnf: VnfId,
    /// Sum of the bandwidths of the services whose chain contains the VNF.
    pub aggregate_bandwidth: f64,
    pub candidate_nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustSpec {
    pub origin: OperatorId,
    #[serde(default)]
    pub allow: Vec<OperatorId>,
    #[serde(default)]
    pub deny: Vec<OperatorId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRequest {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_type: Option<String>,
    pub services: Vec<ServiceChain>,
    pub vnf_catalog: Vec<VnfRequirement>,
    pub trust_spec: TrustSpec,
    #[serde(default)]
    pub arrival_time: f64,
    #[serde(default = "default_holding")]
    pub holding_time: f64,
}

fn default_holding() -> f64 {
    1.0
}

impl SliceRequest {
    pub fn requirement(&self, vnf: VnfId) -> Option<&VnfRequirement> {
        self.vnf_catalog.iter().find(|r| r.vnf == vnf)
    }

    pub fn candidate_nodes(&self, vnf: VnfId) -> &[NodeId] {
        self.requirement(vnf)
            .map(|r| r.candidate_nodes.as_slice())
            .unwrap_or(&[])
    }

    /// Builds the VNF catalog (aggregate bandwidth and candidate nodes) from
    /// the services and the scenario's deployment rules.
    pub fn derive_catalog(scenario: &Scenario, services: &[ServiceChain]) -> Vec<VnfRequirement> {
        let mut agg: BTreeMap<VnfId, f64> = BTreeMap::new();
        for s in services {
            for &f in &s.vnf_sequence {
                *agg.entry(f).or_insert(0.0) += s.bandwidth;
            }
        }
        agg.into_iter()
            .map(|(vnf, aggregate_bandwidth)| VnfRequirement {
                vnf,
                aggregate_bandwidth,
                candidate_nodes: scenario.deployable_nodes(vnf),
            })
            .collect()
    }
}

/// Placement and routing of one service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceEmbedding {
    pub service_id: usize,
    /// Host of each VNF, aligned with the chain.
    pub placement: Vec<NodeId>,
    /// One link sequence per logical hop: source to first VNF, between
    /// consecutive VNFs, last VNF to sink.
    pub segments: Vec<Vec<LinkId>>,
    pub cost: f64,
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub slice_id: u64,
    pub services: Vec<ServiceEmbedding>,
    pub total_cost: f64,
}

/// How node resources are charged when several services of one slice run
/// the same VNF on the same node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VnfSharing {
    /// Each service occurrence consumes the full demand.
    #[default]
    PerService,
    /// One instance per (VNF, node) pair per slice, and every service of the
    /// slice uses the same host for a given VNF.
    PerSlice,
}

impl Scenario {
    pub fn vnf(&self, id: VnfId) -> &Vnf {
        &self.vnfs[id.0]
    }

    /// Function nodes where `vnf` may run.
    pub fn deployable_nodes(&self, vnf: VnfId) -> Vec<NodeId> {
        let v = self.vnf(vnf);
        if v.deployable_on.is_empty() {
            self.network.function_nodes().map(|n| n.id).collect()
        } else {
            v.deployable_on.clone()
        }
    }

    /// Checks the invariants of a slice request against this scenario.
    pub fn validate_slice(&self, slice: &SliceRequest) -> Result<(), ModelError> {
        let net = &self.network;
        let node_ok = |n: NodeId| n.0 < net.nodes.len();
        if slice.services.is_empty() {
            return Err(invalid(format!("slice {} has no services", slice.id)));
        }
        if !(slice.holding_time > 0.0 && slice.holding_time.is_finite()) {
            return Err(invalid(format!("slice {}: holding_time > 0", slice.id)));
        }
        if !slice.arrival_time.is_finite() {
            return Err(invalid(format!("slice {}: arrival_time finite", slice.id)));
        }
        let mut ids = BTreeSet::new();
        for s in &slice.services {
            if !ids.insert(s.id) {
                return Err(invalid(format!(
                    "slice {}: duplicate service id {}",
                    slice.id, s.id
                )));
            }
            if !node_ok(s.source) || !node_ok(s.sink) {
                return Err(invalid(format!("service {}: unknown endpoint", s.id)));
            }
            if s.source == s.sink {
                return Err(invalid(format!("service {}: source != sink", s.id)));
            }
            if !(s.bandwidth > 0.0 && s.bandwidth.is_finite()) {
                return Err(invalid(format!("service {}: bandwidth > 0", s.id)));
            }
            if !(s.max_latency > 0.0 && s.max_latency.is_finite()) {
                return Err(invalid(format!("service {}: max_latency > 0", s.id)));
            }
            let mut seen = BTreeSet::new();
            for &f in &s.vnf_sequence {
                if f.0 >= self.vnfs.len() {
                    return Err(invalid(format!("service {}: unknown VNF {f}", s.id)));
                }
                if !seen.insert(f) {
                    return Err(invalid(format!(
                        "service {}: VNF {f} appears twice in the chain",
                        s.id
                    )));
                }
                if slice.requirement(f).is_none() {
                    return Err(invalid(format!(
                        "slice {}: VNF {f} missing from vnf_catalog",
                        slice.id
                    )));
                }
            }
        }
        let mut catalog_ids = BTreeSet::new();
        for req in &slice.vnf_catalog {
            if req.vnf.0 >= self.vnfs.len() {
                return Err(invalid(format!("vnf_catalog: unknown VNF {}", req.vnf)));
            }
            if !catalog_ids.insert(req.vnf) {
                return Err(invalid(format!("vnf_catalog: duplicate VNF {}", req.vnf)));
            }
            if req.candidate_nodes.is_empty() {
                return Err(invalid(format!(
                    "VNF {}: candidate_nodes nonempty",
                    req.vnf
                )));
            }
            for &v in &req.candidate_nodes {
                if !node_ok(v) || !net.node(v).is_function_node {
                    return Err(invalid(format!(
                        "VNF {}: candidate node {v} is not a function node",
                        req.vnf
                    )));
                }
            }
            let expected: f64 = slice
                .services
                .iter()
                .filter(|s| s.vnf_sequence.contains(&req.vnf))
                .map(|s| s.bandwidth)
                .sum();
            if (req.aggregate_bandwidth - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                return Err(invalid(format!(
                    "VNF {}: aggregate_bandwidth {} must equal the summed service bandwidth {}",
                    req.vnf, req.aggregate_bandwidth, expected
                )));
            }
        }
        let t = &slice.trust_spec;
        for op in std::iter::once(&t.origin).chain(&t.allow).chain(&t.deny) {
            if net.operator_index(*op).is_none() {
                return Err(invalid(format!("trust_spec: unknown operator {op}")));
            }
        }
        if t.allow.iter().any(|a| t.deny.contains(a)) {
            return Err(invalid("trust_spec: allow and deny lists must be disjoint"));
        }
        Ok(())
    }
}
