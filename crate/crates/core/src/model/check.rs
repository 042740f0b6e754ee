use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ledger::CAPACITY_TOL;
use super::{
    allowed_operators, Embedding, LinkId, NodeId, OperatorId, ResidualState, ResourceId, Scenario,
    SliceRequest, VnfSharing,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Untrustable,
    /// Services missing, duplicated, unknown, or with malformed vectors.
    Shape {
        service: Option<usize>,
        detail: String,
    },
    Contiguity {
        service: usize,
        hop: usize,
    },
    Placement {
        service: usize,
        position: usize,
        node: NodeId,
    },
    LinkCapacity {
        link: LinkId,
        required: f64,
        available: f64,
    },
    NodeCapacity {
        node: NodeId,
        resource: ResourceId,
        required: f64,
        available: f64,
    },
    Latency {
        service: usize,
        latency: f64,
        max: f64,
    },
    Trust {
        service: usize,
        node: NodeId,
        operator: OperatorId,
    },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Untrustable => "untrustable",
            Violation::Shape { .. } => "shape",
            Violation::Contiguity { .. } => "contiguity",
            Violation::Placement { .. } => "placement",
            Violation::LinkCapacity { .. } => "link_capacity",
            Violation::NodeCapacity { .. } => "node_capacity",
            Violation::Latency { .. } => "latency",
            Violation::Trust { .. } => "trust",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Untrustable => write!(f, "untrustable: origin operator denied"),
            Violation::Shape { service, detail } => match service {
                Some(s) => write!(f, "shape: service {s}: {detail}"),
                None => write!(f, "shape: {detail}"),
            },
            Violation::Contiguity { service, hop } => {
                write!(f, "contiguity: service {service} hop {hop} is not a walk between its endpoints")
            }
            Violation::Placement { service, position, node } => write!(
                f,
                "placement: service {service} VNF #{position} on node {node} outside its candidate set"
            ),
            Violation::LinkCapacity { link, required, available } => write!(
                f,
                "link_capacity: link {link} needs {required} with {available} available"
            ),
            Violation::NodeCapacity { node, resource, required, available } => write!(
                f,
                "node_capacity: node {node} resource {resource} needs {required} with {available} available"
            ),
            Violation::Latency { service, latency, max } => {
                write!(f, "latency: service {service} has latency {latency} > {max}")
            }
            Violation::Trust { service, node, operator } => write!(
                f,
                "trust: service {service} uses node {node} of operator {operator}"
            ),
        }
    }
}

fn exceeds(required: f64, available: f64, capacity: f64) -> bool {
    required > available + CAPACITY_TOL * (1.0 + capacity)
}

/// Verifies `emb` for `slice` against the residual `state`, collecting every
/// violated condition: walk contiguity and candidate placement, joint link
/// and node capacity, per-service latency, and trust.
pub fn check_embedding(
    scenario: &Scenario,
    state: &ResidualState,
    slice: &SliceRequest,
    emb: &Embedding,
) -> Result<(), Vec<Violation>> {
    let net = &scenario.network;
    let mut out = Vec::new();
    let allowed: BTreeSet<OperatorId> = match allowed_operators(slice, &scenario.trust) {
        Ok(a) => a,
        Err(_) => {
            out.push(Violation::Untrustable);
            BTreeSet::new()
        }
    };
    if emb.slice_id != slice.id {
        out.push(Violation::Shape {
            service: None,
            detail: format!("embedding is for slice {} not {}", emb.slice_id, slice.id),
        });
    }

    let mut seen = BTreeSet::new();
    for se in &emb.services {
        if !seen.insert(se.service_id) {
            out.push(Violation::Shape {
                service: Some(se.service_id),
                detail: "embedded twice".into(),
            });
        }
    }
    for s in &slice.services {
        if !seen.contains(&s.id) {
            out.push(Violation::Shape {
                service: Some(s.id),
                detail: "not embedded".into(),
            });
        }
    }

    let mut link_load: BTreeMap<LinkId, f64> = BTreeMap::new();
    let mut node_load: BTreeMap<(NodeId, ResourceId), f64> = BTreeMap::new();
    let mut instances: BTreeSet<(usize, NodeId)> = BTreeSet::new();

    for se in &emb.services {
        let Some(service) = slice.services.iter().find(|s| s.id == se.service_id) else {
            out.push(Violation::Shape {
                service: Some(se.service_id),
                detail: "unknown service".into(),
            });
            continue;
        };
        let g = service.id;
        let m = service.vnf_sequence.len();
        if se.placement.len() != m || se.segments.len() != m + 1 {
            out.push(Violation::Shape {
                service: Some(g),
                detail: format!(
                    "expected {m} placements and {} segments, got {} and {}",
                    m + 1,
                    se.placement.len(),
                    se.segments.len()
                ),
            });
            continue;
        }
        if let Some(&bad) = se.placement.iter().find(|v| v.0 >= net.nodes.len()) {
            out.push(Violation::Shape {
                service: Some(g),
                detail: format!("unknown node {bad}"),
            });
            continue;
        }
        if se.segments.iter().flatten().any(|l| l.0 >= net.links.len()) {
            out.push(Violation::Shape {
                service: Some(g),
                detail: "unknown link".into(),
            });
            continue;
        }

        // Walk contiguity, hop by hop.
        let mut waypoints = Vec::with_capacity(m + 2);
        waypoints.push(service.source);
        waypoints.extend(se.placement.iter().copied());
        waypoints.push(service.sink);
        for (hop, seg) in se.segments.iter().enumerate() {
            let mut at = waypoints[hop];
            let mut ok = true;
            for &l in seg {
                let link = net.link(l);
                if link.source != at {
                    ok = false;
                    break;
                }
                at = link.target;
            }
            if !ok || at != waypoints[hop + 1] {
                out.push(Violation::Contiguity { service: g, hop });
            }
        }

        // Placement inside the candidate set.
        for (k, (&f, &v)) in service.vnf_sequence.iter().zip(&se.placement).enumerate() {
            let candidates = slice
                .vnf_catalog
                .iter()
                .find(|r| r.vnf == f)
                .map(|r| r.candidate_nodes.as_slice())
                .unwrap_or(&[]);
            if !net.node(v).is_function_node || !candidates.contains(&v) {
                out.push(Violation::Placement {
                    service: g,
                    position: k,
                    node: v,
                });
            }
        }

        // Latency: propagation over every traversed link plus processing.
        let latency: f64 = se
            .segments
            .iter()
            .flatten()
            .map(|&l| net.link(l).prop_delay)
            .sum::<f64>()
            + service
                .vnf_sequence
                .iter()
                .map(|&f| scenario.vnfs[f.0].proc_delay)
                .sum::<f64>();
        if latency > service.max_latency * (1.0 + 1e-12) {
            out.push(Violation::Latency {
                service: g,
                latency,
                max: service.max_latency,
            });
        }

        // Trust: endpoints, hosts and every link endpoint.
        let mut touched: BTreeSet<NodeId> = waypoints.iter().copied().collect();
        for &l in se.segments.iter().flatten() {
            let link = net.link(l);
            touched.insert(link.source);
            touched.insert(link.target);
        }
        for v in touched {
            let op = net.node(v).operator_id;
            if !allowed.contains(&op) {
                out.push(Violation::Trust {
                    service: g,
                    node: v,
                    operator: op,
                });
            }
        }

        for &l in se.segments.iter().flatten() {
            *link_load.entry(l).or_insert(0.0) += service.bandwidth;
        }
        for (&f, &v) in service.vnf_sequence.iter().zip(&se.placement) {
            if scenario.sharing == VnfSharing::PerSlice && !instances.insert((f.0, v)) {
                continue;
            }
            for (r, &amount) in scenario.vnfs[f.0].demand.iter().enumerate() {
                *node_load.entry((v, ResourceId(r))).or_insert(0.0) += amount;
            }
        }
    }

    for (&l, &required) in &link_load {
        let cap = net.link(l).capacity;
        let available = cap - state.link_used(l);
        if exceeds(required, available, cap) {
            out.push(Violation::LinkCapacity {
                link: l,
                required,
                available,
            });
        }
    }
    for (&(v, r), &required) in &node_load {
        if required == 0.0 {
            continue;
        }
        let cap = net.node(v).capacity[r.0];
        let available = cap - state.node_used(v, r);
        if exceeds(required, available, cap) {
            out.push(Violation::NodeCapacity {
                node: v,
                resource: r,
                required,
                available,
            });
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
