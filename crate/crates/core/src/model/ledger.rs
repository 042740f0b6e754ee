use std::collections::BTreeMap;

use super::{
    Embedding, LinkId, ModelError, NodeId, PhysicalNetwork, ResourceId, Scenario, SliceRequest,
    VnfSharing,
};

/// Relative slack allowed when comparing accumulated usage with capacity.
pub(crate) const CAPACITY_TOL: f64 = 1e-9;

/// Resources held by one slice.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Footprint {
    pub links: BTreeMap<LinkId, f64>,
    pub nodes: BTreeMap<(NodeId, ResourceId), f64>,
}

impl Footprint {
    /// Bandwidth on every traversed link (once per traversal) plus the
    /// node resources of every placed VNF, charged per the scenario's
    /// sharing rule.
    pub fn of_embedding(scenario: &Scenario, slice: &SliceRequest, emb: &Embedding) -> Self {
        let mut fp = Footprint::default();
        let mut shared_seen = std::collections::BTreeSet::new();
        for se in &emb.services {
            let Some(service) = slice.services.iter().find(|s| s.id == se.service_id) else {
                continue;
            };
            for &l in se.segments.iter().flatten() {
                *fp.links.entry(l).or_insert(0.0) += service.bandwidth;
            }
            for (&f, &v) in service.vnf_sequence.iter().zip(&se.placement) {
                if scenario.sharing == VnfSharing::PerSlice && !shared_seen.insert((f, v)) {
                    continue;
                }
                for (r, &amount) in scenario.vnf(f).demand.iter().enumerate() {
                    if amount > 0.0 {
                        *fp.nodes.entry((v, ResourceId(r))).or_insert(0.0) += amount;
                    }
                }
            }
        }
        fp
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty() && self.nodes.is_empty()
    }
}

/// Usage ledger over links and function-node resources.
///
/// Used amounts are always the sum of the active footprints taken in
/// slice-id order, so they depend only on the set of active slices:
/// reserving and then releasing a slice restores the previous state
/// bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualState {
    link_used: Vec<f64>,
    node_used: Vec<Vec<f64>>,
    active: BTreeMap<u64, Footprint>,
}

impl ResidualState {
    pub fn new(net: &PhysicalNetwork) -> Self {
        Self {
            link_used: vec![0.0; net.links.len()],
            node_used: vec![vec![0.0; net.num_resources()]; net.nodes.len()],
            active: BTreeMap::new(),
        }
    }

    pub fn link_used(&self, link: LinkId) -> f64 {
        self.link_used[link.0]
    }

    pub fn node_used(&self, node: NodeId, resource: ResourceId) -> f64 {
        self.node_used[node.0][resource.0]
    }

    pub fn link_residual(&self, net: &PhysicalNetwork, link: LinkId) -> f64 {
        net.link(link).capacity - self.link_used[link.0]
    }

    pub fn node_residual(&self, net: &PhysicalNetwork, node: NodeId, resource: ResourceId) -> f64 {
        net.node(node).capacity[resource.0] - self.node_used[node.0][resource.0]
    }

    /// Whether `amount` more bandwidth fits on `link`.
    pub fn link_fits(&self, net: &PhysicalNetwork, link: LinkId, amount: f64) -> bool {
        let cap = net.link(link).capacity;
        amount <= self.link_residual(net, link) + CAPACITY_TOL * (1.0 + cap)
    }

    /// Whether `demand` (one entry per resource) fits on `node`.
    pub fn node_fits(&self, net: &PhysicalNetwork, node: NodeId, demand: &[f64]) -> bool {
        let n = net.node(node);
        demand.iter().enumerate().all(|(r, &d)| {
            d <= 0.0
                || d <= self.node_residual(net, node, ResourceId(r))
                    + CAPACITY_TOL * (1.0 + n.capacity[r])
        })
    }

    pub fn active(&self) -> &BTreeMap<u64, Footprint> {
        &self.active
    }

    pub fn is_active(&self, slice: u64) -> bool {
        self.active.contains_key(&slice)
    }

    pub fn reserve_embedding(
        &mut self,
        scenario: &Scenario,
        slice: &SliceRequest,
        emb: &Embedding,
    ) -> Result<(), ModelError> {
        let fp = Footprint::of_embedding(scenario, slice, emb);
        self.reserve(&scenario.network, slice.id, fp)
    }

    /// Records `footprint` for `slice`. Fails without modifying the state
    /// if any capacity would be exceeded.
    pub fn reserve(
        &mut self,
        net: &PhysicalNetwork,
        slice: u64,
        footprint: Footprint,
    ) -> Result<(), ModelError> {
        if self.active.contains_key(&slice) {
            return Err(ModelError::DuplicateSlice(slice));
        }
        for (&l, &amt) in &footprint.links {
            let cap = net.link(l).capacity;
            if self.link_used[l.0] + amt > cap * (1.0 + CAPACITY_TOL) + CAPACITY_TOL {
                return Err(ModelError::CapacityOverflow {
                    slice,
                    element: format!("link {l}"),
                });
            }
        }
        for (&(v, r), &amt) in &footprint.nodes {
            let cap = net.node(v).capacity[r.0];
            if self.node_used[v.0][r.0] + amt > cap * (1.0 + CAPACITY_TOL) + CAPACITY_TOL {
                return Err(ModelError::CapacityOverflow {
                    slice,
                    element: format!("node {v} resource {r}"),
                });
            }
        }
        let touched = (
            footprint.links.keys().copied().collect::<Vec<_>>(),
            footprint.nodes.keys().copied().collect::<Vec<_>>(),
        );
        self.active.insert(slice, footprint);
        self.recompute(&touched.0, &touched.1);
        Ok(())
    }

    pub fn release(&mut self, slice: u64) -> Result<Footprint, ModelError> {
        let fp = self
            .active
            .remove(&slice)
            .ok_or(ModelError::UnknownSlice(slice))?;
        let links: Vec<LinkId> = fp.links.keys().copied().collect();
        let nodes: Vec<(NodeId, ResourceId)> = fp.nodes.keys().copied().collect();
        self.recompute(&links, &nodes);
        Ok(fp)
    }

    fn recompute(&mut self, links: &[LinkId], nodes: &[(NodeId, ResourceId)]) {
        for &l in links {
            let mut sum = 0.0;
            for fp in self.active.values() {
                if let Some(a) = fp.links.get(&l) {
                    sum += a;
                }
            }
            self.link_used[l.0] = sum;
        }
        for &key in nodes {
            let mut sum = 0.0;
            for fp in self.active.values() {
                if let Some(a) = fp.nodes.get(&key) {
                    sum += a;
                }
            }
            self.node_used[key.0 .0][key.1 .0] = sum;
        }
    }

    /// Largest absolute difference between the ledger and the sum of
    /// `footprints`, computed independently of the internal bookkeeping.
    pub fn discrepancy<'a>(&self, footprints: impl IntoIterator<Item = &'a Footprint>) -> f64 {
        let mut links = vec![0.0; self.link_used.len()];
        let mut nodes: Vec<Vec<f64>> = self.node_used.iter().map(|r| vec![0.0; r.len()]).collect();
        for fp in footprints {
            for (&l, &a) in &fp.links {
                links[l.0] += a;
            }
            for (&(v, r), &a) in &fp.nodes {
                nodes[v.0][r.0] += a;
            }
        }
        let mut worst: f64 = 0.0;
        for (a, b) in links.iter().zip(&self.link_used) {
            worst = worst.max((a - b).abs());
        }
        for (ra, rb) in nodes.iter().zip(&self.node_used) {
            for (a, b) in ra.iter().zip(rb) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    /// Maximum utilization over all links.
    pub fn max_link_utilization(&self, net: &PhysicalNetwork) -> f64 {
        net.links
            .iter()
            .map(|l| self.link_used[l.id.0] / l.capacity)
            .fold(0.0, f64::max)
    }

    pub fn mean_link_utilization(&self, net: &PhysicalNetwork) -> f64 {
        if net.links.is_empty() {
            return 0.0;
        }
        net.links
            .iter()
            .map(|l| self.link_used[l.id.0] / l.capacity)
            .sum::<f64>()
            / net.links.len() as f64
    }

    /// Mean utilization over (function node, resource) pairs with positive
    /// capacity.
    pub fn mean_node_utilization(&self, net: &PhysicalNetwork) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for n in net.function_nodes() {
            for (r, &cap) in n.capacity.iter().enumerate() {
                if cap > 0.0 {
                    sum += self.node_used[n.id.0][r] / cap;
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// True when nothing is reserved and every counter is exactly zero.
    pub fn is_pristine(&self) -> bool {
        self.active.is_empty()
            && self.link_used.iter().all(|&u| u == 0.0)
            && self.node_used.iter().flatten().all(|&u| u == 0.0)
    }
}
