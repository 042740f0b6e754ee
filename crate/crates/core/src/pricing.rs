//! Static and congestion-dependent resource prices.
//!
//! In Kleinrock mode the unit price of a link or of a node resource is the
//! static price times `min(cap, 1 / (1 - u))`, where `u` is the current
//! utilization of that element. Prices are snapshotted once per request.

use serde::{Deserialize, Serialize};

use crate::model::{LinkId, NodeId, PhysicalNetwork, ResidualState, ResourceId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingMode {
    #[default]
    Static,
    Kleinrock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingPolicy {
    pub mode: PricingMode,
    /// Largest price multiplier.
    #[serde(default = "default_cap")]
    pub cap: f64,
    /// Apply congestion pricing to links.
    #[serde(default = "yes")]
    pub links: bool,
    /// Apply congestion pricing to node resources.
    #[serde(default = "yes")]
    pub nodes: bool,
}

fn default_cap() -> f64 {
    100.0
}

fn yes() -> bool {
    true
}

impl Default for PricingPolicy {
    fn default() -> Self {
        Self {
            mode: PricingMode::Static,
            cap: default_cap(),
            links: true,
            nodes: true,
        }
    }
}

impl PricingPolicy {
    pub fn kleinrock(cap: f64) -> Self {
        Self {
            mode: PricingMode::Kleinrock,
            cap,
            ..Self::default()
        }
    }

    pub fn with_mode(self, mode: PricingMode) -> Self {
        Self { mode, ..self }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.cap > 1.0 && self.cap.is_finite()) {
            return Err(format!(
                "pricing: cap must be finite and > 1 (got {})",
                self.cap
            ));
        }
        Ok(())
    }

    /// Price multiplier for an element with `used` out of `capacity`.
    pub fn multiplier(&self, used: f64, capacity: f64) -> f64 {
        if self.mode == PricingMode::Static {
            return 1.0;
        }
        let u = if capacity > 0.0 {
            (used / capacity).clamp(0.0, 1.0)
        } else {
            1.0
        };
        if u >= 1.0 {
            self.cap
        } else {
            (1.0 / (1.0 - u)).min(self.cap)
        }
    }
}

/// Price per unit of bandwidth on `link`.
pub fn link_price(
    policy: &PricingPolicy,
    net: &PhysicalNetwork,
    link: LinkId,
    state: &ResidualState,
) -> f64 {
    let l = net.link(link);
    if !policy.links {
        return l.unit_price;
    }
    l.unit_price * policy.multiplier(state.link_used(link), l.capacity)
}

/// Price per unit of `resource` at `node`.
pub fn node_price(
    policy: &PricingPolicy,
    net: &PhysicalNetwork,
    node: NodeId,
    resource: ResourceId,
    state: &ResidualState,
) -> f64 {
    let n = net.node(node);
    let base = n.unit_price[resource.0];
    if !policy.nodes {
        return base;
    }
    base * policy.multiplier(state.node_used(node, resource), n.capacity[resource.0])
}

/// Unit prices of every element frozen at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSnapshot {
    pub link: Vec<f64>,
    pub node: Vec<Vec<f64>>,
}

impl PriceSnapshot {
    pub fn take(policy: &PricingPolicy, net: &PhysicalNetwork, state: &ResidualState) -> Self {
        let link = net
            .links
            .iter()
            .map(|l| link_price(policy, net, l.id, state))
            .collect();
        let node = net
            .nodes
            .iter()
            .map(|n| {
                (0..net.num_resources())
                    .map(|r| node_price(policy, net, n.id, ResourceId(r), state))
                    .collect()
            })
            .collect();
        Self { link, node }
    }

    /// Static prices of `net`.
    pub fn base(net: &PhysicalNetwork) -> Self {
        Self::take(&PricingPolicy::default(), net, &ResidualState::new(net))
    }

    /// Cost of carrying `bandwidth` over `link`.
    pub fn hop_cost(&self, link: LinkId, bandwidth: f64) -> f64 {
        self.link[link.0] * bandwidth
    }

    /// Cost of hosting a VNF with `demand` at `node`.
    pub fn placement_cost(&self, node: NodeId, demand: &[f64]) -> f64 {
        self.node[node.0]
            .iter()
            .zip(demand)
            .map(|(p, d)| p * d)
            .sum()
    }

    /// Multiplies every price by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            link: self.link.iter().map(|p| p * factor).collect(),
            node: self
                .node
                .iter()
                .map(|row| row.iter().map(|p| p * factor).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::line_scenario;
    use crate::model::Footprint;
    use proptest::prelude::*;

    fn loaded(used: f64) -> (crate::model::Scenario, ResidualState) {
        let s = line_scenario(2, 10.0);
        let mut st = ResidualState::new(&s.network);
        if used > 0.0 {
            let mut fp = Footprint::default();
            fp.links.insert(LinkId(0), used);
            fp.nodes.insert((NodeId(0), ResourceId(0)), used);
            st.reserve(&s.network, 1, fp).unwrap();
        }
        (s, st)
    }

    #[test]
    fn zero_load_keeps_static_price() {
        let (s, st) = loaded(0.0);
        let k = PricingPolicy::kleinrock(50.0);
        assert_eq!(link_price(&k, &s.network, LinkId(0), &st), 1.0);
        assert_eq!(
            node_price(&k, &s.network, NodeId(0), ResourceId(0), &st),
            1.0
        );
    }

    #[test]
    fn half_load_doubles_price() {
        let (s, st) = loaded(5.0);
        let k = PricingPolicy::kleinrock(50.0);
        assert_eq!(link_price(&k, &s.network, LinkId(0), &st), 2.0);
        assert_eq!(
            node_price(&k, &s.network, NodeId(0), ResourceId(0), &st),
            2.0
        );
        assert_eq!(
            link_price(&PricingPolicy::default(), &s.network, LinkId(0), &st),
            1.0
        );
    }

    #[test]
    fn cap_binds_near_saturation() {
        let (s, st) = loaded(9.99);
        let k = PricingPolicy::kleinrock(50.0);
        assert_eq!(link_price(&k, &s.network, LinkId(0), &st), 50.0);
        assert_eq!(
            node_price(&k, &s.network, NodeId(0), ResourceId(0), &st),
            50.0
        );
        let (s, st) = loaded(10.0);
        assert_eq!(link_price(&k, &s.network, LinkId(0), &st), 50.0);
    }

    #[test]
    fn per_element_switches() {
        let (s, st) = loaded(5.0);
        let k = PricingPolicy {
            links: false,
            ..PricingPolicy::kleinrock(50.0)
        };
        assert_eq!(link_price(&k, &s.network, LinkId(0), &st), 1.0);
        assert_eq!(
            node_price(&k, &s.network, NodeId(0), ResourceId(0), &st),
            2.0
        );
    }

    #[test]
    fn cap_must_exceed_one() {
        assert!(PricingPolicy::kleinrock(1.0).validate().is_err());
        assert!(PricingPolicy::kleinrock(1.5).validate().is_ok());
    }

    proptest! {
        #[test]
        fn multiplier_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, cap in 1.01f64..500.0) {
            let p = PricingPolicy::kleinrock(cap);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(p.multiplier(lo, 1.0) <= p.multiplier(hi, 1.0));
            prop_assert!(p.multiplier(lo, 1.0) >= 1.0);
            prop_assert!(p.multiplier(hi, 1.0) <= cap);
        }

        #[test]
        fn multiplier_is_continuous_below_cap(u in 0.0f64..0.98, cap in 60.0f64..200.0) {
            let p = PricingPolicy::kleinrock(cap);
            let h = 1e-9;
            prop_assert!((p.multiplier(u + h, 1.0) - p.multiplier(u, 1.0)).abs() < 1e-4);
        }
    }
}
