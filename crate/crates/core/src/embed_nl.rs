//! Node–link formulation of the per-request embedding problem.
//!
//! Variables, for a slice whose services have chains `f_1 .. f_m`:
//!
//! * `x[g,k,v]` (binary): position `k` of service `g` runs at node `v`.
//!   With per-slice VNF sharing this becomes `x[f,v]`, one per slice VNF.
//! * `y[g,h,e]` (binary): logical hop `h` of service `g` uses link `e`.
//!   Hop 0 goes from the source to `f_1`, hop `m` from `f_m` to the sink.
//!
//! Constraints:
//!
//! * (C1) every position is placed on exactly one node;
//! * (C2) for every hop and node `u`, outflow minus inflow equals
//!   `[u is the hop start] - [u is the hop end]`, where start and end are
//!   the endpoints or the `x` variables of the adjacent positions;
//! * (C3) the bandwidth routed over a link fits its residual capacity;
//! * (C4) the demand placed on a node fits its residual resources;
//! * (C5) link delays plus processing delays stay within the budget.
//!
//! The objective prices every routed unit of bandwidth and every placed
//! unit of demand. Only nodes of trusted operators carry variables; links
//! without room for the service bandwidth and hosts without room for the
//! VNF are left out up front.

use std::collections::BTreeMap;

use slicebed_milp::{IlpModel, IlpSolution, Relation, VarId};

use crate::engine::Blocked;
use crate::expand::allowed_nodes;
use crate::model::{
    allowed_operators, Embedding, LinkId, NodeId, ResidualState, ResourceId, Scenario,
    ServiceEmbedding, SliceRequest, VnfId, VnfSharing,
};
use crate::pricing::PriceSnapshot;

#[derive(Debug, Clone)]
struct ServiceVars {
    service_id: usize,
    /// Host variables per chain position.
    x: Vec<Vec<(NodeId, VarId)>>,
    /// Link variables per hop.
    y: Vec<Vec<(LinkId, VarId)>>,
}

/// A node–link program together with what is needed to decode it.
#[derive(Debug, Clone)]
pub struct NlModel {
    pub model: IlpModel,
    services: Vec<ServiceVars>,
    sharing: VnfSharing,
}

/// Builds the node–link program of `slice`, or reports why no embedding
/// can exist without solving.
pub fn build_nl(
    scenario: &Scenario,
    state: &ResidualState,
    slice: &SliceRequest,
    prices: &PriceSnapshot,
) -> Result<NlModel, Blocked> {
    let net = &scenario.network;
    let ops = allowed_operators(slice, &scenario.trust).map_err(|_| Blocked::Untrustable)?;
    let allowed = allowed_nodes(scenario, &ops);
    let mut model = IlpModel::new();

    let hosts_for = |f: VnfId| -> Vec<NodeId> {
        let demand = &scenario.vnf(f).demand;
        let mut hosts: Vec<NodeId> = slice
            .candidate_nodes(f)
            .iter()
            .copied()
            .filter(|&v| allowed[v.0] && net.node(v).is_function_node)
            .filter(|&v| state.node_fits(net, v, demand))
            .collect();
        hosts.sort();
        hosts.dedup();
        hosts
    };

    // Slice-wide host variables when VNF instances are shared.
    let mut shared: BTreeMap<VnfId, Vec<(NodeId, VarId)>> = BTreeMap::new();
    if scenario.sharing == VnfSharing::PerSlice {
        for req in &slice.vnf_catalog {
            if !slice
                .services
                .iter()
                .any(|s| s.vnf_sequence.contains(&req.vnf))
            {
                continue;
            }
            let f = req.vnf;
            let hosts = hosts_for(f);
            let vars: Vec<(NodeId, VarId)> = hosts
                .iter()
                .map(|&v| {
                    let c = prices.placement_cost(v, &scenario.vnf(f).demand);
                    (v, model.add_binary(format!("x_f{f}_n{v}"), c))
                })
                .collect();
            if vars.is_empty() {
                let (service, position) = slice
                    .services
                    .iter()
                    .find_map(|s| {
                        s.vnf_sequence
                            .iter()
                            .position(|&g| g == f)
                            .map(|k| (s.id, k))
                    })
                    .expect("VNF occurs in some chain");
                return Err(Blocked::NoPlacement { service, position });
            }
            model.add_constraint(
                format!("place_f{f}"),
                vars.iter().map(|&(_, x)| (x, 1.0)),
                Relation::Eq,
                1.0,
            );
            shared.insert(f, vars);
        }
    }

    let mut services = Vec::with_capacity(slice.services.len());
    // Coefficients of the capacity rows, filled while creating variables.
    let mut link_rows: BTreeMap<LinkId, Vec<(VarId, f64)>> = BTreeMap::new();
    let mut node_rows: BTreeMap<(NodeId, ResourceId), Vec<(VarId, f64)>> = BTreeMap::new();

    for service in &slice.services {
        let g = service.id;
        if !allowed[service.source.0] || !allowed[service.sink.0] {
            return Err(Blocked::UnreachableEndpoints { service: g });
        }
        let m = service.vnf_sequence.len();
        let fixed_delay: f64 = service
            .vnf_sequence
            .iter()
            .map(|&f| scenario.vnf(f).proc_delay)
            .sum();
        if fixed_delay > service.max_latency {
            return Err(Blocked::Infeasible);
        }

        // (C1) placement.
        let mut x: Vec<Vec<(NodeId, VarId)>> = Vec::with_capacity(m);
        for (k, &f) in service.vnf_sequence.iter().enumerate() {
            if let Some(vars) = shared.get(&f) {
                x.push(vars.clone());
                continue;
            }
            let demand = &scenario.vnf(f).demand;
            let vars: Vec<(NodeId, VarId)> = hosts_for(f)
                .into_iter()
                .map(|v| {
                    let c = prices.placement_cost(v, demand);
                    (v, model.add_binary(format!("x_g{g}_k{k}_n{v}"), c))
                })
                .collect();
            if vars.is_empty() {
                return Err(Blocked::NoPlacement {
                    service: g,
                    position: k,
                });
            }
            model.add_constraint(
                format!("place_g{g}_k{k}"),
                vars.iter().map(|&(_, x)| (x, 1.0)),
                Relation::Eq,
                1.0,
            );
            for &(v, var) in &vars {
                for (r, &d) in demand.iter().enumerate() {
                    if d > 0.0 {
                        node_rows
                            .entry((v, ResourceId(r)))
                            .or_default()
                            .push((var, d));
                    }
                }
            }
            x.push(vars);
        }

        let links: Vec<LinkId> = net
            .links
            .iter()
            .filter(|l| allowed[l.source.0] && allowed[l.target.0])
            .filter(|l| state.link_fits(net, l.id, service.bandwidth))
            .map(|l| l.id)
            .collect();
        let mut y: Vec<Vec<(LinkId, VarId)>> = Vec::with_capacity(m + 1);
        let mut latency_terms = Vec::new();
        for h in 0..=m {
            let vars: Vec<(LinkId, VarId)> = links
                .iter()
                .map(|&l| {
                    let c = prices.hop_cost(l, service.bandwidth);
                    (l, model.add_binary(format!("y_g{g}_h{h}_e{l}"), c))
                })
                .collect();
            for &(l, var) in &vars {
                link_rows
                    .entry(l)
                    .or_default()
                    .push((var, service.bandwidth));
                latency_terms.push((var, net.link(l).prop_delay));
            }
            y.push(vars);
        }

        // (C2) flow conservation per hop, with the hop endpoints on the
        // right-hand side moved to the left.
        for h in 0..=m {
            let mut rows: BTreeMap<NodeId, (Vec<(VarId, f64)>, f64)> = BTreeMap::new();
            for (v, _) in net.nodes.iter().enumerate().filter(|&(v, _)| allowed[v]) {
                rows.insert(NodeId(v), (Vec::new(), 0.0));
            }
            for &(l, var) in &y[h] {
                let link = net.link(l);
                rows.get_mut(&link.source)
                    .expect("allowed")
                    .0
                    .push((var, 1.0));
                rows.get_mut(&link.target)
                    .expect("allowed")
                    .0
                    .push((var, -1.0));
            }
            if h == 0 {
                rows.get_mut(&service.source).expect("allowed").1 += 1.0;
            } else {
                for &(v, var) in &x[h - 1] {
                    rows.get_mut(&v).expect("allowed").0.push((var, -1.0));
                }
            }
            if h == m {
                rows.get_mut(&service.sink).expect("allowed").1 -= 1.0;
            } else {
                for &(v, var) in &x[h] {
                    rows.get_mut(&v).expect("allowed").0.push((var, 1.0));
                }
            }
            for (v, (terms, rhs)) in rows {
                if terms.is_empty() {
                    if rhs != 0.0 {
                        return Err(Blocked::Infeasible);
                    }
                    continue;
                }
                model.add_constraint(format!("flow_g{g}_h{h}_n{v}"), terms, Relation::Eq, rhs);
            }
        }

        // (C5) latency.
        let budget = service.max_latency - fixed_delay;
        let worst: f64 = latency_terms.iter().map(|t| t.1).sum();
        if worst > budget {
            model.add_constraint(format!("latency_g{g}"), latency_terms, Relation::Le, budget);
        }

        services.push(ServiceVars {
            service_id: g,
            x,
            y,
        });
    }

    for (f, vars) in &shared {
        for &(v, var) in vars {
            for (r, &d) in scenario.vnf(*f).demand.iter().enumerate() {
                if d > 0.0 {
                    node_rows
                        .entry((v, ResourceId(r)))
                        .or_default()
                        .push((var, d));
                }
            }
        }
    }

    // (C3) link capacity; rows that cannot bind are omitted.
    for (l, terms) in link_rows {
        let residual = state.link_residual(net, l).max(0.0);
        if terms.iter().map(|t| t.1).sum::<f64>() > residual {
            model.add_constraint(format!("cap_e{l}"), terms, Relation::Le, residual);
        }
    }
    // (C4) node resources.
    for ((v, r), terms) in node_rows {
        let residual = state.node_residual(net, v, r).max(0.0);
        if terms.iter().map(|t| t.1).sum::<f64>() > residual {
            model.add_constraint(format!("cap_n{v}_r{r}"), terms, Relation::Le, residual);
        }
    }

    Ok(NlModel {
        model,
        services,
        sharing: scenario.sharing,
    })
}

impl NlModel {
    /// Reads the embedding off a feasible solution. Each hop is recovered
    /// by walking the selected links from the hop start and erasing loops,
    /// which drops any detached cycles the solution may carry.
    pub fn decode(
        &self,
        scenario: &Scenario,
        slice: &SliceRequest,
        prices: &PriceSnapshot,
        solution: &IlpSolution,
    ) -> Embedding {
        let net = &scenario.network;
        let mut out = Vec::with_capacity(self.services.len());
        let mut placed: BTreeMap<(VnfId, NodeId), f64> = BTreeMap::new();
        for sv in &self.services {
            let service = slice
                .services
                .iter()
                .find(|s| s.id == sv.service_id)
                .expect("model built from this slice");
            let placement: Vec<NodeId> =
                sv.x.iter()
                    .map(|vars| {
                        vars.iter()
                            .find(|&&(_, var)| solution.is_set(var))
                            .map(|&(v, _)| v)
                            .expect("placement row forces one host")
                    })
                    .collect();
            let mut waypoints = vec![service.source];
            waypoints.extend(&placement);
            waypoints.push(service.sink);

            let mut segments = Vec::with_capacity(sv.y.len());
            for (h, vars) in sv.y.iter().enumerate() {
                let chosen: Vec<LinkId> = vars
                    .iter()
                    .filter(|&&(_, var)| solution.is_set(var))
                    .map(|&(l, _)| l)
                    .collect();
                segments.push(walk(scenario, &chosen, waypoints[h], waypoints[h + 1]));
            }

            let mut cost = 0.0;
            let mut latency = 0.0;
            for (h, seg) in segments.iter().enumerate() {
                for &l in seg {
                    cost += prices.hop_cost(l, service.bandwidth);
                    latency += net.link(l).prop_delay;
                }
                if let Some(&f) = service.vnf_sequence.get(h) {
                    let vnf = scenario.vnf(f);
                    latency += vnf.proc_delay;
                    let c = prices.placement_cost(placement[h], &vnf.demand);
                    match self.sharing {
                        VnfSharing::PerService => cost += c,
                        VnfSharing::PerSlice => {
                            placed.insert((f, placement[h]), c);
                        }
                    }
                }
            }
            out.push(ServiceEmbedding {
                service_id: service.id,
                placement,
                segments,
                cost,
                latency,
            });
        }
        let total_cost = out.iter().map(|s| s.cost).sum::<f64>() + placed.values().sum::<f64>();
        Embedding {
            slice_id: slice.id,
            services: out,
            total_cost,
        }
    }
}

/// Follows `links` from `start` until `end`, preferring the smallest link
/// id at each node, then removes the loops of the walk.
fn walk(scenario: &Scenario, links: &[LinkId], start: NodeId, end: NodeId) -> Vec<LinkId> {
    let net = &scenario.network;
    let mut unused: BTreeMap<NodeId, Vec<LinkId>> = BTreeMap::new();
    for &l in links {
        unused.entry(net.link(l).source).or_default().push(l);
    }
    for out in unused.values_mut() {
        out.sort();
    }
    let mut route: Vec<LinkId> = Vec::new();
    let mut at = start;
    while at != end {
        let Some(next) = unused
            .get_mut(&at)
            .and_then(|out| (!out.is_empty()).then(|| out.remove(0)))
        else {
            break;
        };
        route.push(next);
        at = net.link(next).target;
    }
    // Loop erasure: cut back to the first visit whenever a node repeats.
    let mut simple: Vec<LinkId> = Vec::new();
    let mut visited: Vec<NodeId> = vec![start];
    for l in route {
        let to = net.link(l).target;
        if let Some(pos) = visited.iter().position(|&v| v == to) {
            visited.truncate(pos + 1);
            simple.truncate(pos);
        } else {
            visited.push(to);
            simple.push(l);
        }
    }
    simple
}

/// Builds and solves the node–link program with the default back end.
pub fn solve_nl(
    scenario: &Scenario,
    state: &ResidualState,
    slice: &SliceRequest,
    prices: &PriceSnapshot,
) -> Result<crate::engine::Admission, Blocked> {
    let nl = build_nl(scenario, state, slice, prices)?;
    let solution =
        slicebed_milp::branch_and_bound(&nl.model, None).map_err(|e| Blocked::SolverFailure {
            detail: e.to_string(),
        })?;
    crate::engine::interpret(&solution, |s| nl.decode(scenario, slice, prices, s))
}
