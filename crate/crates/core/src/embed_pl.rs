//! Path–link formulation: one candidate path per service.
//!
//! Variables `z[g,p]` select candidate `p` for service `g`:
//!
//! * (P1) every service selects exactly one candidate;
//! * (P2) the bandwidth of the selected candidates fits every link;
//! * (P3) the demand of the selected candidates fits every node resource.
//!
//! The objective is the sum of the selected candidate costs. Latency and
//! trust hold by construction of the candidates.
//!
//! With per-slice VNF sharing, binaries `w[f,v]` place each slice VNF once;
//! a candidate may only be selected if the hosts it uses are the ones
//! chosen by `w`, node rows count `w` instead of the candidates, and the
//! placement part of the cost moves from `z` to `w`.

use std::collections::BTreeMap;

use slicebed_milp::{IlpModel, IlpSolution, Relation, VarId};

use crate::engine::{Admission, Blocked};
use crate::model::{
    Embedding, LinkId, NodeId, ResidualState, ResourceId, Scenario, ServiceEmbedding, SliceRequest,
    VnfId, VnfSharing,
};
use crate::paths::{generate_candidates, CandidatePath};
use crate::pricing::PriceSnapshot;

/// A path–link program together with the candidates it selects from.
#[derive(Debug, Clone)]
pub struct PlModel {
    pub model: IlpModel,
    pub candidates: Vec<Vec<CandidatePath>>,
    z: Vec<Vec<VarId>>,
    shared: BTreeMap<(VnfId, NodeId), (VarId, f64)>,
}

/// Builds the path–link program over `candidates`, one list per service of
/// `slice` in service order.
pub fn build_pl(
    scenario: &Scenario,
    state: &ResidualState,
    slice: &SliceRequest,
    prices: &PriceSnapshot,
    candidates: Vec<Vec<CandidatePath>>,
) -> Result<PlModel, Blocked> {
    let net = &scenario.network;
    for (service, list) in slice.services.iter().zip(&candidates) {
        if list.is_empty() {
            return Err(Blocked::NoCandidatePath {
                service: service.id,
            });
        }
    }
    let sharing = scenario.sharing == VnfSharing::PerSlice;
    let mut model = IlpModel::new();
    let mut z = Vec::with_capacity(candidates.len());
    let mut link_rows: BTreeMap<LinkId, Vec<(VarId, f64)>> = BTreeMap::new();
    let mut link_peak: BTreeMap<LinkId, f64> = BTreeMap::new();
    let mut node_rows: BTreeMap<(NodeId, ResourceId), Vec<(VarId, f64)>> = BTreeMap::new();
    let mut node_peak: BTreeMap<(NodeId, ResourceId), f64> = BTreeMap::new();

    for (service, list) in slice.services.iter().zip(&candidates) {
        let g = service.id;
        let mut vars = Vec::with_capacity(list.len());
        let mut service_link_peak: BTreeMap<LinkId, f64> = BTreeMap::new();
        let mut service_node_peak: BTreeMap<(NodeId, ResourceId), f64> = BTreeMap::new();
        for cand in list {
            let cost = if sharing {
                cand.routing_cost()
            } else {
                cand.cost
            };
            let var = model.add_binary(format!("z_g{g}_p{}", cand.index), cost);
            for &(l, a) in &cand.link_use {
                link_rows.entry(l).or_default().push((var, a));
                let peak = service_link_peak.entry(l).or_insert(0.0);
                *peak = peak.max(a);
            }
            if !sharing {
                for &(key, a) in &cand.node_use {
                    node_rows.entry(key).or_default().push((var, a));
                    let peak = service_node_peak.entry(key).or_insert(0.0);
                    *peak = peak.max(a);
                }
            }
            vars.push(var);
        }
        for (l, a) in service_link_peak {
            *link_peak.entry(l).or_insert(0.0) += a;
        }
        for (key, a) in service_node_peak {
            *node_peak.entry(key).or_insert(0.0) += a;
        }
        // (P1) one candidate per service.
        model.add_constraint(
            format!("choose_g{g}"),
            vars.iter().map(|&v| (v, 1.0)),
            Relation::Eq,
            1.0,
        );
        z.push(vars);
    }

    let mut shared: BTreeMap<(VnfId, NodeId), (VarId, f64)> = BTreeMap::new();
    if sharing {
        for (service, list) in slice.services.iter().zip(&candidates) {
            for (cand, &zv) in list.iter().zip(&z[shared_index(slice, service.id)]) {
                for (&f, &v) in service.vnf_sequence.iter().zip(&cand.placement) {
                    let (w, _) = *shared.entry((f, v)).or_insert_with(|| {
                        let c = prices.placement_cost(v, &scenario.vnf(f).demand);
                        (model.add_binary(format!("w_f{f}_n{v}"), c), c)
                    });
                    model.add_constraint(
                        format!("link_g{}_p{}_f{f}", service.id, cand.index),
                        [(zv, 1.0), (w, -1.0)],
                        Relation::Le,
                        0.0,
                    );
                }
            }
        }
        let mut by_vnf: BTreeMap<VnfId, Vec<VarId>> = BTreeMap::new();
        for (&(f, v), &(w, _)) in &shared {
            by_vnf.entry(f).or_default().push(w);
            for (r, &d) in scenario.vnf(f).demand.iter().enumerate() {
                if d > 0.0 {
                    node_rows
                        .entry((v, ResourceId(r)))
                        .or_default()
                        .push((w, d));
                    *node_peak.entry((v, ResourceId(r))).or_insert(0.0) += d;
                }
            }
        }
        for (f, ws) in by_vnf {
            model.add_constraint(
                format!("host_f{f}"),
                ws.into_iter().map(|w| (w, 1.0)),
                Relation::Le,
                1.0,
            );
        }
    }

    // (P2) link capacity, skipping rows no selection can violate.
    for (l, terms) in link_rows {
        let residual = state.link_residual(net, l).max(0.0);
        if link_peak[&l] > residual {
            model.add_constraint(format!("cap_e{l}"), terms, Relation::Le, residual);
        }
    }
    // (P3) node resources.
    for ((v, r), terms) in node_rows {
        let residual = state.node_residual(net, v, r).max(0.0);
        if node_peak[&(v, r)] > residual {
            model.add_constraint(format!("cap_n{v}_r{r}"), terms, Relation::Le, residual);
        }
    }

    Ok(PlModel {
        model,
        candidates,
        z,
        shared,
    })
}

fn shared_index(slice: &SliceRequest, service_id: usize) -> usize {
    slice
        .services
        .iter()
        .position(|s| s.id == service_id)
        .expect("service of the slice")
}

impl PlModel {
    /// Number of candidate variables.
    pub fn num_path_vars(&self) -> usize {
        self.z.iter().map(Vec::len).sum()
    }

    pub fn decode(&self, slice: &SliceRequest, solution: &IlpSolution) -> Embedding {
        let sharing = !self.shared.is_empty();
        let mut services = Vec::with_capacity(self.z.len());
        for (service, (list, vars)) in slice
            .services
            .iter()
            .zip(self.candidates.iter().zip(&self.z))
        {
            let cand = list
                .iter()
                .zip(vars)
                .find(|&(_, &v)| solution.is_set(v))
                .map(|(c, _)| c)
                .expect("choice row forces one candidate");
            services.push(ServiceEmbedding {
                service_id: service.id,
                placement: cand.placement.clone(),
                segments: cand.segments.clone(),
                cost: if sharing {
                    cand.routing_cost()
                } else {
                    cand.cost
                },
                latency: cand.latency,
            });
        }
        let placement: f64 = self
            .shared
            .values()
            .filter(|&&(w, _)| solution.is_set(w))
            .map(|&(_, c)| c)
            .sum();
        let total_cost = services.iter().map(|s| s.cost).sum::<f64>() + placement;
        Embedding {
            slice_id: slice.id,
            services,
            total_cost,
        }
    }
}

/// Generates `k` candidates per service, then builds and solves the
/// path–link program with the default back end.
pub fn solve_pl(
    scenario: &Scenario,
    state: &ResidualState,
    slice: &SliceRequest,
    prices: &PriceSnapshot,
    k: usize,
) -> Result<Admission, Blocked> {
    let candidates =
        generate_candidates(scenario, state, slice, k, prices).map_err(|_| Blocked::Untrustable)?;
    let pl = build_pl(scenario, state, slice, prices, candidates)?;
    let solution =
        slicebed_milp::branch_and_bound(&pl.model, None).map_err(|e| Blocked::SolverFailure {
            detail: e.to_string(),
        })?;
    crate::engine::interpret(&solution, |s| pl.decode(slice, s))
}
