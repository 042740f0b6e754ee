//! Slice request traces.
//!
//! A trace is generated in full before a run, from three independent
//! random streams (arrival instants, request contents, holding times), so
//! that every engine and pricing policy sees exactly the same requests.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::model::{
    allowed_operators, NodeId, OperatorId, Scenario, ServiceChain, SliceRequest, SliceType,
    TrustSpec, VnfId, WorkloadSpec,
};

const ARRIVAL_STREAM: u64 = 1;
const CONTENT_STREAM: u64 = 2;
const HOLDING_STREAM: u64 = 3;

/// Random stream `stream` of the experiment with seed `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The three built-in slice types.
pub fn default_slice_types() -> Vec<SliceType> {
    vec![
        SliceType {
            name: "latency-critical".into(),
            weight: 0.3,
            services: [1, 2],
            chain_length: [1, 2],
            bandwidth: [1.0, 3.0],
            max_latency: [14.0, 22.0],
            deny_count: 1,
            allow_count: 0,
        },
        SliceType {
            name: "bandwidth-heavy".into(),
            weight: 0.3,
            services: [1, 2],
            chain_length: [1, 3],
            bandwidth: [6.0, 15.0],
            max_latency: [40.0, 80.0],
            deny_count: 0,
            allow_count: 1,
        },
        SliceType {
            name: "standard".into(),
            weight: 0.4,
            services: [1, 3],
            chain_length: [1, 3],
            bandwidth: [2.0, 6.0],
            max_latency: [25.0, 45.0],
            deny_count: 0,
            allow_count: 0,
        },
    ]
}

/// Slice types of `scenario`, or the built-in ones if it defines none.
pub fn slice_types(scenario: &Scenario) -> Vec<SliceType> {
    if scenario.slice_types.is_empty() {
        default_slice_types()
    } else {
        scenario.slice_types.clone()
    }
}

/// Rounds to one decimal so that sums of generated quantities never sit
/// within solver tolerance of a capacity or latency bound without being
/// equal to it.
pub(crate) fn quantize(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn draw(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] >= range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..=range[1])
    }
}

/// Draws one request of type `kind` with the given id.
///
/// The origin operator is uniform; the deny-list takes `deny_count` other
/// operators and the allow-list `allow_count` operators the origin does
/// not trust. Sources lie in the origin's domain and sinks in any domain
/// the request may use. Chains are ordered samples of distinct VNFs.
pub fn sample_slice(
    scenario: &Scenario,
    kind: &SliceType,
    id: u64,
    rng: &mut ChaCha8Rng,
) -> SliceRequest {
    let net = &scenario.network;
    let ops: Vec<OperatorId> = net.operators.iter().map(|o| o.id).collect();
    let origin = *ops.choose(rng).expect("at least one operator");
    let mut others: Vec<OperatorId> = ops.iter().copied().filter(|&o| o != origin).collect();
    others.shuffle(rng);
    let deny: Vec<OperatorId> = others.iter().copied().take(kind.deny_count).collect();
    let mut untrusted: Vec<OperatorId> = others
        .iter()
        .copied()
        .filter(|o| !deny.contains(o) && !scenario.trust.op_trusts(origin, *o))
        .collect();
    untrusted.sort();
    untrusted.shuffle(rng);
    let mut allow: Vec<OperatorId> = untrusted.into_iter().take(kind.allow_count).collect();
    allow.sort();
    let mut deny = deny;
    deny.sort();
    let trust_spec = TrustSpec {
        origin,
        allow,
        deny,
    };

    let probe = SliceRequest {
        id,
        slice_type: Some(kind.name.clone()),
        services: Vec::new(),
        vnf_catalog: Vec::new(),
        trust_spec: trust_spec.clone(),
        arrival_time: 0.0,
        holding_time: 1.0,
    };
    let allowed = allowed_operators(&probe, &scenario.trust).expect("origin is never denied");
    let sources: Vec<NodeId> = net.nodes_of(origin).map(|n| n.id).collect();
    let sinks: Vec<NodeId> = net
        .nodes
        .iter()
        .filter(|n| allowed.contains(&n.operator_id))
        .map(|n| n.id)
        .collect();

    let count = rng.random_range(kind.services[0]..=kind.services[1]);
    let vnf_ids: Vec<VnfId> = scenario.vnfs.iter().map(|v| v.id).collect();
    let mut services = Vec::with_capacity(count);
    for g in 0..count {
        let source = *sources.choose(rng).expect("operators own nodes");
        let sink = loop {
            let t = *sinks.choose(rng).expect("origin nodes are allowed");
            if t != source || sinks.len() == 1 {
                break t;
            }
        };
        let length = rng
            .random_range(kind.chain_length[0]..=kind.chain_length[1])
            .min(vnf_ids.len());
        let vnf_sequence: Vec<VnfId> = vnf_ids.choose_multiple(rng, length).copied().collect();
        let bandwidth = quantize(draw(rng, kind.bandwidth)).max(0.1);
        let max_latency = quantize(draw(rng, kind.max_latency)).max(0.1);
        services.push(ServiceChain {
            id: g,
            source,
            sink,
            vnf_sequence,
            bandwidth,
            max_latency,
        });
    }
    SliceRequest {
        id,
        slice_type: Some(kind.name.clone()),
        vnf_catalog: SliceRequest::derive_catalog(scenario, &services),
        services,
        trust_spec,
        arrival_time: 0.0,
        holding_time: 1.0,
    }
}

/// Picks a slice type by weight.
pub fn pick_type<'a>(types: &'a [SliceType], rng: &mut ChaCha8Rng) -> &'a SliceType {
    let u: f64 = rng.random_range(0.0..1.0);
    let total: f64 = types.iter().map(|t| t.weight).sum();
    let mut acc = 0.0;
    for t in types {
        acc += t.weight / total;
        if u < acc {
            return t;
        }
    }
    types.last().expect("at least one slice type")
}

/// All requests arriving in `[0, horizon)`, in arrival order, with ids
/// numbered from 0.
pub fn generate_trace(scenario: &Scenario, workload: &WorkloadSpec) -> Vec<SliceRequest> {
    let mut trace = Vec::new();
    if workload.arrival_rate <= 0.0 {
        return trace;
    }
    let types = slice_types(scenario);
    let mut arrivals = stream(workload.seed, ARRIVAL_STREAM);
    let mut contents = stream(workload.seed, CONTENT_STREAM);
    let mut holdings = stream(workload.seed, HOLDING_STREAM);
    let gap = Exp::new(workload.arrival_rate).expect("positive rate");
    let hold = Exp::new(1.0 / workload.mean_holding_time).expect("positive mean");
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut arrivals);
        if t >= workload.horizon {
            break;
        }
        let id = trace.len() as u64;
        let kind = pick_type(&types, &mut contents);
        let mut slice = sample_slice(scenario, kind, id, &mut contents);
        slice.arrival_time = t;
        slice.holding_time = if workload.deterministic_holding {
            workload.mean_holding_time
        } else {
            hold.sample(&mut holdings).max(f64::MIN_POSITIVE)
        };
        trace.push(slice);
    }
    trace
}
