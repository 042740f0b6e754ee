//! Online embedding of multi-domain network slices.
//!
//! A slice is a set of service chains, each an ordered list of VNFs between
//! a source and a sink. The engine places every VNF on a function node and
//! routes every hop, subject to link and node capacities, per-chain latency
//! budgets and the trust relation between operators. Two formulations are
//! provided: a node–link ILP over a layered expansion of the network and a
//! path–link ILP over precomputed candidate paths.

pub mod cli;
pub mod embed_nl;
pub mod embed_pl;
pub mod engine;
pub mod expand;
pub mod fixtures;
pub mod model;
pub mod paths;
pub mod pricing;
pub mod sim;
