//! Builders for the standard layouts: serial cascades, triangles, triangle
//! cascades, and random single-source networks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{AugmentedNetwork, EdgeSpec, NetworkSpec};

fn edge(from: &str, to: &str, rate: f64) -> EdgeSpec {
    EdgeSpec { from: from.into(), to: to.into(), rate }
}

/// Line `v0 -> v1 -> ... -> vk` with source `v0`, one rate per hop.
pub fn serial_cascade_spec(lambda: f64, rates: &[f64]) -> NetworkSpec {
    let nodes: Vec<String> = (0..=rates.len()).map(|i| format!("v{i}")).collect();
    let edges = rates.iter().enumerate().map(|(i, &r)| edge(&nodes[i], &nodes[i + 1], r)).collect();
    NetworkSpec { lambda, source: nodes[0].clone(), nodes, edges }
}

pub fn serial_cascade(lambda: f64, rates: &[f64]) -> Result<AugmentedNetwork> {
    AugmentedNetwork::new(&serial_cascade_spec(lambda, rates))
}

/// Source `s`, relay `v`, destination `d`: edges s->v, v->d and s->d.
pub fn triangle_spec(lambda: f64, mu_sv: f64, mu_vd: f64, mu_sd: f64) -> NetworkSpec {
    NetworkSpec {
        lambda,
        source: "s".into(),
        nodes: vec!["s".into(), "v".into(), "d".into()],
        edges: vec![edge("s", "v", mu_sv), edge("v", "d", mu_vd), edge("s", "d", mu_sd)],
    }
}

pub fn triangle(lambda: f64, mu_sv: f64, mu_vd: f64, mu_sd: f64) -> Result<AugmentedNetwork> {
    AugmentedNetwork::new(&triangle_spec(lambda, mu_sv, mu_vd, mu_sd))
}

/// Triangles `(v_{2i-2}, v_{2i-1}, v_{2i})` chained at even nodes. Each tuple
/// holds the rates of `v_{2i-2}->v_{2i-1}`, `v_{2i-1}->v_{2i}` and `v_{2i-2}->v_{2i}`.
pub fn triangle_cascade_spec(lambda: f64, triangles: &[(f64, f64, f64)]) -> NetworkSpec {
    let nodes: Vec<String> = (0..=2 * triangles.len()).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::with_capacity(3 * triangles.len());
    for (i, &(a, b, c)) in triangles.iter().enumerate() {
        let (x, y, z) = (&nodes[2 * i], &nodes[2 * i + 1], &nodes[2 * i + 2]);
        edges.push(edge(x, y, a));
        edges.push(edge(y, z, b));
        edges.push(edge(x, z, c));
    }
    NetworkSpec { lambda, source: nodes[0].clone(), nodes, edges }
}

pub fn triangle_cascade(lambda: f64, triangles: &[(f64, f64, f64)]) -> Result<AugmentedNetwork> {
    AugmentedNetwork::new(&triangle_cascade_spec(lambda, triangles))
}

/// Random single-source network on `n` nodes `n0..`: a random arborescence
/// rooted at `n0` plus up to `extra` additional edges, rates drawn from [0.5, 2.5).
pub fn random_ssn_spec(n: usize, extra: usize, seed: u64) -> Result<NetworkSpec> {
    if n < 1 {
        return Err(Error::InvalidArgument("random network needs at least one node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut order: Vec<usize> = (1..n).collect();
    order.shuffle(&mut rng);
    let mut present = std::collections::HashSet::new();
    let mut edges = Vec::new();
    let mut attached = vec![0usize];
    for &v in &order {
        let u = attached[rng.gen_range(0..attached.len())];
        present.insert((u, v));
        edges.push(edge(&nodes[u], &nodes[v], rng.gen_range(0.5..2.5)));
        attached.push(v);
    }
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| u != v && !present.contains(&(u, v)))
        .collect();
    candidates.shuffle(&mut rng);
    for &(u, v) in candidates.iter().take(extra) {
        edges.push(edge(&nodes[u], &nodes[v], rng.gen_range(0.5..2.5)));
    }
    Ok(NetworkSpec { lambda: rng.gen_range(0.5..2.0), source: nodes[0].clone(), nodes, edges })
}

pub fn random_ssn(n: usize, extra: usize, seed: u64) -> Result<AugmentedNetwork> {
    AugmentedNetwork::new(&random_ssn_spec(n, extra, seed)?)
}
