//! Monte Carlo sampling of stationary ages through shortest exponential paths.
//!
//! Each replicate draws an independent service time for every augmented edge
//! and runs Dijkstra from the virtual source; the distance to node `v` is a
//! draw from the stationary law of `v`'s age, and the minimum distance over a
//! subset `A` is a draw from the law of `A`'s minimum age.
//!
//! Only those per-subset marginals are valid. The tuple of distances in one
//! replicate does **not** follow the joint law of the ages: in the real
//! process two neighbours hold identical ages for a positive fraction of
//! time, while sampled distances never tie. Do not read cross-node
//! correlations out of a [`SampleBatch`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::network::{AugmentedNetwork, NodeId, SubsetId};
use crate::par::{for_each_chunk_mut, map_indexed, Exec};
use crate::rng::RngPolicy;

/// Replicates per work unit. Chunk boundaries fix the summation order of
/// estimates, which keeps results independent of the thread count.
const CHUNK: usize = 64;

/// A function of the age whose stationary mean is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    Mean,
    Moment(u32),
    IndicatorGe(f64),
    ExpTilt(f64),
}

impl Functional {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Functional::Mean => x,
            Functional::Moment(k) => x.powi(k as i32),
            Functional::IndicatorGe(d) => f64::from(u8::from(x >= d)),
            Functional::ExpTilt(s) => (s * x).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Functional::Moment(0) => Err(Error::InvalidArgument("moment order must be at least 1".into())),
            Functional::IndicatorGe(d) | Functional::ExpTilt(d) if d.is_nan() => {
                Err(Error::InvalidArgument("functional parameter is NaN".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Welford accumulator; partials merge with Chan's formula.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }

    fn estimate(&self) -> Estimate {
        let stderr = if self.n > 1.0 { (self.m2 / (self.n - 1.0) / self.n).sqrt() } else { 0.0 };
        Estimate { value: self.mean, stderr }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties broken by the smaller node index.
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compressed adjacency of the augmented graph plus reusable Dijkstra buffers.
struct PathSolver {
    start: Vec<usize>,
    heads: Vec<usize>,
    edge_of: Vec<usize>,
    source: usize,
    dist: Vec<f64>,
    done: Vec<bool>,
    heap: BinaryHeap<Entry>,
}

impl PathSolver {
    fn new(net: &AugmentedNetwork) -> Self {
        let nodes = net.node_count() + 1;
        let mut start = vec![0usize; nodes + 1];
        for e in net.edges() {
            start[e.from.0 + 1] += 1;
        }
        for u in 0..nodes {
            start[u + 1] += start[u];
        }
        let mut cursor = start.clone();
        let mut heads = vec![0; net.edges().len()];
        let mut edge_of = vec![0; net.edges().len()];
        for (k, e) in net.edges().iter().enumerate() {
            let slot = cursor[e.from.0];
            heads[slot] = e.to.0;
            edge_of[slot] = k;
            cursor[e.from.0] += 1;
        }
        PathSolver {
            start,
            heads,
            edge_of,
            source: net.theta_prime().0,
            dist: vec![f64::INFINITY; nodes],
            done: vec![false; nodes],
            heap: BinaryHeap::new(),
        }
    }

    /// Shortest distances from the virtual source under `weights` (indexed by
    /// augmented edge). With a target the search halts once any target node is
    /// settled; distances of unsettled nodes are then upper bounds only.
    fn solve(&mut self, weights: &[f64], target: Option<&[bool]>) -> &[f64] {
        self.dist.fill(f64::INFINITY);
        self.done.fill(false);
        self.heap.clear();
        self.dist[self.source] = 0.0;
        self.heap.push(Entry { dist: 0.0, node: self.source });
        while let Some(Entry { dist, node }) = self.heap.pop() {
            if self.done[node] {
                continue;
            }
            self.done[node] = true;
            if target.is_some_and(|t| t[node]) {
                break;
            }
            for k in self.start[node]..self.start[node + 1] {
                let v = self.heads[k];
                let nd = dist + weights[self.edge_of[k]];
                if nd < self.dist[v] {
                    self.dist[v] = nd;
                    self.heap.push(Entry { dist: nd, node: v });
                }
            }
        }
        &self.dist
    }
}

/// `n` replicates of the per-node sampled ages.
///
/// Row `i` holds replicate `i`'s distances to every user node. See the module
/// docs: columns are valid marginals, rows are not joint draws of the ages.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    ages: Vec<f64>,
    n: usize,
    nodes: usize,
    rng: RngPolicy,
    network_hash: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn rng(&self) -> RngPolicy {
        self.rng
    }

    pub fn network_hash(&self) -> u64 {
        self.network_hash
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.ages[i * self.nodes..(i + 1) * self.nodes]
    }

    pub fn age(&self, i: usize, v: NodeId) -> f64 {
        self.ages[i * self.nodes + v.0]
    }

    fn check_subset(&self, a: &SubsetId) -> Result<()> {
        if a.indices().contains(&self.nodes) {
            return Err(Error::SubsetContainsVirtualSource);
        }
        if a.indices().iter().any(|&i| i > self.nodes) {
            return Err(Error::InvalidArgument("subset refers to nodes outside the network".into()));
        }
        Ok(())
    }

    /// Sampled age of subset `a` in replicate `i`: the minimum over its members.
    #[inline]
    pub fn subset_age(&self, i: usize, a: &SubsetId) -> f64 {
        let row = self.row(i);
        a.indices().iter().map(|&v| row[v]).fold(f64::INFINITY, f64::min)
    }

    /// Writes `replicate,<label>,...` followed by one row per replicate.
    pub fn write_csv<W: Write>(&self, labels: &[String], mut out: W) -> io::Result<()> {
        write!(out, "replicate")?;
        for l in labels {
            write!(out, ",{l}")?;
        }
        writeln!(out)?;
        for i in 0..self.n {
            write!(out, "{i}")?;
            for x in self.row(i) {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Draws `n` replicates with the default execution mode.
pub fn sample_ages(net: &AugmentedNetwork, n: usize, rng: RngPolicy) -> Result<SampleBatch> {
    sample_ages_with(net, n, rng, Exec::default())
}

pub fn sample_ages_with(net: &AugmentedNetwork, n: usize, rng: RngPolicy, exec: Exec) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument("replicate count must be at least 1".into()));
    }
    let nodes = net.node_count();
    let mut ages = vec![0.0; n * nodes];
    for_each_chunk_mut(exec, &mut ages, CHUNK * nodes, |offset, rows| {
        let first = offset / nodes;
        let count = rows.len() / nodes;
        let mut solver = PathSolver::new(net);
        let draws = draw_chunk(net, rng, first, count);
        let mut weights = vec![0.0; net.edges().len()];
        for j in 0..count {
            for (e, w) in weights.iter_mut().enumerate() {
                *w = draws[e * count + j];
            }
            let dist = solver.solve(&weights, None);
            rows[j * nodes..(j + 1) * nodes].copy_from_slice(&dist[..nodes]);
        }
    });
    Ok(SampleBatch { ages, n, nodes, rng, network_hash: net.fingerprint() })
}

/// Edge-major block of draws for replicates `first..first + count`.
fn draw_chunk(net: &AugmentedNetwork, rng: RngPolicy, first: usize, count: usize) -> Vec<f64> {
    let mut draws = vec![0.0; net.edges().len() * count];
    for (e, edge) in net.edges().iter().enumerate() {
        rng.fill_exponentials(edge.key, first as u64, edge.rate, &mut draws[e * count..(e + 1) * count]);
    }
    draws
}

/// Sample mean and standard error of `f(age_A)` over the batch.
pub fn estimate(batch: &SampleBatch, a: &SubsetId, f: Functional) -> Result<Estimate> {
    batch.check_subset(a)?;
    f.validate()?;
    let mut total = Moments::default();
    for chunk_start in (0..batch.n).step_by(CHUNK) {
        let mut m = Moments::default();
        for i in chunk_start..(chunk_start + CHUNK).min(batch.n) {
            m.push(f.apply(batch.subset_age(i, a)));
        }
        total = total.merge(m);
    }
    Ok(total.estimate())
}

/// Fraction of replicates whose subset age is at most `d`.
pub fn empirical_cdf(batch: &SampleBatch, a: &SubsetId, d: f64) -> Result<f64> {
    batch.check_subset(a)?;
    let hits = (0..batch.n).filter(|&i| batch.subset_age(i, a) <= d).count();
    Ok(hits as f64 / batch.n as f64)
}

/// Streaming estimate of `f(age_A)` without materialising the batch.
///
/// Each replicate's Dijkstra stops as soon as a node of `a` is settled. The
/// result is bit-identical to [`estimate`] on the batch from [`sample_ages`]
/// with the same policy.
pub fn fold_estimate(
    net: &AugmentedNetwork,
    n: usize,
    rng: RngPolicy,
    a: &SubsetId,
    f: Functional,
    exec: Exec,
) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("replicate count must be at least 1".into()));
    }
    if a.contains(net.theta_prime()) {
        return Err(Error::SubsetContainsVirtualSource);
    }
    if a.indices().iter().any(|&i| i > net.node_count()) {
        return Err(Error::InvalidArgument("subset refers to nodes outside the network".into()));
    }
    f.validate()?;
    let mut target = vec![false; net.node_count() + 1];
    for &v in a.indices() {
        target[v] = true;
    }
    let chunks = n.div_ceil(CHUNK);
    let partials = map_indexed(exec, chunks, |k| {
        let first = k * CHUNK;
        let count = CHUNK.min(n - first);
        let mut solver = PathSolver::new(net);
        let draws = draw_chunk(net, rng, first, count);
        let mut weights = vec![0.0; net.edges().len()];
        let mut m = Moments::default();
        for j in 0..count {
            for (e, w) in weights.iter_mut().enumerate() {
                *w = draws[e * count + j];
            }
            let dist = solver.solve(&weights, Some(&target));
            let age = a.indices().iter().map(|&v| dist[v]).fold(f64::INFINITY, f64::min);
            m.push(f.apply(age));
        }
        m
    });
    Ok(partials.into_iter().fold(Moments::default(), Moments::merge).estimate())
}
