//! Network descriptions, single-source validation and the augmented graph.
//!
//! A [`NetworkSpec`] is what the user writes down: labelled nodes, directed
//! edges with exponential service rates, a source and a generation rate.
//! [`AugmentedNetwork::new`] validates it and adds the virtual node that feeds
//! the source with an edge of rate lambda, so that packet generation becomes
//! one more exponential service. Every engine works on the augmented graph.
//!
//! Node indices are dense: user nodes take `0..n` in order of appearance and
//! the virtual node takes `n`, so bitmasks over user nodes are a prefix of the
//! masks over the augmented node set.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Label used for the virtual node in traces and reports. User labels may not take it.
pub const VIRTUAL_SOURCE_LABEL: &str = "θ'";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub rate: f64,
}

/// A parsed but not yet validated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub lambda: f64,
    pub source: String,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    lambda: f64,
    source: String,
    #[serde(default)]
    nodes: Option<Vec<String>>,
    edges: Vec<EdgeSpec>,
}

impl NetworkSpec {
    /// Parses the JSON network format. Node lists may be omitted, in which
    /// case nodes are inferred from the source and the edges in order of
    /// appearance. Validation beyond well-formedness is left to
    /// [`AugmentedNetwork::new`].
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawNetwork = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.lambda.is_nan() || raw.lambda <= 0.0 {
            return Err(Error::NonPositiveLambda(raw.lambda));
        }
        for e in &raw.edges {
            if e.rate.is_nan() || e.rate <= 0.0 {
                return Err(Error::NonPositiveRate { from: e.from.clone(), to: e.to.clone(), rate: e.rate });
            }
        }
        let nodes = match raw.nodes {
            Some(nodes) => {
                let mut seen = std::collections::HashSet::new();
                for n in &nodes {
                    if !seen.insert(n.as_str()) {
                        return Err(Error::DuplicateNode(n.clone()));
                    }
                }
                if !seen.contains(raw.source.as_str()) {
                    return Err(Error::UnknownNode(raw.source.clone()));
                }
                for e in &raw.edges {
                    for end in [&e.from, &e.to] {
                        if !seen.contains(end.as_str()) {
                            return Err(Error::UnknownNode(end.clone()));
                        }
                    }
                }
                nodes
            }
            None => {
                let mut nodes = vec![raw.source.clone()];
                for e in &raw.edges {
                    for end in [&e.from, &e.to] {
                        if !nodes.contains(end) {
                            nodes.push(end.clone());
                        }
                    }
                }
                nodes
            }
        };
        Ok(NetworkSpec { lambda: raw.lambda, source: raw.source, nodes, edges: raw.edges })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network spec serializes")
    }
}

/// Dense index of a node in the augmented graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// An edge of the augmented graph, with parallel edges already merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub rate: f64,
    /// Stable identity derived from the endpoint labels. The sampler keys its
    /// random streams on it, so an edge draws the same service times no matter
    /// which other edges the network has.
    pub key: u64,
}

/// A set of nodes of the augmented graph, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetId(Vec<usize>);

impl SubsetId {
    pub fn new(members: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut v: Vec<usize> = members.into_iter().map(|n| n.0).collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::EmptySubset);
        }
        Ok(SubsetId(v))
    }

    pub fn singleton(node: NodeId) -> Self {
        SubsetId(vec![node.0])
    }

    /// Builds a subset from a bitmask over node indices. Panics on an empty mask.
    pub fn from_mask(mask: u64) -> Self {
        assert!(mask != 0, "empty subset mask");
        SubsetId((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().map(|&i| NodeId(i))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.0.binary_search(&node.0).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bitmask form, when every member index fits in a machine word.
    pub fn mask(&self) -> Option<u64> {
        self.0.iter().try_fold(0u64, |m, &i| (i < 64).then(|| m | 1 << i))
    }

    pub fn is_superset(&self, other: &SubsetId) -> bool {
        other.0.iter().all(|i| self.0.binary_search(i).is_ok())
    }
}

/// The edges entering a subset from outside, with their total rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub edges: Vec<Edge>,
    pub rate_sum: f64,
}

/// A validated single-source network with the virtual source attached.
///
/// Immutable after construction and safe to share between engines and threads.
#[derive(Debug, Clone)]
pub struct AugmentedNetwork {
    base: NetworkSpec,
    labels: Vec<String>,
    index: HashMap<String, usize>,
    source: usize,
    lambda: f64,
    edges: Vec<Edge>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    total_rate: f64,
    fingerprint: u64,
    warnings: Vec<String>,
}

fn edge_key(from: &str, to: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(from.as_bytes());
    h.update([0u8]);
    h.update(to.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

impl AugmentedNetwork {
    /// Checks the single-source conditions, merges parallel edges and attaches
    /// the virtual source.
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        if spec.lambda.is_nan() || spec.lambda <= 0.0 {
            return Err(Error::NonPositiveLambda(spec.lambda));
        }
        let mut index = HashMap::with_capacity(spec.nodes.len());
        for (i, label) in spec.nodes.iter().enumerate() {
            if label == VIRTUAL_SOURCE_LABEL {
                return Err(Error::ReservedLabel(label.clone()));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateNode(label.clone()));
            }
        }
        let lookup = |l: &str| index.get(l).copied().ok_or_else(|| Error::UnknownNode(l.to_string()));
        let source = lookup(&spec.source)?;
        let n = spec.nodes.len();

        // Merge parallel edges, keeping first-appearance order.
        let mut merged: Vec<(usize, usize, f64, usize)> = Vec::new();
        let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &spec.edges {
            let (u, v) = (lookup(&e.from)?, lookup(&e.to)?);
            if u == v {
                return Err(Error::SelfLoop(e.from.clone()));
            }
            if e.rate.is_nan() || e.rate <= 0.0 {
                return Err(Error::NonPositiveRate { from: e.from.clone(), to: e.to.clone(), rate: e.rate });
            }
            match slot.get(&(u, v)) {
                Some(&k) => {
                    merged[k].2 += e.rate;
                    merged[k].3 += 1;
                }
                None => {
                    slot.insert((u, v), merged.len());
                    merged.push((u, v, e.rate, 1));
                }
            }
        }
        let mut warnings = Vec::new();
        for &(u, v, rate, count) in &merged {
            if count > 1 {
                warnings.push(format!(
                    "merged {count} parallel edges {} -> {} into one edge of rate {rate}",
                    spec.nodes[u], spec.nodes[v]
                ));
            }
        }

        let mut indeg = vec![0usize; n];
        for &(_, v, _, _) in &merged {
            indeg[v] += 1;
        }
        if let Some(&(u, _, _, _)) = merged.iter().find(|e| e.1 == source) {
            return Err(Error::SourceHasIncomingEdge {
                source_label: spec.source.clone(),
                from: spec.nodes[u].clone(),
            });
        }
        let roots: Vec<String> = (0..n).filter(|&v| indeg[v] == 0).map(|v| spec.nodes[v].clone()).collect();
        if roots.len() > 1 {
            return Err(Error::MultipleSources(roots));
        }

        let theta_prime = n;
        let mut edges = Vec::with_capacity(merged.len() + 1);
        edges.push(Edge {
            from: NodeId(theta_prime),
            to: NodeId(source),
            rate: spec.lambda,
            key: edge_key(VIRTUAL_SOURCE_LABEL, &spec.source),
        });
        for &(u, v, rate, _) in &merged {
            edges.push(Edge { from: NodeId(u), to: NodeId(v), rate, key: edge_key(&spec.nodes[u], &spec.nodes[v]) });
        }
        let mut incoming = vec![Vec::new(); n + 1];
        let mut outgoing = vec![Vec::new(); n + 1];
        for (k, e) in edges.iter().enumerate() {
            incoming[e.to.0].push(k);
            outgoing[e.from.0].push(k);
        }

        let mut seen = vec![false; n + 1];
        let mut queue = VecDeque::from([theta_prime]);
        seen[theta_prime] = true;
        while let Some(u) = queue.pop_front() {
            for &k in &outgoing[u] {
                let v = edges[k].to.0;
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(v) = (0..n).find(|&v| !seen[v]) {
            return Err(Error::UnreachableNode(spec.nodes[v].clone()));
        }

        let total_rate = edges.iter().map(|e| e.rate).sum();
        let mut h = Sha256::new();
        h.update(spec.lambda.to_le_bytes());
        h.update((source as u64).to_le_bytes());
        for l in &spec.nodes {
            h.update(l.as_bytes());
            h.update([0u8]);
        }
        for e in &edges {
            h.update((e.from.0 as u64).to_le_bytes());
            h.update((e.to.0 as u64).to_le_bytes());
            h.update(e.rate.to_le_bytes());
        }
        let fingerprint = u64::from_le_bytes(h.finalize()[..8].try_into().unwrap());

        Ok(AugmentedNetwork {
            base: spec.clone(),
            labels: spec.nodes.clone(),
            index,
            source,
            lambda: spec.lambda,
            edges,
            incoming,
            outgoing,
            total_rate,
            fingerprint,
            warnings,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(&NetworkSpec::parse(text)?)
    }

    pub fn base(&self) -> &NetworkSpec {
        &self.base
    }

    /// Number of user nodes (the virtual node excluded).
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn theta_prime(&self) -> NodeId {
        NodeId(self.labels.len())
    }

    pub fn source(&self) -> NodeId {
        NodeId(self.source)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Sum of all augmented edge rates; the rate of the merged event process.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Augmented edges; index 0 is the virtual edge into the source.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn incoming(&self, v: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.incoming[v.0].iter().map(move |&k| &self.edges[k])
    }

    pub fn outgoing(&self, v: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.outgoing[v.0].iter().map(move |&k| &self.edges[k])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: NodeId) -> &str {
        if v.0 == self.labels.len() {
            VIRTUAL_SOURCE_LABEL
        } else {
            &self.labels[v.0]
        }
    }

    pub fn node(&self, label: &str) -> Result<NodeId> {
        self.index.get(label).map(|&i| NodeId(i)).ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    pub fn user_nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.labels.len()).map(NodeId)
    }

    pub fn subset<S: AsRef<str>>(&self, labels: &[S]) -> Result<SubsetId> {
        let ids = labels.iter().map(|l| self.node(l.as_ref())).collect::<Result<Vec<_>>>()?;
        SubsetId::new(ids)
    }

    pub fn edge_label(&self, e: &Edge) -> String {
        format!("{}->{}", self.label(e.from), self.label(e.to))
    }

    /// Subset rendered as `{a,b,c}`.
    pub fn subset_label(&self, a: &SubsetId) -> String {
        if a.len() == 1 {
            return self.label(NodeId(a.indices()[0])).to_string();
        }
        let parts: Vec<&str> = a.members().map(|v| self.label(v)).collect();
        format!("{{{}}}", parts.join(","))
    }

    /// Edges entering `a` from outside and their rate sum.
    pub fn boundary(&self, a: &SubsetId) -> Result<Boundary> {
        if a.is_empty() {
            return Err(Error::EmptySubset);
        }
        if a.contains(self.theta_prime()) {
            return Err(Error::SubsetContainsVirtualSource);
        }
        let mut edges = Vec::new();
        for v in a.members() {
            if v.0 > self.labels.len() {
                return Err(Error::InvalidArgument(format!("node index {} out of range", v.0)));
            }
            edges.extend(self.incoming(v).filter(|e| !a.contains(e.from)).cloned());
        }
        let rate_sum = edges.iter().map(|e| e.rate).sum();
        Ok(Boundary { edges, rate_sum })
    }

    /// A copy of this network with one more edge, re-validated.
    pub fn with_edge(&self, from: &str, to: &str, rate: f64) -> Result<Self> {
        let mut spec = self.base.clone();
        spec.edges.push(EdgeSpec { from: from.into(), to: to.into(), rate });
        Self::new(&spec)
    }
}

impl fmt::Display for AugmentedNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} nodes, {} edges, source {}, lambda {}",
            self.labels.len(),
            self.edges.len() - 1,
            self.labels[self.source],
            self.lambda
        )
    }
}
