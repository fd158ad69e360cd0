//! Mean ages on chains of blocks joined at single cut vertices.
//!
//! When the underlying undirected graph is a sequence of biconnected blocks
//! `V_1, ..., V_n` with consecutive blocks sharing exactly one vertex `c_i`,
//! every path from the source into `V_{i+1}` passes through `c_i` and then
//! stays inside `V_{i+1}`. The shortest path to `v` in block `i + 1` therefore
//! splits into the shortest path to `c_i` plus an independent within-block
//! shortest path from `c_i` to `v`, and the means add:
//!
//! `E[age_v] = 1/lambda + W_1 + ... + W_i + w_{i+1}(v)`,
//!
//! where `w_j(v)` is the mean shortest path from block `j`'s entry vertex to
//! `v` inside the block, and `W_j = w_j(c_j)`. Each `w_j` is the subset
//! recursion on the block with the entry vertex as the root, so the total
//! work is linear in the number of blocks for bounded block size.
//!
//! Only single-vertex cuts are handled; anything else is reported as
//! [`Error::NotAChain`] and should go to the global exact engine.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exact::recurrence::RootedGraph;
use crate::exact::ExactLimits;
use crate::network::{AugmentedNetwork, NodeId};
use crate::par::{map_indexed, Exec};

/// Ordered blocks of a chain decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockChain {
    /// Node sets, in chain order. Each block lists its entry vertex first.
    pub blocks: Vec<Vec<NodeId>>,
    /// `cut_vertices[i]` is shared by `blocks[i]` and `blocks[i + 1]`.
    pub cut_vertices: Vec<NodeId>,
}

impl BlockChain {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn entry(&self, i: usize) -> NodeId {
        self.blocks[i][0]
    }
}

/// Mean age of every user node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAges {
    pub values: Vec<f64>,
    pub network_hash: u64,
}

impl NodeAges {
    pub fn get(&self, v: NodeId) -> f64 {
        self.values[v.0]
    }
}

/// Biconnected components of a connected undirected graph, as node lists,
/// together with the articulation-point flags. Iterative Hopcroft-Tarjan.
fn biconnected_components(adj: &[Vec<usize>], root: usize) -> (Vec<Vec<usize>>, Vec<bool>) {
    let n = adj.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_cut = vec![false; n];
    let mut blocks = Vec::new();
    let mut edge_stack: Vec<(usize, usize)> = Vec::new();
    let mut time = 0;
    // (node, parent, next neighbour position)
    let mut stack = vec![(root, usize::MAX, 0usize)];
    disc[root] = time;
    low[root] = time;
    time += 1;
    let mut root_children = 0;

    while let Some(&mut (v, parent, ref mut pos)) = stack.last_mut() {
        if *pos < adj[v].len() {
            let w = adj[v][*pos];
            *pos += 1;
            if disc[w] == usize::MAX {
                disc[w] = time;
                low[w] = time;
                time += 1;
                edge_stack.push((v, w));
                if v == root {
                    root_children += 1;
                }
                stack.push((w, v, 0));
            } else if w != parent && disc[w] < disc[v] {
                edge_stack.push((v, w));
                low[v] = low[v].min(disc[w]);
            }
        } else {
            stack.pop();
            if let Some(&(u, _, _)) = stack.last() {
                low[u] = low[u].min(low[v]);
                if low[v] >= disc[u] {
                    if u != root {
                        is_cut[u] = true;
                    }
                    let mut block = Vec::new();
                    while let Some((a, b)) = edge_stack.pop() {
                        for x in [a, b] {
                            if !block.contains(&x) {
                                block.push(x);
                            }
                        }
                        if (a, b) == (u, v) {
                            break;
                        }
                    }
                    blocks.push(block);
                }
            }
        }
    }
    if root_children > 1 {
        is_cut[root] = true;
    }
    (blocks, is_cut)
}

/// Finds the finest chain of blocks joined at single cut vertices, ordered
/// from the source's block outwards.
pub fn decompose_chain(net: &AugmentedNetwork) -> Result<BlockChain> {
    let n = net.node_count();
    let mut adj = vec![Vec::new(); n];
    for e in net.edges().iter().filter(|e| e.from != net.theta_prime()) {
        let (u, v) = (e.from.0, e.to.0);
        if !adj[u].contains(&v) {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let source = net.source().0;
    let (blocks, is_cut) = biconnected_components(&adj, source);
    if blocks.len() < 2 {
        return Err(Error::NotAChain("the network is a single block".into()));
    }
    if is_cut[source] {
        return Err(Error::NotAChain(format!("the source `{}` is a cut vertex", net.label(net.source()))));
    }
    let mut blocks_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for (b, nodes) in blocks.iter().enumerate() {
        for &v in nodes.iter().filter(|&&v| is_cut[v]) {
            blocks_of.entry(v).or_default().push(b);
        }
    }
    if let Some((&v, _)) = blocks_of.iter().find(|(_, bs)| bs.len() != 2) {
        return Err(Error::NotAChain(format!("cut vertex `{}` joins more than two blocks", net.label(NodeId(v)))));
    }

    let mut order = Vec::with_capacity(blocks.len());
    let mut cuts = Vec::new();
    let mut current = blocks.iter().position(|b| b.contains(&source)).unwrap();
    let mut entry = source;
    loop {
        let exits: Vec<usize> = blocks[current].iter().copied().filter(|&v| is_cut[v] && v != entry).collect();
        let mut nodes = vec![NodeId(entry)];
        nodes.extend(blocks[current].iter().filter(|&&v| v != entry).map(|&v| NodeId(v)));
        order.push(nodes);
        match exits.as_slice() {
            [] => break,
            [exit] => {
                let next = blocks_of[exit].iter().copied().find(|&b| b != current).unwrap();
                cuts.push(NodeId(*exit));
                current = next;
                entry = *exit;
            }
            _ => {
                return Err(Error::NotAChain(format!(
                    "block containing `{}` branches into several blocks",
                    net.label(NodeId(entry))
                )))
            }
        }
    }
    if order.len() != blocks.len() {
        return Err(Error::NotAChain("blocks do not form a single chain".into()));
    }
    Ok(BlockChain { blocks: order, cut_vertices: cuts })
}

/// Mean age of every node from a chain decomposition, with the default limits.
pub fn chain_average_ages(net: &AugmentedNetwork, chain: &BlockChain) -> Result<NodeAges> {
    chain_average_ages_with(net, chain, ExactLimits::default(), Exec::default())
}

pub fn chain_average_ages_with(
    net: &AugmentedNetwork,
    chain: &BlockChain,
    limits: ExactLimits,
    exec: Exec,
) -> Result<NodeAges> {
    for block in &chain.blocks {
        if block.len() - 1 > limits.max_nodes() {
            return Err(Error::NetworkTooLarge { nodes: block.len() - 1, limit: limits.max_nodes() });
        }
    }
    let within = map_indexed(exec, chain.blocks.len(), |i| block_means(net, &chain.blocks[i]));
    let within = within.into_iter().collect::<Result<Vec<_>>>()?;

    let mut values = vec![f64::NAN; net.node_count()];
    let mut offset = 1.0 / net.lambda();
    values[chain.entry(0).0] = offset;
    for (i, (block, means)) in chain.blocks.iter().zip(&within).enumerate() {
        for (v, m) in block[1..].iter().zip(means) {
            values[v.0] = offset + m;
        }
        if let Some(&exit) = chain.cut_vertices.get(i) {
            let k = block.iter().position(|&v| v == exit).unwrap();
            offset += means[k - 1];
        }
    }
    Ok(NodeAges { values, network_hash: net.fingerprint() })
}

/// Mean shortest path from the block's entry (first node) to each other node,
/// using only edges inside the block.
fn block_means(net: &AugmentedNetwork, block: &[NodeId]) -> Result<Vec<f64>> {
    let entry = block[0];
    let local: HashMap<NodeId, usize> = block[1..].iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let incoming = block[1..]
        .iter()
        .map(|&v| {
            net.incoming(v)
                .filter_map(|e| {
                    if e.from == entry {
                        Some((None, e.rate))
                    } else {
                        local.get(&e.from).map(|&j| (Some(j), e.rate))
                    }
                })
                .collect()
        })
        .collect();
    let graph = RootedGraph::new(incoming, None);
    let table = graph.mean_table(Exec::Sequential);
    let means: Vec<f64> = (0..graph.node_count()).map(|i| table[1 << i]).collect();
    if let Some(i) = means.iter().position(|m| !m.is_finite()) {
        return Err(Error::NotAChain(format!(
            "`{}` is not reachable from `{}` inside its block",
            net.label(block[i + 1]),
            net.label(entry)
        )));
    }
    Ok(means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology;

    fn labels(net: &AugmentedNetwork, nodes: &[NodeId]) -> Vec<String> {
        let mut v: Vec<String> = nodes.iter().map(|&n| net.label(n).to_string()).collect();
        v.sort();
        v
    }

    #[test]
    fn two_triangles_split_at_middle() {
        let net = topology::triangle_cascade(1.0, &[(1.0, 1.0, 1.0); 2]).unwrap();
        let chain = decompose_chain(&net).unwrap();
        assert_eq!(chain.len(), 2);
        assert_eq!(labels(&net, &chain.blocks[0]), vec!["v0", "v1", "v2"]);
        assert_eq!(labels(&net, &chain.blocks[1]), vec!["v2", "v3", "v4"]);
        assert_eq!(chain.cut_vertices, vec![net.node("v2").unwrap()]);
        let ages = chain_average_ages(&net, &chain).unwrap();
        assert!((ages.get(net.node("v4").unwrap()) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_triangle_is_not_a_chain() {
        let net = topology::triangle(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(decompose_chain(&net), Err(Error::NotAChain(_))));
    }

    #[test]
    fn serial_cascade_blocks_are_edges() {
        let net = topology::serial_cascade(1.0, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let chain = decompose_chain(&net).unwrap();
        assert_eq!(chain.len(), 4);
        let cuts: Vec<&str> = chain.cut_vertices.iter().map(|&v| net.label(v)).collect();
        assert_eq!(cuts, vec!["v1", "v2", "v3"]);
        let ages = chain_average_ages(&net, &chain).unwrap();
        let expect = 1.0 + 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        assert!((ages.get(net.node("v4").unwrap()) - expect).abs() < 1e-12);
    }

    #[test]
    fn branching_is_rejected() {
        let spec = crate::network::NetworkSpec::parse(
            r#"{"lambda":1,"source":"s","edges":[
                {"from":"s","to":"a","rate":1},{"from":"a","to":"b","rate":1},{"from":"a","to":"c","rate":1}]}"#,
        )
        .unwrap();
        let net = AugmentedNetwork::new(&spec).unwrap();
        assert!(matches!(decompose_chain(&net), Err(Error::NotAChain(_))));
        let star = crate::network::NetworkSpec::parse(
            r#"{"lambda":1,"source":"s","edges":[{"from":"s","to":"a","rate":1},{"from":"s","to":"b","rate":1}]}"#,
        )
        .unwrap();
        let net = AugmentedNetwork::new(&star).unwrap();
        assert!(matches!(decompose_chain(&net), Err(Error::NotAChain(m)) if m.contains("source")));
    }

    #[test]
    fn back_edges_inside_blocks() {
        // Second block has an edge pointing back at its entry vertex.
        let spec = crate::network::NetworkSpec::parse(
            r#"{"lambda":2,"source":"s","edges":[
                {"from":"s","to":"c","rate":1.5},
                {"from":"c","to":"x","rate":1},{"from":"x","to":"y","rate":2},{"from":"c","to":"y","rate":0.5},
                {"from":"y","to":"c","rate":3},{"from":"y","to":"x","rate":0.7}]}"#,
        )
        .unwrap();
        let net = AugmentedNetwork::new(&spec).unwrap();
        let chain = decompose_chain(&net).unwrap();
        assert_eq!(chain.len(), 2);
        let ages = chain_average_ages(&net, &chain).unwrap();
        let exact = crate::exact::average_age_all(&net).unwrap();
        for v in net.user_nodes() {
            assert!((ages.get(v) - exact.singleton(v)).abs() < 1e-12);
        }
    }
}
