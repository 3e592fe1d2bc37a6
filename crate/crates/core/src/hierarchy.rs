//! Hierarchy construction from raw element data: minimum spanning forests,
//! single-linkage clustering with a dendrogram, and the three-stage layered
//! topology procedure (partition into layers, per-layer trees, upward links).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Tree, TreeNode};

/// Undirected weighted edge, stored with `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub weight: f64,
}

impl Edge {
    pub fn new(a: impl Into<String>, b: impl Into<String>, weight: f64) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            Self { a, b, weight }
        } else {
            Self { a: b, b: a, weight }
        }
    }

    fn order(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| self.a.cmp(&other.a))
            .then_with(|| self.b.cmp(&other.b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    nodes: Vec<String>,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(nodes: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let known: BTreeSet<&str> = nodes.iter().map(String::as_str).collect();
        if known.len() != nodes.len() {
            return Err(Error::Argument("duplicate node id in graph".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            if e.a == e.b {
                return Err(Error::Argument(format!("self-loop on `{}`", e.a)));
            }
            if !known.contains(e.a.as_str()) || !known.contains(e.b.as_str()) {
                return Err(Error::Argument(format!(
                    "edge ({}, {}) references an unknown node",
                    e.a, e.b
                )));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(Error::Argument(format!(
                    "edge ({}, {}) has weight {}, expected a nonnegative number",
                    e.a, e.b, e.weight
                )));
            }
            if !seen.insert((e.a.as_str(), e.b.as_str())) {
                return Err(Error::Argument(format!(
                    "more than one edge between `{}` and `{}`",
                    e.a, e.b
                )));
            }
        }
        Ok(Self { nodes, edges })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Subgraph on `keep`, preserving node order of `self`.
    pub fn induced(&self, keep: &[String]) -> Self {
        let set: BTreeSet<&str> = keep.iter().map(String::as_str).collect();
        Self {
            nodes: self
                .nodes
                .iter()
                .filter(|n| set.contains(n.as_str()))
                .cloned()
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| set.contains(e.a.as_str()) && set.contains(e.b.as_str()))
                .cloned()
                .collect(),
        }
    }

    fn sorted_edges(&self) -> Vec<&Edge> {
        let mut edges: Vec<&Edge> = self.edges.iter().collect();
        edges.sort_by(|x, y| x.order(y));
        edges
    }

    fn index(&self) -> BTreeMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect()
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns the new root, or None when already joined.
    fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo] = hi;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        Some(hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningForest {
    pub edges: Vec<Edge>,
    pub total_weight: f64,
}

/// Kruskal's algorithm. Edges are considered by (weight, endpoint ids), so
/// the forest is deterministic under ties. One tree per connected component.
pub fn minimum_spanning_tree(g: &WeightedGraph) -> SpanningForest {
    let index = g.index();
    let mut sets = DisjointSets::new(g.nodes.len());
    let mut edges = Vec::new();
    for e in g.sorted_edges() {
        if sets.union(index[e.a.as_str()], index[e.b.as_str()]).is_some() {
            edges.push(e.clone());
        }
    }
    let total_weight = edges.iter().map(|e| e.weight).sum();
    SpanningForest {
        edges,
        total_weight,
    }
}

/// One agglomeration step. Cluster ids below `leaves.len()` are singletons;
/// merge `i` creates cluster `leaves.len() + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// `f64::INFINITY` when the two clusters share no edge.
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Tree skeleton for a morphological model: leaves keep their ids,
    /// merge `i` becomes internal node `{prefix}{i}`.
    pub fn to_tree(&self, prefix: &str) -> Tree {
        let n = self.leaves.len();
        let name = |c: usize| {
            if c < n {
                self.leaves[c].clone()
            } else {
                format!("{prefix}{}", c - n)
            }
        };
        let mut nodes: Vec<TreeNode> = Vec::new();
        for (i, m) in self.merges.iter().enumerate().rev() {
            nodes.push(TreeNode {
                id: format!("{prefix}{i}"),
                children: vec![name(m.left), name(m.right)],
            });
        }
        nodes.extend(self.leaves.iter().map(|l| TreeNode::leaf(l.clone())));
        let root = match self.merges.len() {
            0 => self.leaves.first().cloned().unwrap_or_default(),
            k => format!("{prefix}{}", k - 1),
        };
        Tree::new(root, nodes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Member ids sorted, clusters ordered by their smallest member.
    pub clusters: Vec<Vec<String>>,
    /// Full merge history down to a single cluster.
    pub dendrogram: Dendrogram,
}

/// Single-linkage agglomeration. Missing edges count as infinitely far;
/// clusters with no connecting edge are merged last, smallest member ids first.
pub fn agglomerative_clustering(g: &WeightedGraph, k: usize) -> Result<Clustering> {
    let n = g.nodes.len();
    if k == 0 || k > n {
        return Err(Error::Argument(format!(
            "cluster count {k} must be between 1 and the node count {n}"
        )));
    }
    let index = g.index();
    let mut sets = DisjointSets::new(n);
    // current dendrogram cluster id of each union-find root
    let mut label: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut merges = Vec::new();
    let mut snapshot = None;

    let mut join = |sets: &mut DisjointSets, a: usize, b: usize, d: f64, merges: &mut Vec<Merge>| {
        let (ra, rb) = (sets.find(a), sets.find(b));
        let (la, lb) = (label[ra], label[rb]);
        let s = size[ra] + size[rb];
        let root = sets.union(ra, rb).expect("distinct clusters");
        label[root] = n + merges.len();
        size[root] = s;
        merges.push(Merge {
            left: la.min(lb),
            right: la.max(lb),
            distance: d,
            size: s,
        });
    };

    let take_snapshot = |sets: &mut DisjointSets| -> Vec<Vec<String>> {
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for i in 0..n {
            groups.entry(sets.find(i)).or_default().push(g.nodes[i].clone());
        }
        let mut clusters: Vec<Vec<String>> = groups
            .into_values()
            .map(|mut v| {
                v.sort();
                v
            })
            .collect();
        clusters.sort();
        clusters
    };

    if k == n {
        snapshot = Some(take_snapshot(&mut sets));
    }
    for e in g.sorted_edges() {
        let (a, b) = (index[e.a.as_str()], index[e.b.as_str()]);
        if sets.find(a) == sets.find(b) {
            continue;
        }
        join(&mut sets, a, b, e.weight, &mut merges);
        if merges.len() == n - k {
            snapshot = Some(take_snapshot(&mut sets));
        }
    }
    while merges.len() + 1 < n {
        let mut reps: Vec<(String, usize)> = take_snapshot(&mut sets)
            .into_iter()
            .map(|c| {
                let first = c[0].clone();
                let i = index[first.as_str()];
                (first, i)
            })
            .collect();
        reps.sort();
        join(&mut sets, reps[0].1, reps[1].1, f64::INFINITY, &mut merges);
        if merges.len() == n - k {
            snapshot = Some(take_snapshot(&mut sets));
        }
    }
    Ok(Clustering {
        clusters: snapshot.expect("k within 1..=n"),
        dendrogram: Dendrogram {
            leaves: g.nodes.clone(),
            merges,
        },
    })
}

/// Link from a node to a node of the layer directly above it.
#[derive(Debug, Clone, PartialEq)]
pub struct InterEdge {
    pub lower: String,
    pub upper: String,
    /// None when no edge to the upper layer exists (infinite weight).
    pub weight: Option<f64>,
}

impl InterEdge {
    pub fn is_fallback(&self) -> bool {
        self.weight.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredTopology {
    /// Layer 0 is the bottom layer.
    pub layers: Vec<Vec<String>>,
    pub intra_edges: Vec<Vec<Edge>>,
    /// `inter_edges[i]` links layer i to layer i + 1.
    pub inter_edges: Vec<Vec<InterEdge>>,
}

/// Three-stage layered design:
/// 1. sort nodes by (score, id) and cut into `layer_count` equal quantile
///    slices, higher scores going to higher layers;
/// 2. inside each layer keep the minimum spanning forest;
/// 3. link every non-top node to its lightest neighbour in the next layer up,
///    or to that layer's smallest id with an infinite (flagged) weight.
pub fn design_multilayer(
    g: &WeightedGraph,
    node_scores: &BTreeMap<String, f64>,
    layer_count: usize,
) -> Result<LayeredTopology> {
    let n = g.nodes.len();
    if layer_count == 0 || layer_count > n {
        return Err(Error::Argument(format!(
            "layer count {layer_count} must be between 1 and the node count {n}"
        )));
    }
    let mut ranked: Vec<(f64, &String)> = Vec::with_capacity(n);
    for node in &g.nodes {
        let score = node_scores
            .get(node)
            .copied()
            .ok_or_else(|| Error::Argument(format!("node `{node}` has no score")))?;
        ranked.push((score, node));
    }
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(y.1)));

    let layers: Vec<Vec<String>> = (0..layer_count)
        .map(|i| {
            let (lo, hi) = (i * n / layer_count, (i + 1) * n / layer_count);
            let mut layer: Vec<String> = ranked[lo..hi].iter().map(|(_, id)| (*id).clone()).collect();
            layer.sort();
            layer
        })
        .collect();

    let intra_edges = layers
        .iter()
        .map(|layer| minimum_spanning_tree(&g.induced(layer)).edges)
        .collect();

    let mut inter_edges = Vec::with_capacity(layer_count.saturating_sub(1));
    for pair in layers.windows(2) {
        let (lower, upper) = (&pair[0], &pair[1]);
        let upper_set: BTreeSet<&str> = upper.iter().map(String::as_str).collect();
        let links = lower
            .iter()
            .map(|node| {
                let best = g
                    .edges
                    .iter()
                    .filter_map(|e| {
                        let other = if &e.a == node {
                            &e.b
                        } else if &e.b == node {
                            &e.a
                        } else {
                            return None;
                        };
                        upper_set.contains(other.as_str()).then_some((e.weight, other))
                    })
                    .min_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(y.1)));
                match best {
                    Some((w, other)) => InterEdge {
                        lower: node.clone(),
                        upper: other.clone(),
                        weight: Some(w),
                    },
                    None => InterEdge {
                        lower: node.clone(),
                        upper: upper[0].clone(),
                        weight: None,
                    },
                }
            })
            .collect();
        inter_edges.push(links);
    }
    Ok(LayeredTopology {
        layers,
        intra_edges,
        inter_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nodes: &[&str], edges: &[(&str, &str, f64)]) -> WeightedGraph {
        WeightedGraph::new(
            nodes.iter().map(|s| s.to_string()).collect(),
            edges.iter().map(|&(a, b, w)| Edge::new(a, b, w)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn graph_validation() {
        let nodes = vec!["a".to_string(), "b".to_string()];
        assert!(WeightedGraph::new(nodes.clone(), vec![Edge::new("a", "a", 1.0)]).is_err());
        assert!(WeightedGraph::new(nodes.clone(), vec![Edge::new("a", "b", -1.0)]).is_err());
        assert!(WeightedGraph::new(
            nodes.clone(),
            vec![Edge::new("a", "b", 1.0), Edge::new("b", "a", 2.0)]
        )
        .is_err());
        assert!(WeightedGraph::new(nodes, vec![Edge::new("a", "z", 1.0)]).is_err());
    }

    #[test]
    fn triangle_mst() {
        let g = graph(&["1", "2", "3"], &[("1", "2", 1.0), ("1", "3", 2.0), ("2", "3", 3.0)]);
        let f = minimum_spanning_tree(&g);
        assert_eq!(f.edges, vec![Edge::new("1", "2", 1.0), Edge::new("1", "3", 2.0)]);
        assert_eq!(f.total_weight, 3.0);
    }

    #[test]
    fn disconnected_forest_and_empty_graph() {
        let g = graph(&["a", "b", "c", "d"], &[("a", "b", 1.0), ("c", "d", 2.0)]);
        assert_eq!(minimum_spanning_tree(&g).edges.len(), 2);
        let empty = graph(&[], &[]);
        assert!(minimum_spanning_tree(&empty).edges.is_empty());
    }

    #[test]
    fn clustering_line_points() {
        let pos = [("p0", 0.0), ("p1", 1.0), ("p10", 10.0), ("p11", 11.0)];
        let mut edges = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push((pos[i].0, pos[j].0, f64::abs(pos[i].1 - pos[j].1)));
            }
        }
        let g = graph(&["p0", "p1", "p10", "p11"], &edges);
        let c = agglomerative_clustering(&g, 2).unwrap();
        assert_eq!(c.clusters, vec![vec!["p0", "p1"], vec!["p10", "p11"]]);
        assert_eq!(c.dendrogram.merges.len(), 3);
        assert_eq!(c.dendrogram.merges[2].distance, 9.0);

        let singles = agglomerative_clustering(&g, 4).unwrap();
        assert_eq!(singles.clusters.len(), 4);
        assert!(agglomerative_clustering(&g, 5).is_err());
        assert!(agglomerative_clustering(&g, 0).is_err());
    }

    #[test]
    fn dendrogram_tree_skeleton() {
        let g = graph(&["a", "b", "c"], &[("a", "b", 1.0)]);
        let c = agglomerative_clustering(&g, 1).unwrap();
        assert_eq!(c.dendrogram.merges[1].distance, f64::INFINITY);
        let tree = c.dendrogram.to_tree("h");
        assert_eq!(tree.root(), "h1");
        assert_eq!(tree.children("h1"), ["c", "h0"]);
        let mut leaves = tree.leaves();
        leaves.sort();
        assert_eq!(leaves, ["a", "b", "c"]);
    }

    #[test]
    fn multilayer_quantile_split() {
        let g = graph(
            &["n1", "n2", "n3", "n4"],
            &[("n1", "n2", 1.0), ("n1", "n3", 4.0), ("n2", "n4", 2.0), ("n3", "n4", 1.0)],
        );
        let scores: BTreeMap<String, f64> = [("n1", 1.0), ("n2", 1.0), ("n3", 2.0), ("n4", 2.0)]
            .iter()
            .map(|&(k, v)| (k.to_string(), v))
            .collect();
        let t = design_multilayer(&g, &scores, 2).unwrap();
        assert_eq!(t.layers, vec![vec!["n1", "n2"], vec!["n3", "n4"]]);
        assert_eq!(t.inter_edges[0][0].upper, "n3");
        assert_eq!(t.inter_edges[0][1].upper, "n4");

        let one = design_multilayer(&g, &scores, 1).unwrap();
        assert_eq!(one.intra_edges[0], minimum_spanning_tree(&g).edges);
        assert!(one.inter_edges.is_empty());
        assert!(design_multilayer(&g, &scores, 5).is_err());
    }

    #[test]
    fn multilayer_fallback_link() {
        let g = graph(&["a", "b", "c"], &[("b", "c", 1.0)]);
        let scores: BTreeMap<String, f64> =
            [("a", 0.0), ("b", 1.0), ("c", 2.0)].iter().map(|&(k, v)| (k.to_string(), v)).collect();
        let t = design_multilayer(&g, &scores, 3).unwrap();
        assert!(t.inter_edges[0][0].is_fallback());
        assert_eq!(t.inter_edges[0][0].upper, "b");
        assert_eq!(t.inter_edges[1][0].weight, Some(1.0));
    }
}
