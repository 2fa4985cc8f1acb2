//! Directed graph representation and the structural algorithms run over the
//! follower-followee and activity networks.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::corpus::UserId;
use crate::error::{Error, Result};

/// Dense-index directed simple graph. Node `i` corresponds to `ids()[i]`.
///
/// Adjacency lists are sorted and duplicate free; self loops are dropped at
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    ids: Vec<UserId>,
    lookup: HashMap<UserId, usize>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl DirectedGraph {
    pub fn new(ids: Vec<UserId>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = ids.len();
        let mut out_adj = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} nodes");
            if u != v {
                out_adj[u].push(v);
            }
        }
        let mut in_adj = vec![Vec::new(); n];
        let mut edge_count = 0;
        for (u, outs) in out_adj.iter_mut().enumerate() {
            outs.sort_unstable();
            outs.dedup();
            edge_count += outs.len();
            for &v in outs.iter() {
                in_adj[v].push(u);
            }
        }
        // in lists are filled in ascending source order, so already sorted
        let lookup = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        DirectedGraph {
            ids,
            lookup,
            out_adj,
            in_adj,
            edge_count,
        }
    }

    /// Graph on `n` anonymous nodes labelled `"0"`, `"1"`, ...
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let ids = (0..n).map(|i| UserId::new(i.to_string())).collect();
        Self::new(ids, edges)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn ids(&self) -> &[UserId] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> &UserId {
        &self.ids[node]
    }

    pub fn index_of(&self, id: &UserId) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn out_neighbors(&self, node: usize) -> &[usize] {
        &self.out_adj[node]
    }

    pub fn in_neighbors(&self, node: usize) -> &[usize] {
        &self.in_adj[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_adj[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_adj[node].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_adj[u].binary_search(&v).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, outs)| outs.iter().map(move |&v| (u, v)))
    }

    /// Sorted reciprocated neighbours of `node` (v with both node→v and v→node).
    pub fn reciprocated_neighbors(&self, node: usize) -> Vec<usize> {
        sorted_intersection(&self.out_adj[node], &self.in_adj[node])
    }
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Components of the graph with edge direction ignored. Each component is
/// sorted ascending; components are ordered by their smallest node.
pub fn weakly_connected_components(g: &DirectedGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for &v in g.out_neighbors(u).iter().chain(g.in_neighbors(u)) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeDirection {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    pub counts: BTreeMap<usize, usize>,
    pub direction: DegreeDirection,
}

impl DegreeDistribution {
    pub fn node_count(&self) -> usize {
        self.counts.values().sum()
    }

    /// One degree value per node, ascending.
    pub fn samples(&self) -> Vec<f64> {
        self.counts
            .iter()
            .flat_map(|(d, c)| std::iter::repeat_n(*d as f64, *c))
            .collect()
    }
}

pub fn degree_distribution(g: &DirectedGraph, direction: DegreeDirection) -> DegreeDistribution {
    let mut counts = BTreeMap::new();
    for u in 0..g.node_count() {
        let d = match direction {
            DegreeDirection::In => g.in_degree(u),
            DegreeDirection::Out => g.out_degree(u),
        };
        *counts.entry(d).or_insert(0) += 1;
    }
    DegreeDistribution { counts, direction }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: f64,
    pub n_tail: usize,
}

/// Lower-bound correction used in the continuous MLE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailCorrection {
    /// Integer data: the tail is measured from `x_min - 0.5`.
    HalfOffset,
    /// Continuous data: the tail is measured from `x_min`.
    None,
}

/// Continuous maximum-likelihood power-law exponent over samples `>= x_min`.
pub fn fit_power_law_samples(
    samples: &[f64],
    x_min: f64,
    correction: TailCorrection,
) -> Result<PowerLawFit> {
    if !(x_min > 0.0) {
        return Err(Error::InsufficientData(format!("x_min must be positive, got {x_min}")));
    }
    let tail: Vec<f64> = samples.iter().copied().filter(|d| *d >= x_min).collect();
    if tail.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least 2 samples >= {x_min}, found {}",
            tail.len()
        )));
    }
    if tail.iter().all(|d| *d == tail[0]) {
        return Err(Error::InsufficientData(
            "power-law tail has no variation".into(),
        ));
    }
    let lower = match correction {
        TailCorrection::HalfOffset => x_min - 0.5,
        TailCorrection::None => x_min,
    };
    let log_sum: f64 = tail.iter().map(|d| (d / lower).ln()).sum();
    let alpha = 1.0 + tail.len() as f64 / log_sum;
    if !alpha.is_finite() {
        return Err(Error::InsufficientData("power-law exponent diverged".into()));
    }
    Ok(PowerLawFit {
        alpha,
        x_min,
        n_tail: tail.len(),
    })
}

/// Power-law exponent of a degree distribution (integer data, half offset).
pub fn fit_power_law(dist: &DegreeDistribution, x_min: usize) -> Result<PowerLawFit> {
    if x_min == 0 {
        return Err(Error::InsufficientData("x_min must be positive".into()));
    }
    fit_power_law_samples(&dist.samples(), x_min as f64, TailCorrection::HalfOffset)
}

/// Global reciprocity: fraction of directed edges whose reverse also exists.
pub fn reciprocity(g: &DirectedGraph) -> Result<f64> {
    if g.edge_count() == 0 {
        return Err(Error::InsufficientData("reciprocity of a graph with no edges".into()));
    }
    let mutual = g.edges().filter(|&(u, v)| g.has_edge(v, u)).count();
    Ok(mutual as f64 / g.edge_count() as f64)
}

/// Fraction of the edges incident to `node` (in and out) that are
/// reciprocated; 0 for an isolated node.
pub fn ego_reciprocity(g: &DirectedGraph, node: usize) -> f64 {
    let incident = g.in_degree(node) + g.out_degree(node);
    if incident == 0 {
        return 0.0;
    }
    // each reciprocated neighbour accounts for one in and one out edge
    2.0 * g.reciprocated_neighbors(node).len() as f64 / incident as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusteringMode {
    Reciprocated,
}

/// Local clustering coefficient on the undirected graph formed by the
/// reciprocated edges. Nodes with fewer than two reciprocated neighbours
/// get 0.
pub fn local_clustering(g: &DirectedGraph, mode: ClusteringMode) -> Vec<f64> {
    let ClusteringMode::Reciprocated = mode;
    let nbrs: Vec<Vec<usize>> = (0..g.node_count())
        .map(|u| g.reciprocated_neighbors(u))
        .collect();
    nbrs.iter()
        .map(|ns| {
            let k = ns.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (i, &a) in ns.iter().enumerate() {
                // count each unordered pair once via the later neighbour
                links += sorted_intersection(&nbrs[a], &ns[i + 1..]).len();
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Follow out-edges: hop-h followees.
    Forward,
    /// Follow in-edges: hop-h followers.
    Reverse,
    /// Ignore edge direction.
    Undirected,
}

/// Hop distances from a source, bounded by `max_depth`. Nodes are stored in
/// BFS order so each hop level is a contiguous slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    source: usize,
    max_depth: usize,
    order: Vec<usize>,
    level_starts: Vec<usize>,
}

impl DistanceMap {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Nodes at exactly `hop` hops.
    pub fn at_hop(&self, hop: usize) -> &[usize] {
        if hop + 1 >= self.level_starts.len() {
            return &[];
        }
        &self.order[self.level_starts[hop]..self.level_starts[hop + 1]]
    }

    /// `(node, hop)` pairs in BFS order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.level_starts.len().saturating_sub(1))
            .flat_map(move |h| self.at_hop(h).iter().map(move |&v| (v, h)))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn to_map(&self) -> HashMap<usize, usize> {
        self.iter().collect()
    }
}

/// Reusable BFS scratch space for many queries over one graph.
#[derive(Debug, Clone)]
pub struct BfsWorkspace {
    stamp: Vec<u32>,
    dist: Vec<u32>,
    epoch: u32,
}

impl BfsWorkspace {
    pub fn new(node_count: usize) -> Self {
        BfsWorkspace {
            stamp: vec![0; node_count],
            dist: vec![0; node_count],
            epoch: 0,
        }
    }

    pub fn run(
        &mut self,
        g: &DirectedGraph,
        source: usize,
        max_depth: usize,
        orientation: Orientation,
    ) -> DistanceMap {
        assert_eq!(self.stamp.len(), g.node_count(), "workspace sized for another graph");
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.stamp[source] = epoch;
        self.dist[source] = 0;
        let mut order = vec![source];
        let mut level_starts = vec![0, 1];
        let mut head = 0;
        for depth in 1..=max_depth {
            let tail = order.len();
            if head == tail {
                break;
            }
            while head < tail {
                let u = order[head];
                head += 1;
                let (a, b): (&[usize], &[usize]) = match orientation {
                    Orientation::Forward => (g.out_neighbors(u), &[]),
                    Orientation::Reverse => (g.in_neighbors(u), &[]),
                    Orientation::Undirected => (g.out_neighbors(u), g.in_neighbors(u)),
                };
                for &v in a.iter().chain(b) {
                    if self.stamp[v] != epoch {
                        self.stamp[v] = epoch;
                        self.dist[v] = depth as u32;
                        order.push(v);
                    }
                }
            }
            if order.len() == tail {
                break;
            }
            level_starts.push(order.len());
        }
        DistanceMap {
            source,
            max_depth,
            order,
            level_starts,
        }
    }

    /// Distance of `node` in the most recent run, if reached.
    pub fn distance(&self, node: usize) -> Option<usize> {
        (self.stamp[node] == self.epoch && self.epoch != 0).then(|| self.dist[node] as usize)
    }
}

pub fn bfs_distances(
    g: &DirectedGraph,
    source: usize,
    max_depth: usize,
    orientation: Orientation,
) -> Result<DistanceMap> {
    if source >= g.node_count() {
        return Err(Error::UnknownNode(source.to_string()));
    }
    Ok(BfsWorkspace::new(g.node_count()).run(g, source, max_depth, orientation))
}
