//! Finite metric trees with exact integer edge lengths.
//!
//! A [`MetricTree`] is rooted at vertex 0 internally and answers distance,
//! geodesic and projection queries through a binary-lifting LCA table. The
//! table is built once at construction; trees are immutable afterwards.
//!
//! A [`TreeLine`] is a geodesically parametrized line segment inside a host
//! tree: `param(t)` for `t` in `[-radius, radius]`, with consecutive images at
//! distance `speed`.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("unknown vertex {vertex} (tree has {len} vertices)")]
    UnknownVertex { vertex: Vertex, len: usize },
    #[error("{edges} edges cannot form a tree on {vertices} vertices")]
    EdgeCount { vertices: usize, edges: usize },
    #[error("edge ({0}, {1}) closes a cycle")]
    Cycle(Vertex, Vertex),
    #[error("edge list is disconnected")]
    Disconnected,
    #[error("edge ({0}, {1}) has zero length")]
    ZeroLength(Vertex, Vertex),
    #[error("vertex subset is empty")]
    EmptySubset,
    #[error("vertex subset is not connected")]
    DisconnectedSubset,
    #[error("line repeats vertex {vertex} at parameter {t}")]
    NonInjectiveLine { vertex: Vertex, t: i64 },
    #[error("line is not geodesic: d(param({s}), param({t})) = {actual}, expected {expected}")]
    NonGeodesicLine {
        s: i64,
        t: i64,
        actual: u64,
        expected: u64,
    },
    #[error("line has {got} parameters, expected {expected}")]
    LineLength { got: usize, expected: usize },
    #[error("invalid tree descriptor: {0}")]
    BadSpec(String),
}

/// One edge of an explicit edge list; the length defaults to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeSpec {
    Unit(Vertex, Vertex),
    Weighted(Vertex, Vertex, u64),
}

impl EdgeSpec {
    pub fn endpoints(&self) -> (Vertex, Vertex, u64) {
        match *self {
            EdgeSpec::Unit(a, b) => (a, b, 1),
            EdgeSpec::Weighted(a, b, w) => (a, b, w),
        }
    }
}

/// Shape descriptor accepted by [`MetricTree::build`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeSpec {
    /// Path on `vertices` vertices numbered along the path.
    Path { vertices: usize },
    /// Ball of the given radius in the `valence`-regular tree, numbered
    /// breadth-first from the center (vertex 0). The numbering of a smaller
    /// ball is a prefix of the numbering of a larger one.
    Regular { valence: usize, radius: usize },
    /// Explicit edge list. Without `vertices`, the vertex count is one more
    /// than the largest id mentioned (a single vertex for an empty list).
    Edges {
        #[serde(default)]
        vertices: Option<usize>,
        edges: Vec<EdgeSpec>,
    },
}

impl TreeSpec {
    pub fn path(vertices: usize) -> Self {
        TreeSpec::Path { vertices }
    }

    pub fn regular(valence: usize, radius: usize) -> Self {
        TreeSpec::Regular { valence, radius }
    }

    pub fn edges(edges: &[(Vertex, Vertex)]) -> Self {
        TreeSpec::Edges {
            vertices: None,
            edges: edges.iter().map(|&(a, b)| EdgeSpec::Unit(a, b)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetricTree {
    edges: Vec<(Vertex, Vertex, u64)>,
    adj_start: Vec<usize>,
    adj: Vec<(Vertex, u64)>,
    parent: Vec<Vertex>,
    hops: Vec<u32>,
    root_dist: Vec<u64>,
    // up[k][v] = 2^k-th ancestor of v (root maps to itself)
    up: Vec<Vec<Vertex>>,
}

impl MetricTree {
    pub fn build(spec: &TreeSpec) -> Result<Self, TreeError> {
        match spec {
            TreeSpec::Path { vertices } => {
                let edges: Vec<_> = (1..*vertices).map(|v| (v - 1, v, 1)).collect();
                Self::from_edges(*vertices, &edges)
            }
            TreeSpec::Regular { valence, radius } => {
                if *valence == 0 && *radius > 0 {
                    return Err(TreeError::BadSpec(
                        "valence 0 admits only radius 0".into(),
                    ));
                }
                Self::from_edges_unvalidated(regular_ball_edges(*valence, *radius))
            }
            TreeSpec::Edges { vertices, edges } => {
                let list: Vec<_> = edges.iter().map(EdgeSpec::endpoints).collect();
                let implied = list.iter().map(|&(a, b, _)| a.max(b) + 1).max().unwrap_or(1);
                let n = match vertices {
                    Some(n) if *n < implied && !list.is_empty() => {
                        return Err(TreeError::BadSpec(format!(
                            "edge list mentions vertex {} but only {n} vertices declared",
                            implied - 1
                        )))
                    }
                    Some(n) => *n,
                    None => implied,
                };
                Self::from_edges(n, &list)
            }
        }
    }

    /// The empty tree (no vertices).
    pub fn empty() -> Self {
        Self {
            edges: Vec::new(),
            adj_start: vec![0],
            adj: Vec::new(),
            parent: Vec::new(),
            hops: Vec::new(),
            root_dist: Vec::new(),
            up: Vec::new(),
        }
    }

    /// Builds a tree on `n` vertices from an edge list, rejecting cycles,
    /// disconnected lists and zero lengths.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex, u64)]) -> Result<Self, TreeError> {
        if n == 0 {
            return if edges.is_empty() {
                Ok(Self::empty())
            } else {
                Err(TreeError::EdgeCount { vertices: 0, edges: edges.len() })
            };
        }
        for &(a, b, w) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(TreeError::UnknownVertex { vertex: v, len: n });
                }
            }
            if a == b {
                return Err(TreeError::Cycle(a, b));
            }
            if w == 0 {
                return Err(TreeError::ZeroLength(a, b));
            }
        }
        // Cycle detection first so that a cyclic list is reported as such
        // even when the edge count is also off.
        let mut uf = crate::union_find::UnionFind::new(n);
        for &(a, b, _) in edges {
            if !uf.union(a, b) {
                return Err(TreeError::Cycle(a, b));
            }
        }
        if edges.len() + 1 != n {
            return Err(TreeError::Disconnected);
        }
        Self::from_edges_unvalidated((n, edges.to_vec()))
    }

    fn from_edges_unvalidated(
        (n, edges): (usize, Vec<(Vertex, Vertex, u64)>),
    ) -> Result<Self, TreeError> {
        if n == 0 {
            return Ok(Self::empty());
        }
        let mut degree = vec![0usize; n];
        for &(a, b, _) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut adj_start = vec![0usize; n + 1];
        for v in 0..n {
            adj_start[v + 1] = adj_start[v] + degree[v];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![(0, 0); adj_start[n]];
        for &(a, b, w) in &edges {
            adj[fill[a]] = (b, w);
            fill[a] += 1;
            adj[fill[b]] = (a, w);
            fill[b] += 1;
        }

        let mut parent = vec![usize::MAX; n];
        let mut hops = vec![0u32; n];
        let mut root_dist = vec![0u64; n];
        parent[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        let mut seen = 1usize;
        while let Some(v) = queue.pop_front() {
            for &(u, w) in &adj[adj_start[v]..adj_start[v + 1]] {
                if parent[u] == usize::MAX {
                    parent[u] = v;
                    hops[u] = hops[v] + 1;
                    root_dist[u] = root_dist[v] + w;
                    seen += 1;
                    queue.push_back(u);
                }
            }
        }
        if seen != n {
            return Err(TreeError::Disconnected);
        }

        let levels = (usize::BITS - n.leading_zeros()).max(1) as usize;
        let mut up = Vec::with_capacity(levels);
        up.push(parent.clone());
        for k in 1..levels {
            let prev: &Vec<Vertex> = &up[k - 1];
            let next = (0..n).map(|v| prev[prev[v]]).collect();
            up.push(next);
        }

        Ok(Self {
            edges,
            adj_start,
            adj,
            parent,
            hops,
            root_dist,
            up,
        })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex, u64)] {
        &self.edges
    }

    pub fn check(&self, v: Vertex) -> Result<(), TreeError> {
        if v < self.len() {
            Ok(())
        } else {
            Err(TreeError::UnknownVertex { vertex: v, len: self.len() })
        }
    }

    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, u64)] {
        &self.adj[self.adj_start[v]..self.adj_start[v + 1]]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj_start[v + 1] - self.adj_start[v]
    }

    /// Parent towards vertex 0, `None` at the root.
    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        (v != 0).then(|| self.parent[v])
    }

    /// Neighbors of `v` away from vertex 0, in adjacency order.
    pub fn children(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        let parent = self.parent(v);
        self.neighbors(v)
            .iter()
            .map(|&(u, _)| u)
            .filter(move |&u| Some(u) != parent)
    }

    /// Number of edges between `v` and vertex 0.
    pub fn hops_from_root(&self, v: Vertex) -> u32 {
        self.hops[v]
    }

    pub fn lca(&self, a: Vertex, b: Vertex) -> Result<Vertex, TreeError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.lca_unchecked(a, b))
    }

    fn lca_unchecked(&self, mut a: Vertex, mut b: Vertex) -> Vertex {
        if self.hops[a] < self.hops[b] {
            std::mem::swap(&mut a, &mut b);
        }
        let mut lift = self.hops[a] - self.hops[b];
        let mut k = 0;
        while lift > 0 {
            if lift & 1 == 1 {
                a = self.up[k][a];
            }
            lift >>= 1;
            k += 1;
        }
        if a == b {
            return a;
        }
        for k in (0..self.up.len()).rev() {
            if self.up[k][a] != self.up[k][b] {
                a = self.up[k][a];
                b = self.up[k][b];
            }
        }
        self.parent[a]
    }

    pub fn distance(&self, a: Vertex, b: Vertex) -> Result<u64, TreeError> {
        let l = self.lca(a, b)?;
        Ok(self.root_dist[a] + self.root_dist[b] - 2 * self.root_dist[l])
    }

    /// Number of edges on the geodesic from `a` to `b`.
    pub fn hop_distance(&self, a: Vertex, b: Vertex) -> Result<u64, TreeError> {
        let l = self.lca(a, b)?;
        Ok(u64::from(self.hops[a] + self.hops[b] - 2 * self.hops[l]))
    }

    /// Single-source weighted distances by traversal.
    pub fn distances_from(&self, a: Vertex) -> Result<Vec<u64>, TreeError> {
        self.check(a)?;
        let mut dist = vec![u64::MAX; self.len()];
        dist[a] = 0;
        let mut stack = vec![a];
        while let Some(v) = stack.pop() {
            for &(u, w) in self.neighbors(v) {
                if dist[u] == u64::MAX {
                    dist[u] = dist[v] + w;
                    stack.push(u);
                }
            }
        }
        Ok(dist)
    }

    /// The unique simple path from `a` to `b`, both endpoints included.
    pub fn geodesic(&self, a: Vertex, b: Vertex) -> Result<Vec<Vertex>, TreeError> {
        let l = self.lca(a, b)?;
        let mut head = Vec::new();
        let mut v = a;
        while v != l {
            head.push(v);
            v = self.parent[v];
        }
        head.push(l);
        let mut tail = Vec::new();
        let mut v = b;
        while v != l {
            tail.push(v);
            v = self.parent[v];
        }
        head.extend(tail.into_iter().rev());
        Ok(head)
    }

    /// Whether `subset` is nonempty and induces a connected subgraph.
    pub fn is_connected_subset(&self, subset: &[Vertex]) -> bool {
        if subset.is_empty() || subset.iter().any(|&v| v >= self.len()) {
            return false;
        }
        let mut inside = vec![false; self.len()];
        for &v in subset {
            inside[v] = true;
        }
        let members = inside.iter().filter(|&&x| x).count();
        let mut seen = vec![false; self.len()];
        seen[subset[0]] = true;
        let mut stack = vec![subset[0]];
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &(u, _) in self.neighbors(v) {
                if inside[u] && !seen[u] {
                    seen[u] = true;
                    reached += 1;
                    stack.push(u);
                }
            }
        }
        reached == members
    }

    /// Nearest-point projection of `a` onto the connected subset `subset`.
    pub fn project_to_subtree(&self, subset: &[Vertex], a: Vertex) -> Result<Vertex, TreeError> {
        self.check(a)?;
        if subset.is_empty() {
            return Err(TreeError::EmptySubset);
        }
        if !self.is_connected_subset(subset) {
            return Err(TreeError::DisconnectedSubset);
        }
        Ok(self.project_unchecked(subset, a))
    }

    /// Projection without the connectivity audit; `subset` must be a
    /// nonempty connected vertex set.
    pub(crate) fn project_unchecked(&self, subset: &[Vertex], a: Vertex) -> Vertex {
        if subset.contains(&a) {
            return a;
        }
        // The first vertex of the geodesic from `a` to any member of a
        // connected subset is the projection.
        let path = self
            .geodesic(a, subset[0])
            .expect("subset vertices are valid");
        *path
            .iter()
            .find(|v| subset.contains(v))
            .expect("geodesic ends inside the subset")
    }
}

/// Breadth-first numbered ball in the `valence`-regular tree.
fn regular_ball_edges(valence: usize, radius: usize) -> (usize, Vec<(Vertex, Vertex, u64)>) {
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    let mut next_id = 1usize;
    for depth in 0..radius {
        let mut next = Vec::new();
        for &v in &frontier {
            let children = if depth == 0 { valence } else { valence.saturating_sub(1) };
            for _ in 0..children {
                edges.push((v, next_id, 1));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    (next_id, edges)
}

/// A geodesically parametrized segment `param: [-radius, radius] -> host`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeLine {
    radius: i64,
    speed: u64,
    params: Vec<Vertex>,
    inverse: HashMap<Vertex, i64>,
}

impl TreeLine {
    /// Validates injectivity and `d(param(s), param(t)) = speed * |s - t|`
    /// exhaustively against `host`.
    pub fn new(
        host: &MetricTree,
        radius: i64,
        speed: u64,
        params: Vec<Vertex>,
    ) -> Result<Self, TreeError> {
        let line = Self::new_unchecked(radius, speed, params)?;
        line.verify(host)?;
        Ok(line)
    }

    /// Builds the line without the geodesic audit. Only the parameter count
    /// is checked.
    pub fn new_unchecked(radius: i64, speed: u64, params: Vec<Vertex>) -> Result<Self, TreeError> {
        let expected = (2 * radius + 1) as usize;
        if radius < 0 || params.len() != expected {
            return Err(TreeError::LineLength { got: params.len(), expected });
        }
        let mut inverse = HashMap::with_capacity(params.len());
        for (i, &v) in params.iter().enumerate() {
            inverse.entry(v).or_insert(i as i64 - radius);
        }
        Ok(Self { radius, speed, params, inverse })
    }

    pub fn verify(&self, host: &MetricTree) -> Result<(), TreeError> {
        for &v in &self.params {
            host.check(v)?;
        }
        let mut seen = HashMap::with_capacity(self.params.len());
        for (t, v) in self.iter() {
            if seen.insert(v, t).is_some() {
                return Err(TreeError::NonInjectiveLine { vertex: v, t });
            }
        }
        for (s, a) in self.iter() {
            for (t, b) in self.iter().filter(|&(t, _)| t > s) {
                let actual = host.distance(a, b)?;
                let expected = self.speed * (t - s) as u64;
                if actual != expected {
                    return Err(TreeError::NonGeodesicLine { s, t, actual, expected });
                }
            }
        }
        Ok(())
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn speed(&self) -> u64 {
        self.speed
    }

    pub fn at(&self, t: i64) -> Option<Vertex> {
        (t.abs() <= self.radius).then(|| self.params[(t + self.radius) as usize])
    }

    /// Parameter whose image is `v` (first one, if the line is not injective).
    pub fn param_of(&self, v: Vertex) -> Option<i64> {
        self.inverse.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Vertex)> + '_ {
        self.params
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i as i64 - self.radius, v))
    }

    pub fn params(&self) -> &[Vertex] {
        &self.params
    }

    /// Vertices on the geodesic from `param(from)` to `param(to)`, in order.
    pub fn trace(&self, host: &MetricTree, from: i64, to: i64) -> Vec<Vertex> {
        let mut out = Vec::new();
        let step = if to >= from { 1 } else { -1 };
        let mut t = from;
        out.push(self.at(t).expect("parameter in range"));
        while t != to {
            let a = self.at(t).expect("parameter in range");
            let b = self.at(t + step).expect("parameter in range");
            let seg = host.geodesic(a, b).expect("line vertices lie in host");
            out.extend_from_slice(&seg[1..]);
            t += step;
        }
        out
    }
}
