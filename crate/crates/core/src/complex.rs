//! The truncated universal cover as one finite weighted graph.
//!
//! Every piece contributes `F x [-R_z, R_z]`: horizontal copies of the edges
//! of `F` at each fiber level and unit vertical edges between consecutive
//! levels. Adjacent pieces `v, w` across Bass–Serre edge `e` are glued by the
//! flip rule
//!
//! ```text
//! (v, line_e(t), z = u)  ==  (w, line_e(u), z = t)
//! ```
//!
//! resolved with a union-find over provisional vertex ids. Provisional ids
//! enumerate `(piece, point, z)` lexicographically, so the smallest member of
//! a class is its lexicographically smallest description. Canonical ids are
//! dense in that order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::piece::{Piece, PieceVertex};
use crate::tree::MetricTree;
use crate::union_find::UnionFind;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexError {
    #[error("{pieces} pieces supplied for a Bass–Serre tree with {vertices} vertices")]
    PieceCount { pieces: usize, vertices: usize },
    #[error("piece {piece} has no boundary line for Bass–Serre edge {edge}")]
    MissingLine { edge: usize, piece: usize },
    #[error("inconsistent identification: {a:?} glued twice (other side {b:?})")]
    InconsistentIdentification { a: Site, b: Site },
    #[error("{site:?} does not lie on the boundary plane of edge {edge}")]
    NotOnPlane { site: Site, edge: usize },
    #[error("flip image of {site:?} leaves the truncation window")]
    OutOfWindow { site: Site },
    #[error("vertex {to} is unreachable from {from} in the truncated complex")]
    Unreachable { from: u32, to: u32 },
    #[error("unknown complex vertex {0}")]
    UnknownVertex(u32),
    #[error("{0:?} is not a vertex of this complex")]
    UnknownSite(Site),
    #[error("no vertex lies {margin} inside every truncation radius")]
    EmptyCore { margin: i64 },
    #[error("complex would have {0} vertices, more than 32-bit ids allow")]
    TooLarge(u64),
}

/// Piece parity class: `One` holds the pieces at even distance from
/// Bass–Serre vertex 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Parity {
    One,
    Two,
}

impl Parity {
    pub fn index(self) -> usize {
        match self {
            Parity::One => 1,
            Parity::Two => 2,
        }
    }

    pub fn other(self) -> Parity {
        match self {
            Parity::One => Parity::Two,
            Parity::Two => Parity::One,
        }
    }
}

/// The Bass–Serre tree `T0` with its bipartition.
#[derive(Debug, Clone)]
pub struct BassSerreTree {
    tree: MetricTree,
    parity: Vec<Parity>,
    frontier: Vec<bool>,
}

impl BassSerreTree {
    /// `frontier[v]` marks vertices whose neighborhood was cut off when the
    /// tree was truncated from a larger one; pass an empty vector if none.
    pub fn new(tree: MetricTree, frontier: Vec<bool>) -> Self {
        let parity = (0..tree.len())
            .map(|v| if tree.hops_from_root(v) % 2 == 0 { Parity::One } else { Parity::Two })
            .collect();
        let frontier = if frontier.is_empty() { vec![false; tree.len()] } else { frontier };
        Self { tree, parity, frontier }
    }

    pub fn tree(&self) -> &MetricTree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn parity(&self, v: usize) -> Parity {
        self.parity[v]
    }

    pub fn is_frontier(&self, v: usize) -> bool {
        self.frontier[v]
    }

    pub fn members(&self, parity: Parity) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.parity[v] == parity).collect()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.tree.neighbors(v).iter().map(|&(u, _)| u).collect();
        out.sort_unstable();
        out
    }

    /// Endpoints of edge `e`, smaller id first.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        let (a, b, _) = self.tree.edges()[e];
        (a.min(b), a.max(b))
    }

    pub fn edge_count(&self) -> usize {
        self.tree.edges().len()
    }

    pub fn edge_between(&self, v: usize, w: usize) -> Option<usize> {
        self.tree
            .edges()
            .iter()
            .position(|&(a, b, _)| (a, b) == (v, w) || (a, b) == (w, v))
    }

    /// Recomputes a 2-coloring from scratch and checks that same-class
    /// vertices are at even distance.
    pub fn verify_bipartition(&self) -> bool {
        let n = self.len();
        let mut color = vec![u8::MAX; n];
        for start in 0..n {
            if color[start] != u8::MAX {
                continue;
            }
            color[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &(u, _) in self.tree.neighbors(v) {
                    if color[u] == u8::MAX {
                        color[u] = 1 - color[v];
                        queue.push_back(u);
                    } else if color[u] == color[v] {
                        return false;
                    }
                }
            }
        }
        (0..n).all(|a| {
            (0..n).all(|b| {
                let same = self.parity[a] == self.parity[b];
                let even = self.tree.distance(a, b).unwrap() % 2 == 0;
                same == even && same == (color[a] == color[b])
            })
        })
    }
}

/// A description `(piece, point of F, fiber level)` of a complex vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub piece: usize,
    pub point: PieceVertex,
    pub z: i64,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Leave the flip identifications of this Bass–Serre edge out.
    pub skip_gluing: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildLog {
    pub pieces: usize,
    pub provisional_vertices: u64,
    pub identified_pairs: u64,
    pub skipped_out_of_window: u64,
    pub skipped_edges: Vec<usize>,
    pub vertices: u64,
    pub raw_edges: u64,
    pub edges: u64,
    pub fiber_radius: i64,
    pub rho_hat: Option<u64>,
}

/// Exact distances from one source; unreachable entries hold no value.
#[derive(Debug, Clone)]
pub struct DistanceField {
    source: u32,
    dist: Vec<u32>,
}

impl DistanceField {
    pub fn get(&self, y: u32) -> Result<u64, ComplexError> {
        match self.dist.get(y as usize) {
            None => Err(ComplexError::UnknownVertex(y)),
            Some(&NONE) => Err(ComplexError::Unreachable { from: self.source, to: y }),
            Some(&d) => Ok(u64::from(d)),
        }
    }

    pub fn reached(&self) -> usize {
        self.dist.iter().filter(|&&d| d != NONE).count()
    }
}

#[derive(Debug, Clone)]
pub struct TotalComplex {
    bs: BassSerreTree,
    pieces: Vec<Piece>,
    fiber_radius: i64,
    window: i64,
    levels: u32,
    piece_offset: Vec<u32>,
    canon_of: Vec<u32>,
    rep: Vec<u32>,
    partner: Vec<u32>,
    adj_start: Vec<u32>,
    adj_to: Vec<u32>,
    adj_w: Vec<u32>,
    unit_weights: bool,
    rho_hat: Option<u64>,
    log: BuildLog,
}

impl TotalComplex {
    pub fn build(
        bs: BassSerreTree,
        pieces: Vec<Piece>,
        fiber_radius: i64,
        opts: &BuildOptions,
    ) -> Result<Self, ComplexError> {
        if pieces.len() != bs.len() {
            return Err(ComplexError::PieceCount { pieces: pieces.len(), vertices: bs.len() });
        }
        let levels = (2 * fiber_radius + 1) as u64;
        let mut piece_offset = Vec::with_capacity(pieces.len() + 1);
        let mut total = 0u64;
        for p in &pieces {
            piece_offset.push(total);
            total += p.point_count() as u64 * levels;
        }
        piece_offset.push(total);
        if total >= u64::from(NONE) {
            return Err(ComplexError::TooLarge(total));
        }
        let piece_offset: Vec<u32> = piece_offset.into_iter().map(|o| o as u32).collect();
        let window = pieces
            .iter()
            .map(Piece::line_radius)
            .min()
            .unwrap_or(0)
            .min(fiber_radius);

        let mut complex = Self {
            bs,
            pieces,
            fiber_radius,
            window,
            levels: levels as u32,
            piece_offset,
            canon_of: Vec::new(),
            rep: Vec::new(),
            partner: vec![NONE; total as usize],
            adj_start: Vec::new(),
            adj_to: Vec::new(),
            adj_w: Vec::new(),
            unit_weights: true,
            rho_hat: None,
            log: BuildLog {
                pieces: 0,
                provisional_vertices: total,
                identified_pairs: 0,
                skipped_out_of_window: 0,
                skipped_edges: Vec::new(),
                vertices: 0,
                raw_edges: 0,
                edges: 0,
                fiber_radius,
                rho_hat: None,
            },
        };
        complex.log.pieces = complex.pieces.len();

        // Flip identifications.
        let mut uf = UnionFind::new(total as usize);
        for e in 0..complex.bs.edge_count() {
            let (v, w) = complex.bs.edge(e);
            let sv = complex.pieces[v]
                .slot_of_edge(e)
                .ok_or(ComplexError::MissingLine { edge: e, piece: v })?;
            let sw = complex.pieces[w]
                .slot_of_edge(e)
                .ok_or(ComplexError::MissingLine { edge: e, piece: w })?;
            if opts.skip_gluing == Some(e) {
                complex.log.skipped_edges.push(e);
                continue;
            }
            let rv = complex.pieces[v].line_radius();
            let rw = complex.pieces[w].line_radius();
            for t in -rv..=rv {
                for u in -fiber_radius..=fiber_radius {
                    if u.abs() > rw || t.abs() > fiber_radius {
                        complex.log.skipped_out_of_window += 1;
                        continue;
                    }
                    let a = Site { piece: v, point: PieceVertex::Line { slot: sv, t }, z: u };
                    let b = Site { piece: w, point: PieceVertex::Line { slot: sw, t: u }, z: t };
                    let pa = complex.prov(&a).expect("in-window site");
                    let pb = complex.prov(&b).expect("in-window site");
                    if complex.partner[pa as usize] != NONE {
                        return Err(ComplexError::InconsistentIdentification { a, b });
                    }
                    if complex.partner[pb as usize] != NONE {
                        return Err(ComplexError::InconsistentIdentification { a: b, b: a });
                    }
                    complex.partner[pa as usize] = pb;
                    complex.partner[pb as usize] = pa;
                    uf.union(pa as usize, pb as usize);
                    complex.log.identified_pairs += 1;
                }
            }
        }
        let labels = uf.dense_labels();
        let n = uf.sets();
        let mut rep = vec![NONE; n];
        for (p, &l) in labels.iter().enumerate() {
            if rep[l] == NONE {
                rep[l] = p as u32;
            }
        }
        complex.canon_of = labels.into_iter().map(|l| l as u32).collect();
        complex.rep = rep;
        complex.log.vertices = n as u64;

        // Horizontal and vertical edges, deduplicated after identification.
        let mut edges: Vec<(u32, u32, u32)> = Vec::new();
        for (v, piece) in complex.pieces.iter().enumerate() {
            let base = complex.piece_offset[v];
            let lv = complex.levels;
            for (a, b, w) in piece.edges() {
                for k in 0..lv {
                    let x = complex.canon_of[(base + a as u32 * lv + k) as usize];
                    let y = complex.canon_of[(base + b as u32 * lv + k) as usize];
                    edges.push((x.min(y), x.max(y), w as u32));
                }
            }
            for a in 0..piece.point_count() as u32 {
                for k in 0..lv - 1 {
                    let x = complex.canon_of[(base + a * lv + k) as usize];
                    let y = complex.canon_of[(base + a * lv + k + 1) as usize];
                    edges.push((x.min(y), x.max(y), 1));
                }
            }
        }
        complex.log.raw_edges = edges.len() as u64;
        edges.par_sort_unstable();
        edges.dedup_by(|next, kept| next.0 == kept.0 && next.1 == kept.1);
        edges.retain(|&(a, b, _)| a != b);
        complex.log.edges = edges.len() as u64;
        complex.unit_weights = edges.iter().all(|&(_, _, w)| w == 1);

        let mut degree = vec![0u32; n];
        for &(a, b, _) in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut adj_start = vec![0u32; n + 1];
        for v in 0..n {
            adj_start[v + 1] = adj_start[v] + degree[v];
        }
        let mut fill = adj_start.clone();
        let mut adj_to = vec![0u32; adj_start[n] as usize];
        let mut adj_w = vec![0u32; adj_start[n] as usize];
        for &(a, b, w) in &edges {
            adj_to[fill[a as usize] as usize] = b;
            adj_w[fill[a as usize] as usize] = w;
            fill[a as usize] += 1;
            adj_to[fill[b as usize] as usize] = a;
            adj_w[fill[b as usize] as usize] = w;
            fill[b as usize] += 1;
        }
        complex.adj_start = adj_start;
        complex.adj_to = adj_to;
        complex.adj_w = adj_w;

        complex.rho_hat = complex.measure_rho();
        complex.log.rho_hat = complex.rho_hat;
        Ok(complex)
    }

    pub fn bs(&self) -> &BassSerreTree {
        &self.bs
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece(&self, v: usize) -> &Piece {
        &self.pieces[v]
    }

    pub fn fiber_radius(&self) -> i64 {
        self.fiber_radius
    }

    /// Largest `|z|` for which every boundary line can be flipped into.
    pub fn glue_window(&self) -> i64 {
        self.window
    }

    pub fn log(&self) -> &BuildLog {
        &self.log
    }

    pub fn vertex_count(&self) -> usize {
        self.rep.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj_to.len() / 2
    }

    pub fn unit_weights(&self) -> bool {
        self.unit_weights
    }

    /// Bytes held by the vertex and adjacency arrays.
    pub fn memory_bytes(&self) -> usize {
        4 * (self.canon_of.len()
            + self.rep.len()
            + self.partner.len()
            + self.adj_start.len()
            + self.adj_to.len()
            + self.adj_w.len())
    }

    pub fn mu(&self) -> u64 {
        self.pieces.iter().map(Piece::mu).max().unwrap_or(1)
    }

    pub fn lip(&self) -> u64 {
        self.pieces.iter().map(Piece::lip).max().unwrap_or(1)
    }

    /// Minimum distance between `X_v` and `X_v'` over all pairs at
    /// Bass–Serre distance 2, measured exactly in the truncation. `None` if
    /// no such pair exists or none is connected.
    pub fn rho_hat(&self) -> Option<u64> {
        self.rho_hat
    }

    fn prov(&self, s: &Site) -> Option<u32> {
        let piece = self.pieces.get(s.piece)?;
        let idx = piece.index(s.point)? as u32;
        if s.z.abs() > self.fiber_radius {
            return None;
        }
        Some(self.piece_offset[s.piece] + idx * self.levels + (s.z + self.fiber_radius) as u32)
    }

    fn site_of_prov(&self, p: u32) -> Site {
        let piece = self.piece_offset.partition_point(|&o| o <= p) - 1;
        let local = p - self.piece_offset[piece];
        Site {
            piece,
            point: self.pieces[piece].point(( local / self.levels) as usize),
            z: (local % self.levels) as i64 - self.fiber_radius,
        }
    }

    pub fn id_of(&self, s: &Site) -> Option<u32> {
        self.prov(s).map(|p| self.canon_of[p as usize])
    }

    /// Canonical (lexicographically smallest) description of a vertex.
    pub fn site(&self, x: u32) -> Result<Site, ComplexError> {
        let &p = self.rep.get(x as usize).ok_or(ComplexError::UnknownVertex(x))?;
        Ok(self.site_of_prov(p))
    }

    /// All descriptions of a vertex: one, or two for glued boundary points.
    pub fn sites(&self, x: u32) -> Result<Vec<Site>, ComplexError> {
        let &p = self.rep.get(x as usize).ok_or(ComplexError::UnknownVertex(x))?;
        let mut out = vec![self.site_of_prov(p)];
        let q = self.partner[p as usize];
        if q != NONE {
            out.push(self.site_of_prov(q));
        }
        Ok(out)
    }

    /// Whether vertex `x` lies in `X_v`.
    pub fn in_piece(&self, x: u32, v: usize) -> bool {
        let p = self.rep[x as usize];
        let in_range = |p: u32| self.piece_offset[v] <= p && p < self.piece_offset[v + 1];
        in_range(p) || {
            let q = self.partner[p as usize];
            q != NONE && in_range(q)
        }
    }

    /// Every glued pair of provisional descriptions, each pair once.
    pub fn glued_pairs(&self) -> Vec<(Site, Site)> {
        (0..self.partner.len() as u32)
            .filter(|&p| self.partner[p as usize] != NONE && p < self.partner[p as usize])
            .map(|p| (self.site_of_prov(p), self.site_of_prov(self.partner[p as usize])))
            .collect()
    }

    /// The flip identification across Bass–Serre edge `edge`.
    pub fn flip_image(&self, s: &Site, edge: usize) -> Result<Site, ComplexError> {
        let not_on_plane = || ComplexError::NotOnPlane { site: *s, edge };
        if edge >= self.bs.edge_count() || s.piece >= self.pieces.len() {
            return Err(not_on_plane());
        }
        let (a, b) = self.bs.edge(edge);
        let other = match s.piece {
            p if p == a => b,
            p if p == b => a,
            _ => return Err(not_on_plane()),
        };
        let here = &self.pieces[s.piece];
        let slot = here.slot_of_edge(edge).ok_or_else(not_on_plane)?;
        let t = match s.point {
            PieceVertex::Line { slot: sl, t } if sl == slot && t.abs() <= here.line_radius() => t,
            _ => return Err(not_on_plane()),
        };
        let there = &self.pieces[other];
        let other_slot = there.slot_of_edge(edge).ok_or_else(not_on_plane)?;
        if s.z.abs() > there.line_radius() || t.abs() > self.fiber_radius || s.z.abs() > self.fiber_radius {
            return Err(ComplexError::OutOfWindow { site: *s });
        }
        Ok(Site { piece: other, point: PieceVertex::Line { slot: other_slot, t: s.z }, z: t })
    }

    fn check(&self, x: u32) -> Result<(), ComplexError> {
        if (x as usize) < self.vertex_count() {
            Ok(())
        } else {
            Err(ComplexError::UnknownVertex(x))
        }
    }

    pub fn neighbors(&self, x: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        let (s, e) = (self.adj_start[x as usize] as usize, self.adj_start[x as usize + 1] as usize);
        self.adj_to[s..e].iter().copied().zip(self.adj_w[s..e].iter().copied())
    }

    /// Weight of the edge `x`–`y`, if adjacent.
    pub fn edge_weight(&self, x: u32, y: u32) -> Option<u32> {
        if (x as usize) >= self.vertex_count() || (y as usize) >= self.vertex_count() {
            return None;
        }
        self.neighbors(x).find(|&(u, _)| u == y).map(|(_, w)| w)
    }

    /// Every edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        (0..self.vertex_count() as u32)
            .flat_map(move |x| self.neighbors(x).filter(move |&(y, _)| x < y).map(move |(y, w)| (x, y, w)))
    }

    /// Exact shortest-path distance: breadth-first search on unit weights,
    /// Dijkstra otherwise.
    pub fn distance(&self, x: u32, y: u32) -> Result<u64, ComplexError> {
        self.check(x)?;
        self.check(y)?;
        if x == y {
            return Ok(0);
        }
        let found = if self.unit_weights {
            self.search_bfs(&[x], |v| v == y)
        } else {
            self.search_dijkstra(&[x], |v| v == y)
        };
        found.ok_or(ComplexError::Unreachable { from: x, to: y })
    }

    /// Same value as [`distance`](Self::distance), searching from both ends.
    pub fn bidirectional_distance(&self, x: u32, y: u32) -> Result<u64, ComplexError> {
        self.check(x)?;
        self.check(y)?;
        if x == y {
            return Ok(0);
        }
        if !self.unit_weights {
            return self.distance(x, y);
        }
        let n = self.vertex_count();
        let mut dist = [vec![NONE; n], vec![NONE; n]];
        let mut frontier = [vec![x], vec![y]];
        dist[0][x as usize] = 0;
        dist[1][y as usize] = 0;
        loop {
            if frontier[0].is_empty() || frontier[1].is_empty() {
                return Err(ComplexError::Unreachable { from: x, to: y });
            }
            let side = if frontier[0].len() <= frontier[1].len() { 0 } else { 1 };
            let mut best = u64::MAX;
            let mut next = Vec::new();
            for &v in &frontier[side] {
                let dv = dist[side][v as usize];
                for (u, _) in self.neighbors(v) {
                    if dist[side][u as usize] == NONE {
                        dist[side][u as usize] = dv + 1;
                        next.push(u);
                    }
                    let other = dist[1 - side][u as usize];
                    if other != NONE {
                        best = best.min(u64::from(dv) + 1 + u64::from(other));
                    }
                }
            }
            if best != u64::MAX {
                return Ok(best);
            }
            frontier[side] = next;
        }
    }

    /// Distances from `x` to every vertex.
    pub fn distances_from(&self, x: u32) -> Result<DistanceField, ComplexError> {
        self.check(x)?;
        let n = self.vertex_count();
        let mut dist = vec![NONE; n];
        dist[x as usize] = 0;
        if self.unit_weights {
            let mut queue = VecDeque::from([x]);
            while let Some(v) = queue.pop_front() {
                let d = dist[v as usize] + 1;
                for (u, _) in self.neighbors(v) {
                    if dist[u as usize] == NONE {
                        dist[u as usize] = d;
                        queue.push_back(u);
                    }
                }
            }
        } else {
            let mut heap = BinaryHeap::from([Reverse((0u32, x))]);
            while let Some(Reverse((d, v))) = heap.pop() {
                if d > dist[v as usize] {
                    continue;
                }
                for (u, w) in self.neighbors(v) {
                    let nd = d + w;
                    if nd < dist[u as usize] {
                        dist[u as usize] = nd;
                        heap.push(Reverse((nd, u)));
                    }
                }
            }
        }
        Ok(DistanceField { source: x, dist })
    }

    fn search_bfs(&self, sources: &[u32], target: impl Fn(u32) -> bool) -> Option<u64> {
        let mut dist = vec![NONE; self.vertex_count()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if target(s) {
                return Some(0);
            }
            if dist[s as usize] == NONE {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize] + 1;
            for (u, _) in self.neighbors(v) {
                if dist[u as usize] == NONE {
                    if target(u) {
                        return Some(u64::from(d));
                    }
                    dist[u as usize] = d;
                    queue.push_back(u);
                }
            }
        }
        None
    }

    fn search_dijkstra(&self, sources: &[u32], target: impl Fn(u32) -> bool) -> Option<u64> {
        let mut dist = vec![NONE; self.vertex_count()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s as usize] = 0;
            heap.push(Reverse((0u32, s)));
        }
        while let Some(Reverse((d, v))) = heap.pop() {
            if d > dist[v as usize] {
                continue;
            }
            if target(v) {
                return Some(u64::from(d));
            }
            for (u, w) in self.neighbors(v) {
                let nd = d + w;
                if nd < dist[u as usize] {
                    dist[u as usize] = nd;
                    heap.push(Reverse((nd, u)));
                }
            }
        }
        None
    }

    /// Exact distance between the vertex sets of `X_v` and `X_v'`.
    pub fn piece_gap(&self, v: usize, v2: usize) -> Option<u64> {
        let sources: Vec<u32> = (self.piece_offset[v]..self.piece_offset[v + 1])
            .map(|p| self.canon_of[p as usize])
            .collect();
        if self.unit_weights {
            self.search_bfs(&sources, |x| self.in_piece(x, v2))
        } else {
            self.search_dijkstra(&sources, |x| self.in_piece(x, v2))
        }
    }

    fn measure_rho(&self) -> Option<u64> {
        let mut pairs = Vec::new();
        for w in 0..self.bs.len() {
            let nb = self.bs.neighbors(w);
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    pairs.push((nb[i], nb[j]));
                }
            }
        }
        pairs
            .par_iter()
            .filter_map(|&(a, b)| self.piece_gap(a, b))
            .min()
    }

    /// Whether the complex is connected.
    pub fn is_connected(&self) -> bool {
        self.vertex_count() == 0
            || self.distances_from(0).map(|f| f.reached() == self.vertex_count()).unwrap_or(false)
    }

    /// Whether every description of `x` keeps its base, line and fiber
    /// coordinates at least `margin` inside the truncation. Fiber levels are
    /// measured against the glue window, since a fiber level becomes a line
    /// parameter across a flip. For `margin > 0`, pieces on the truncated
    /// frontier of the Bass–Serre tree are excluded.
    pub fn is_core(&self, x: u32, margin: i64) -> bool {
        let Ok(sites) = self.sites(x) else { return false };
        sites.iter().all(|s| {
            let piece = &self.pieces[s.piece];
            if margin > 0 && self.bs.is_frontier(s.piece) {
                return false;
            }
            let point_ok = match s.point {
                PieceVertex::Base(b) => piece.base_depth(b) as i64 + margin <= piece.base_radius() as i64,
                PieceVertex::Line { t, .. } => t.abs() + margin <= piece.line_radius(),
            };
            point_ok && s.z.abs() + margin <= self.window
        })
    }

    pub fn core_points(&self, margin: i64) -> Vec<u32> {
        (0..self.vertex_count() as u32)
            .filter(|&x| self.is_core(x, margin))
            .collect()
    }

    /// Seeded sample of up to `count` distinct core vertices.
    pub fn sample_core_points(&self, margin: i64, count: usize, seed: u64) -> Result<Vec<u32>, ComplexError> {
        let core = self.core_points(margin);
        if core.is_empty() {
            return Err(ComplexError::EmptyCore { margin });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(sample(&mut rng, core.len(), count.min(core.len()))
            .into_iter()
            .map(|i| core[i])
            .collect())
    }

    /// Seeded sample of `count` core pairs, drawn independently.
    pub fn sample_core_pairs(&self, margin: i64, count: usize, seed: u64) -> Result<Vec<(u32, u32)>, ComplexError> {
        let core = self.core_points(margin);
        if core.is_empty() {
            return Err(ComplexError::EmptyCore { margin });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count)
            .map(|_| (core[rng.gen_range(0..core.len())], core[rng.gen_range(0..core.len())]))
            .collect())
    }

    /// Edge list, one `u v w` line per edge.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for (a, b, w) in self.edges() {
            let _ = writeln!(out, "{a} {b} {w}");
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph complex {\n");
        for x in 0..self.vertex_count() as u32 {
            let s = self.site(x).expect("valid id");
            let _ = writeln!(out, "  {x} [label=\"{}\"];", site_label(&s));
        }
        for (a, b, w) in self.edges() {
            let _ = writeln!(out, "  {a} -- {b} [weight={w}];");
        }
        out.push_str("}\n");
        out
    }
}

pub fn site_label(s: &Site) -> String {
    match s.point {
        PieceVertex::Base(b) => format!("{}:B{}@{}", s.piece, b, s.z),
        PieceVertex::Line { slot, t } => format!("{}:L{}/{}@{}", s.piece, slot, t, s.z),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingRecord {
    pub x: u32,
    pub y: u32,
    pub d_small: u64,
    pub d_big: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    pub records: Vec<DoublingRecord>,
    /// Pairs whose distance the truncation inflated.
    pub inflated: usize,
    /// Pairs where the small complex was strictly shorter; always a bug.
    pub shortened: usize,
}

impl DoublingReport {
    pub fn agreeing(&self) -> impl Iterator<Item = &DoublingRecord> {
        self.records.iter().filter(|r| r.d_small == r.d_big)
    }

    pub fn disagreement_fraction(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.inflated as f64 / self.records.len() as f64
        }
    }
}

/// Compares distances in `small` against the same pairs in `big`, a build of
/// the same instance with larger radii.
pub fn doubling_check(
    small: &TotalComplex,
    big: &TotalComplex,
    pairs: &[(u32, u32)],
) -> Result<DoublingReport, ComplexError> {
    let records = pairs
        .par_iter()
        .map(|&(x, y)| {
            let map = |v: u32| -> Result<u32, ComplexError> {
                let s = small.site(v)?;
                big.id_of(&s).ok_or(ComplexError::UnknownSite(s))
            };
            let (bx, by) = (map(x)?, map(y)?);
            Ok(DoublingRecord {
                x,
                y,
                d_small: small.distance(x, y)?,
                d_big: big.distance(bx, by)?,
            })
        })
        .collect::<Result<Vec<_>, ComplexError>>()?;
    let inflated = records.iter().filter(|r| r.d_small > r.d_big).count();
    let shortened = records.iter().filter(|r| r.d_small < r.d_big).count();
    Ok(DoublingReport { records, inflated, shortened })
}
