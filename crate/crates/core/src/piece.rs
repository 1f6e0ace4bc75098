//! Models of the surface factor `F` of a piece `X = F x R`.
//!
//! A [`Piece`] is a base tree `T` together with boundary lines. Each boundary
//! line is a unit-speed path of vertices `(slot, t)`, `t` in
//! `[-line_radius, line_radius]`, tethered to its shadow `shadow(t)` in the
//! base tree by an edge of length `mu`. The retraction onto the base tree is
//! the identity on `T` and sends `(slot, t)` to `shadow(t)`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{MetricTree, TreeError, TreeLine, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PieceError {
    #[error("a piece needs at least one boundary slot")]
    NoIncidentEdges,
    #[error("{requested} incident edges requested, this piece kind supports at most {max}")]
    TooManyEdges { requested: usize, max: usize },
    #[error("{slots} slots but {lines} shadow lines supplied")]
    SlotMismatch { slots: usize, lines: usize },
    #[error("shadow of slot {slot} has radius {got}, expected {expected}")]
    LineRadius { slot: usize, got: i64, expected: i64 },
    #[error("shadow of slot {slot} has speed {speed}; synthetic pieces need unit speed")]
    LineSpeed { slot: usize, speed: u64 },
    #[error("shadow of slot {slot} is not a geodesic line: {source}")]
    NotGeodesic { slot: usize, source: TreeError },
    #[error("base tree too small: {0}")]
    BaseTooSmall(String),
    #[error("invalid piece vertex {0:?}")]
    InvalidVertex(PieceVertex),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A point of `F`: a base-tree vertex or a boundary-line vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PieceVertex {
    Base(Vertex),
    Line { slot: usize, t: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    Synthetic,
    Pants,
}

#[derive(Debug, Clone)]
pub struct BoundaryLine {
    pub slot: usize,
    /// Bass–Serre edge glued along this line, if any.
    pub edge: Option<usize>,
    /// `r ∘ γ`: the image of the line in the base tree.
    pub shadow: TreeLine,
}

#[derive(Debug, Clone)]
pub struct Piece {
    kind: PieceKind,
    base: MetricTree,
    center: Vertex,
    base_depth: Vec<u64>,
    base_radius: u64,
    lines: Vec<BoundaryLine>,
    line_radius: i64,
    mu: u64,
    lip: u64,
    adj_start: Vec<usize>,
    adj: Vec<(usize, u64)>,
}

impl Piece {
    /// Tree plus unit-speed geodesic shadows, one per slot, tethered at
    /// length 1. `slots[k]` names the Bass–Serre edge glued along line `k`.
    pub fn synthetic(
        base: MetricTree,
        center: Vertex,
        base_radius: u64,
        slots: Vec<Option<usize>>,
        shadows: Vec<TreeLine>,
        line_radius: i64,
    ) -> Result<Self, PieceError> {
        if slots.is_empty() {
            return Err(PieceError::NoIncidentEdges);
        }
        if slots.len() != shadows.len() {
            return Err(PieceError::SlotMismatch { slots: slots.len(), lines: shadows.len() });
        }
        for (slot, shadow) in shadows.iter().enumerate() {
            if shadow.radius() != line_radius {
                return Err(PieceError::LineRadius {
                    slot,
                    got: shadow.radius(),
                    expected: line_radius,
                });
            }
            if shadow.speed() != 1 {
                return Err(PieceError::LineSpeed { slot, speed: shadow.speed() });
            }
            shadow
                .verify(&base)
                .map_err(|source| PieceError::NotGeodesic { slot, source })?;
        }
        Self::assemble(PieceKind::Synthetic, base, center, base_radius, slots, shadows, line_radius, 1, 1)
    }

    /// Builds a piece without validating the shadows. Used for negative
    /// controls, where a deliberately broken line must reach the audits.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts_unchecked(
        kind: PieceKind,
        base: MetricTree,
        center: Vertex,
        base_radius: u64,
        slots: Vec<Option<usize>>,
        shadows: Vec<TreeLine>,
        line_radius: i64,
        lip: u64,
    ) -> Result<Self, PieceError> {
        if slots.len() != shadows.len() {
            return Err(PieceError::SlotMismatch { slots: slots.len(), lines: shadows.len() });
        }
        Self::assemble(kind, base, center, base_radius, slots, shadows, line_radius, 1, lip)
    }

    /// Pair-of-pants model: the base tree is the radius-`base_radius` ball in
    /// the Cayley tree of the free group on `a, b`; the three boundary lines
    /// shadow the cosets of `<a>`, `<b>` (speed 1) and `<ab>` (speed 2)
    /// through the identity. Edges are assigned to slots in order.
    pub fn pants(base_radius: u64, line_radius: i64, edges: &[usize]) -> Result<Self, PieceError> {
        if edges.len() > 3 {
            return Err(PieceError::TooManyEdges { requested: edges.len(), max: 3 });
        }
        if 2 * line_radius as u64 > base_radius {
            return Err(PieceError::BaseTooSmall(format!(
                "the <ab> line of radius {line_radius} needs a ball of radius {}, got {base_radius}",
                2 * line_radius
            )));
        }
        let cayley = FreeGroupBall::new(base_radius as usize);
        let base = MetricTree::from_edges(cayley.words.len(), &cayley.edges)?;
        let power = |word: &[u8], t: i64| -> Vertex {
            let gen: Vec<u8> = if t >= 0 {
                word.to_vec()
            } else {
                word.iter().rev().map(|&g| inverse(g)).collect()
            };
            let full: Vec<u8> = gen.iter().copied().cycle().take(gen.len() * t.unsigned_abs() as usize).collect();
            cayley.id[&full]
        };
        let mut shadows = Vec::new();
        for (word, speed) in [(&[A][..], 1u64), (&[B][..], 1), (&[A, B][..], 2)] {
            let params = (-line_radius..=line_radius).map(|t| power(word, t)).collect();
            shadows.push(TreeLine::new(&base, line_radius, speed, params)?);
        }
        let slots = (0..3).map(|k| edges.get(k).copied()).collect();
        Self::assemble(PieceKind::Pants, base, 0, base_radius, slots, shadows, line_radius, 1, 2)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: PieceKind,
        base: MetricTree,
        center: Vertex,
        base_radius: u64,
        slots: Vec<Option<usize>>,
        shadows: Vec<TreeLine>,
        line_radius: i64,
        mu: u64,
        lip: u64,
    ) -> Result<Self, PieceError> {
        base.check(center)?;
        let base_depth = base.distances_from(center)?;
        let lines = slots
            .into_iter()
            .zip(shadows)
            .enumerate()
            .map(|(slot, (edge, shadow))| BoundaryLine { slot, edge, shadow })
            .collect();
        let mut piece = Self {
            kind,
            base,
            center,
            base_depth,
            base_radius,
            lines,
            line_radius,
            mu,
            lip,
            adj_start: Vec::new(),
            adj: Vec::new(),
        };
        let n = piece.point_count();
        let edges = piece.edges();
        let mut degree = vec![0usize; n];
        for &(a, b, _) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut adj_start = vec![0; n + 1];
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
        piece.adj_start = adj_start;
        piece.adj = adj;
        Ok(piece)
    }

    pub fn kind(&self) -> PieceKind {
        self.kind
    }

    /// The base tree `T`.
    pub fn base(&self) -> &MetricTree {
        &self.base
    }

    pub fn center(&self) -> Vertex {
        self.center
    }

    pub fn base_radius(&self) -> u64 {
        self.base_radius
    }

    /// Distance of a base vertex from the center.
    pub fn base_depth(&self, b: Vertex) -> u64 {
        self.base_depth[b]
    }

    pub fn lines(&self) -> &[BoundaryLine] {
        &self.lines
    }

    pub fn line(&self, slot: usize) -> Option<&BoundaryLine> {
        self.lines.get(slot)
    }

    /// Slot whose line is glued along Bass–Serre edge `edge`.
    pub fn slot_of_edge(&self, edge: usize) -> Option<usize> {
        self.lines.iter().find(|l| l.edge == Some(edge)).map(|l| l.slot)
    }

    pub fn line_radius(&self) -> i64 {
        self.line_radius
    }

    pub fn mu(&self) -> u64 {
        self.mu
    }

    pub fn lip(&self) -> u64 {
        self.lip
    }

    fn line_width(&self) -> usize {
        (2 * self.line_radius + 1) as usize
    }

    /// Number of vertices of `F`.
    pub fn point_count(&self) -> usize {
        self.base.len() + self.lines.len() * self.line_width()
    }

    /// Dense local index: base vertices first, then lines slot by slot.
    pub fn index(&self, x: PieceVertex) -> Option<usize> {
        match x {
            PieceVertex::Base(b) => (b < self.base.len()).then_some(b),
            PieceVertex::Line { slot, t } => (slot < self.lines.len() && t.abs() <= self.line_radius)
                .then(|| self.base.len() + slot * self.line_width() + (t + self.line_radius) as usize),
        }
    }

    pub fn point(&self, idx: usize) -> PieceVertex {
        let nb = self.base.len();
        if idx < nb {
            PieceVertex::Base(idx)
        } else {
            let k = idx - nb;
            PieceVertex::Line {
                slot: k / self.line_width(),
                t: (k % self.line_width()) as i64 - self.line_radius,
            }
        }
    }

    pub fn points(&self) -> impl Iterator<Item = PieceVertex> + '_ {
        (0..self.point_count()).map(|i| self.point(i))
    }

    /// Edges of `F` as local index pairs: base edges, unit line edges, and
    /// tethers of length `mu`.
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        let mut out: Vec<_> = self.base.edges().to_vec();
        for line in &self.lines {
            for t in -self.line_radius..=self.line_radius {
                let here = self.index(PieceVertex::Line { slot: line.slot, t }).unwrap();
                if t < self.line_radius {
                    out.push((here, here + 1, 1));
                }
                out.push((here, line.shadow.at(t).unwrap(), self.mu));
            }
        }
        out
    }

    /// The retraction `r: F -> T`.
    pub fn retract(&self, x: PieceVertex) -> Result<Vertex, PieceError> {
        match x {
            PieceVertex::Base(b) if b < self.base.len() => Ok(b),
            PieceVertex::Line { slot, t } => self
                .lines
                .get(slot)
                .and_then(|l| l.shadow.at(t))
                .ok_or(PieceError::InvalidVertex(x)),
            _ => Err(PieceError::InvalidVertex(x)),
        }
    }

    /// Exact distances in `F` from one local index.
    pub fn distances_from(&self, src: usize) -> Vec<u64> {
        let n = self.point_count();
        let mut dist = vec![u64::MAX; n];
        dist[src] = 0;
        let mut heap = BinaryHeap::from([Reverse((0u64, src))]);
        while let Some(Reverse((d, v))) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(u, w) in &self.adj[self.adj_start[v]..self.adj_start[v + 1]] {
                let nd = d + w;
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push(Reverse((nd, u)));
                }
            }
        }
        dist
    }

    pub fn distance(&self, a: PieceVertex, b: PieceVertex) -> Result<u64, PieceError> {
        let ia = self.index(a).ok_or(PieceError::InvalidVertex(a))?;
        let ib = self.index(b).ok_or(PieceError::InvalidVertex(b))?;
        Ok(self.distances_from(ia)[ib])
    }

    /// Exhaustive audit of the piece axioms on the truncation.
    pub fn verify_axioms(&self) -> AxiomReport {
        let nb = self.base.len();
        let mut max_displacement = 0;
        let mut lines = Vec::new();
        let mut local_seen = HashSet::new();
        let mut disjoint = true;
        for line in &self.lines {
            let mut injective = true;
            let mut unit_speed = true;
            let mut images = HashSet::new();
            let width = self.line_width();
            let start = self.index(PieceVertex::Line { slot: line.slot, t: -self.line_radius }).unwrap();
            for (k, (t, shadow)) in line.shadow.iter().enumerate() {
                let idx = start + k;
                disjoint &= idx >= nb && local_seen.insert(idx);
                injective &= images.insert(shadow);
                let dist = self.distances_from(idx);
                max_displacement = max_displacement.max(dist[shadow]);
                for j in 0..width {
                    let s = j as i64 - self.line_radius;
                    unit_speed &= dist[start + j] == (s - t).unsigned_abs();
                }
            }
            lines.push(LineAxioms {
                slot: line.slot,
                injective,
                unit_speed,
                shadow_geodesic: line.shadow.verify(&self.base).is_ok(),
            });
        }

        let mut lipschitz_num = 0;
        let mut lipschitz_den = 1;
        let mut lipschitz_ok = true;
        for (a, b, w) in self.edges() {
            let ra = self.retract(self.point(a)).unwrap();
            let rb = self.retract(self.point(b)).unwrap();
            let d = self.base.distance(ra, rb).unwrap();
            if d * lipschitz_den > lipschitz_num * w {
                lipschitz_num = d;
                lipschitz_den = w;
            }
            lipschitz_ok &= d <= self.lip * w;
        }
        let measured_lipschitz = lipschitz_num as f64 / lipschitz_den as f64;

        let passes = max_displacement <= self.mu
            && lipschitz_ok
            && disjoint
            && lines.iter().all(|l| l.injective && l.unit_speed && l.shadow_geodesic);
        AxiomReport {
            mu: self.mu,
            lip: self.lip,
            max_displacement,
            measured_lipschitz,
            lipschitz_ok,
            lines_disjoint: disjoint,
            lines,
            passes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineAxioms {
    pub slot: usize,
    pub injective: bool,
    pub unit_speed: bool,
    pub shadow_geodesic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub mu: u64,
    pub lip: u64,
    pub max_displacement: u64,
    pub measured_lipschitz: f64,
    pub lipschitz_ok: bool,
    pub lines_disjoint: bool,
    pub lines: Vec<LineAxioms>,
    pub passes: bool,
}

/// `count` geodesic lines through `center`, each choosing two distinct
/// branches at the center and then descending one random child per step.
/// Choices are drawn depth by depth, so a longer line extends a shorter one
/// drawn with the same `(seed, stream)`.
pub fn seeded_center_lines(
    base: &MetricTree,
    center: Vertex,
    count: usize,
    radius: i64,
    seed: u64,
    stream: u64,
) -> Result<Vec<TreeLine>, PieceError> {
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream.wrapping_mul(1 << 16).wrapping_add(k as u64));
        let mut plus = vec![center];
        let mut minus = vec![center];
        if radius > 0 {
            let branches: Vec<Vertex> = base.neighbors(center).iter().map(|&(u, _)| u).collect();
            if branches.len() < 2 {
                return Err(PieceError::BaseTooSmall(format!(
                    "center {center} has {} branches, a line needs 2",
                    branches.len()
                )));
            }
            let i = rng.gen_range(0..branches.len());
            let mut j = rng.gen_range(0..branches.len() - 1);
            if j >= i {
                j += 1;
            }
            plus.push(branches[i]);
            minus.push(branches[j]);
            for _ in 1..radius {
                for side in [&mut plus, &mut minus] {
                    let here = side[side.len() - 1];
                    let back = side[side.len() - 2];
                    let onward: Vec<Vertex> = base
                        .neighbors(here)
                        .iter()
                        .map(|&(u, _)| u)
                        .filter(|&u| u != back)
                        .collect();
                    if onward.is_empty() {
                        return Err(PieceError::BaseTooSmall(format!(
                            "no geodesic of radius {radius} through {center}"
                        )));
                    }
                    side.push(onward[rng.gen_range(0..onward.len())]);
                }
            }
        }
        let params: Vec<Vertex> = minus.iter().rev().chain(plus.iter().skip(1)).copied().collect();
        out.push(TreeLine::new(base, radius, 1, params)?);
    }
    Ok(out)
}

const A: u8 = 0;
const A_INV: u8 = 1;
const B: u8 = 2;
const B_INV: u8 = 3;

fn inverse(g: u8) -> u8 {
    g ^ 1
}

/// Ball in the Cayley tree of `F(a, b)`, vertices numbered breadth-first
/// over reduced words.
struct FreeGroupBall {
    words: Vec<Vec<u8>>,
    id: HashMap<Vec<u8>, Vertex>,
    edges: Vec<(Vertex, Vertex, u64)>,
}

impl FreeGroupBall {
    fn new(radius: usize) -> Self {
        let mut words = vec![Vec::new()];
        let mut id = HashMap::from([(Vec::new(), 0)]);
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            let word = words[v].clone();
            if word.len() == radius {
                continue;
            }
            for g in [A, A_INV, B, B_INV] {
                if word.last() == Some(&inverse(g)) {
                    continue;
                }
                let mut next = word.clone();
                next.push(g);
                let u = words.len();
                id.insert(next.clone(), u);
                words.push(next);
                edges.push((v, u, 1));
                queue.push_back(u);
            }
        }
        Self { words, id, edges }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::TreeSpec;

    fn path_piece() -> Piece {
        let base = MetricTree::build(&TreeSpec::path(9)).unwrap();
        let shadow = TreeLine::new(&base, 4, 1, (0..9).collect()).unwrap();
        Piece::synthetic(base, 4, 4, vec![Some(0)], vec![shadow], 4).unwrap()
    }

    #[test]
    fn synthetic_piece_shape() {
        let p = path_piece();
        assert_eq!(p.point_count(), 18);
        let tethers = p.edges().iter().filter(|&&(a, b, _)| (a < 9) != (b < 9)).count();
        assert_eq!(tethers, 9);
    }

    #[test]
    fn synthetic_axioms() {
        let report = path_piece().verify_axioms();
        assert!(report.passes, "{report:?}");
        assert_eq!(report.max_displacement, 1);
        assert!(report.measured_lipschitz <= 1.0);
    }

    #[test]
    fn line_distance_beats_base_detour() {
        let p = path_piece();
        let a = PieceVertex::Line { slot: 0, t: -3 };
        let b = PieceVertex::Line { slot: 0, t: 3 };
        assert_eq!(p.distance(a, b).unwrap(), 6);
    }

    #[test]
    fn retraction() {
        let p = path_piece();
        assert_eq!(p.retract(PieceVertex::Base(3)).unwrap(), 3);
        assert_eq!(p.retract(PieceVertex::Line { slot: 0, t: 2 }).unwrap(), 6);
        let r = p.retract(PieceVertex::Line { slot: 0, t: 2 }).unwrap();
        assert_eq!(p.retract(PieceVertex::Base(r)).unwrap(), r);
        assert!(p.retract(PieceVertex::Line { slot: 1, t: 0 }).is_err());
        assert!(p.retract(PieceVertex::Line { slot: 0, t: 5 }).is_err());
        let images: HashSet<_> = (-4..=4)
            .map(|t| p.retract(PieceVertex::Line { slot: 0, t }).unwrap())
            .collect();
        assert_eq!(images.len(), 9);
    }

    #[test]
    fn synthetic_rejects_bad_lines() {
        let base = MetricTree::build(&TreeSpec::path(9)).unwrap();
        let bent = TreeLine::new_unchecked(4, 1, vec![0, 1, 2, 3, 4, 6, 5, 7, 8]).unwrap();
        let err = Piece::synthetic(base.clone(), 4, 4, vec![Some(0)], vec![bent], 4).unwrap_err();
        assert!(matches!(err, PieceError::NotGeodesic { slot: 0, .. }));
        let err = Piece::synthetic(base, 4, 4, vec![], vec![], 4).unwrap_err();
        assert_eq!(err, PieceError::NoIncidentEdges);
    }

    #[test]
    fn pants_piece() {
        let p = Piece::pants(3, 1, &[0, 1, 2]).unwrap();
        assert_eq!(p.base().len(), 53);
        let ab = &p.lines()[2].shadow;
        assert_eq!(p.base().distance(ab.at(0).unwrap(), ab.at(1).unwrap()).unwrap(), 2);
        let report = p.verify_axioms();
        assert!(report.passes, "{report:?}");
        assert_eq!(report.measured_lipschitz, 2.0);
        assert!(report.lines.iter().all(|l| l.injective));
        assert!(matches!(
            Piece::pants(6, 3, &[0, 1, 2, 3]),
            Err(PieceError::TooManyEdges { requested: 4, max: 3 })
        ));
        assert!(matches!(Piece::pants(3, 2, &[0]), Err(PieceError::BaseTooSmall(_))));
    }

    #[test]
    fn pants_lines_injective_over_radius_three() {
        let p = Piece::pants(6, 3, &[0, 1, 2]).unwrap();
        for line in p.lines() {
            let images: HashSet<_> = line.shadow.iter().map(|(_, v)| v).collect();
            assert_eq!(images.len(), 7);
        }
    }

    #[test]
    fn seeded_lines_extend() {
        let small = MetricTree::build(&TreeSpec::regular(3, 3)).unwrap();
        let big = MetricTree::build(&TreeSpec::regular(3, 5)).unwrap();
        let a = seeded_center_lines(&small, 0, 3, 3, 11, 4).unwrap();
        let b = seeded_center_lines(&big, 0, 3, 5, 11, 4).unwrap();
        for (la, lb) in a.iter().zip(&b) {
            for t in -3..=3 {
                assert_eq!(la.at(t), lb.at(t));
            }
        }
        assert!(seeded_center_lines(&small, 0, 1, 4, 11, 4).is_err());
    }
}
