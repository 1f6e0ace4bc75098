//! The quotient trees `T1` and `T2`.
//!
//! For parity `i`, take the disjoint union of the base trees of the pieces of
//! parity `i`. For every piece `w` of the other parity and every pair of
//! neighbors `v, v'` of `w`, the shadows of the lines glued along `(v, w)` and
//! `(v', w)` are identified parameter by parameter; the union-find closure of
//! these identifications is the quotient. Between consecutive parameters the
//! geodesic segments are identified vertex by vertex when they have equal
//! length, so two isometric lines glue into one line.
//!
//! Tree-ness is certified, never assumed: any cycle in the quotient graph is a
//! fatal error carrying the offending cycle.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::complex::{Parity, TotalComplex};
use crate::tree::{MetricTree, Vertex};
use crate::union_find::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ClassId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuotientError {
    #[error("quotient T{} has a cycle through {cycle:?}{}", parity.index(), step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Cycle {
        parity: Parity,
        step: Option<usize>,
        /// Representatives `(piece, base vertex)` of the classes on the cycle.
        cycle: Vec<(usize, Vertex)>,
    },
    #[error("quotient T{} is disconnected ({classes} classes, {edges} edges)", parity.index())]
    Disconnected { parity: Parity, classes: usize, edges: usize },
    #[error("piece {piece} does not have parity {}", parity.index())]
    WrongParity { piece: usize, parity: Parity },
    #[error("piece {piece} has no base vertex {vertex}")]
    UnknownVertex { piece: usize, vertex: Vertex },
    #[error("unknown class {0:?}")]
    UnknownClass(ClassId),
}

#[derive(Debug, Clone, Serialize)]
pub struct GluingRecord {
    /// Opposite-parity piece whose boundary plane carries the gluing.
    pub via: usize,
    pub first: usize,
    pub second: usize,
    pub window: i64,
    pub glued_params: usize,
    pub class_merges: usize,
}

struct Layout {
    members: Vec<usize>,
    index_of: Vec<Option<usize>>,
    offset: Vec<usize>,
}

impl Layout {
    fn new(c: &TotalComplex, parity: Parity) -> Self {
        let members = c.bs().members(parity);
        let mut index_of = vec![None; c.bs().len()];
        let mut offset = vec![0];
        for (k, &v) in members.iter().enumerate() {
            index_of[v] = Some(k);
            offset.push(offset[k] + c.piece(v).base().len());
        }
        Self { members, index_of, offset }
    }

    fn flat(&self, v: usize, b: Vertex) -> usize {
        self.offset[self.index_of[v].expect("member piece")] + b
    }

    fn total(&self) -> usize {
        *self.offset.last().unwrap()
    }

    fn piece_of_flat(&self, f: usize) -> (usize, Vertex) {
        let k = self.offset.partition_point(|&o| o <= f) - 1;
        (self.members[k], f - self.offset[k])
    }
}

/// Parameter window glued at `w`: shadows and fiber levels all in range.
fn window_at(c: &TotalComplex, w: usize) -> i64 {
    c.bs()
        .neighbors(w)
        .iter()
        .map(|&v| c.piece(v).line_radius())
        .min()
        .unwrap_or(0)
        .min(c.fiber_radius())
}

fn shadow_toward(c: &TotalComplex, v: usize, w: usize) -> &crate::tree::TreeLine {
    let e = c.bs().edge_between(v, w).expect("adjacent pieces");
    let piece = c.piece(v);
    let slot = piece.slot_of_edge(e).expect("complex build checked line assignment");
    &piece.line(slot).unwrap().shadow
}

fn glue_pair(c: &TotalComplex, layout: &Layout, uf: &mut UnionFind, w: usize, v1: usize, v2: usize) -> GluingRecord {
    let window = window_at(c, w);
    let (sh1, sh2) = (shadow_toward(c, v1, w), shadow_toward(c, v2, w));
    let (t1, t2) = (c.piece(v1).base(), c.piece(v2).base());
    let mut merges = 0;
    for t in -window..=window {
        let a = layout.flat(v1, sh1.at(t).unwrap());
        let b = layout.flat(v2, sh2.at(t).unwrap());
        merges += usize::from(uf.union(a, b));
    }
    for t in -window..window {
        let seg1 = sh1.trace(t1, t, t + 1);
        let seg2 = sh2.trace(t2, t, t + 1);
        if seg1.len() == seg2.len() {
            for (&a, &b) in seg1.iter().zip(&seg2) {
                merges += usize::from(uf.union(layout.flat(v1, a), layout.flat(v2, b)));
            }
        }
    }
    GluingRecord {
        via: w,
        first: v1,
        second: v2,
        window,
        glued_params: (2 * window + 1) as usize,
        class_merges: merges,
    }
}

/// Returns a cycle (as class ids) if the graph on `n` vertices has one.
fn find_cycle(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a == b {
            return Some(vec![a]);
        }
        if !uf.union(a, b) {
            // path a -> b in the forest accepted so far
            let mut prev = vec![usize::MAX; n];
            prev[a] = a;
            let mut queue = VecDeque::from([a]);
            while let Some(v) = queue.pop_front() {
                if v == b {
                    break;
                }
                for &u in &adj[v] {
                    if prev[u] == usize::MAX {
                        prev[u] = v;
                        queue.push_back(u);
                    }
                }
            }
            let mut cycle = vec![b];
            let mut v = b;
            while v != a {
                v = prev[v];
                cycle.push(v);
            }
            return Some(cycle);
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    None
}

/// Quotient graph edges between classes, with length conflicts reported as
/// two-cycles.
fn class_edges(
    c: &TotalComplex,
    layout: &Layout,
    labels: &[usize],
    pieces: impl Iterator<Item = usize>,
) -> Result<Vec<(usize, usize, u64)>, Vec<usize>> {
    let mut seen: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for v in pieces {
        for &(a, b, len) in c.piece(v).base().edges() {
            let ca = labels[layout.flat(v, a)];
            let cb = labels[layout.flat(v, b)];
            if ca == cb {
                return Err(vec![ca]);
            }
            let key = (ca.min(cb), ca.max(cb));
            match seen.get(&key) {
                Some(&old) if old != len => return Err(vec![key.0, key.1]),
                _ => {
                    seen.insert(key, len);
                }
            }
        }
    }
    Ok(seen.into_iter().map(|((a, b), w)| (a, b, w)).collect())
}

#[derive(Debug, Clone)]
pub struct QuotientTree {
    parity: Parity,
    members: Vec<usize>,
    index_of: Vec<Option<usize>>,
    offset: Vec<usize>,
    class_of_flat: Vec<u32>,
    class_start: Vec<usize>,
    class_members: Vec<(usize, Vertex)>,
    tree: MetricTree,
    lines: BTreeMap<usize, Vec<ClassId>>,
    gluings: Vec<GluingRecord>,
}

impl QuotientTree {
    pub fn build(c: &TotalComplex, parity: Parity) -> Result<Self, QuotientError> {
        let layout = Layout::new(c, parity);
        let mut uf = UnionFind::new(layout.total());
        let mut gluings = Vec::new();
        for w in c.bs().members(parity.other()) {
            let nb = c.bs().neighbors(w);
            for &v in nb.iter().skip(1) {
                gluings.push(glue_pair(c, &layout, &mut uf, w, nb[0], v));
            }
        }
        let labels = uf.dense_labels();
        let classes = uf.sets();

        let mut class_members: Vec<Vec<(usize, Vertex)>> = vec![Vec::new(); classes];
        for (f, &l) in labels.iter().enumerate() {
            class_members[l].push(layout.piece_of_flat(f));
        }
        let rep_of = |l: usize| class_members[l][0];

        let edges = class_edges(c, &layout, &labels, layout.members.iter().copied()).map_err(|cyc| {
            QuotientError::Cycle { parity, step: None, cycle: cyc.into_iter().map(rep_of).collect() }
        })?;
        let pairs: Vec<_> = edges.iter().map(|&(a, b, _)| (a, b)).collect();
        if let Some(cyc) = find_cycle(classes, &pairs) {
            return Err(QuotientError::Cycle {
                parity,
                step: None,
                cycle: cyc.into_iter().map(rep_of).collect(),
            });
        }
        if classes > 0 && edges.len() + 1 != classes {
            return Err(QuotientError::Disconnected { parity, classes, edges: edges.len() });
        }
        let tree = MetricTree::from_edges(classes, &edges).map_err(|_| QuotientError::Disconnected {
            parity,
            classes,
            edges: edges.len(),
        })?;

        let mut lines = BTreeMap::new();
        for w in c.bs().members(parity.other()) {
            let nb = c.bs().neighbors(w);
            let Some(&v) = nb.first() else { continue };
            let window = window_at(c, w);
            let shadow = shadow_toward(c, v, w);
            let mut set: Vec<ClassId> = shadow
                .trace(c.piece(v).base(), -window, window)
                .into_iter()
                .map(|b| ClassId(labels[layout.flat(v, b)] as u32))
                .collect();
            set.sort_unstable();
            set.dedup();
            lines.insert(w, set);
        }

        let mut class_start = vec![0];
        let mut flat_members = Vec::with_capacity(layout.total());
        for m in class_members {
            flat_members.extend(m);
            class_start.push(flat_members.len());
        }
        Ok(Self {
            parity,
            members: layout.members,
            index_of: layout.index_of,
            offset: layout.offset,
            class_of_flat: labels.into_iter().map(|l| l as u32).collect(),
            class_start,
            class_members: flat_members,
            tree,
            lines,
            gluings,
        })
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Pieces whose base trees make up this quotient.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// The quotient as a metric tree on dense class ids.
    pub fn tree(&self) -> &MetricTree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn gluings(&self) -> &[GluingRecord] {
        &self.gluings
    }

    pub fn class_of(&self, v: usize, b: Vertex) -> Result<ClassId, QuotientError> {
        let k = self
            .index_of
            .get(v)
            .copied()
            .flatten()
            .ok_or(QuotientError::WrongParity { piece: v, parity: self.parity })?;
        if b >= self.offset[k + 1] - self.offset[k] {
            return Err(QuotientError::UnknownVertex { piece: v, vertex: b });
        }
        Ok(ClassId(self.class_of_flat[self.offset[k] + b]))
    }

    fn check(&self, c: ClassId) -> Result<usize, QuotientError> {
        let i = c.0 as usize;
        (i < self.len()).then_some(i).ok_or(QuotientError::UnknownClass(c))
    }

    pub fn members_of(&self, c: ClassId) -> Result<&[(usize, Vertex)], QuotientError> {
        let i = self.check(c)?;
        Ok(&self.class_members[self.class_start[i]..self.class_start[i + 1]])
    }

    /// Lexicographically smallest `(piece, base vertex)` in the class.
    pub fn representative(&self, c: ClassId) -> Result<(usize, Vertex), QuotientError> {
        Ok(self.members_of(c)?[0])
    }

    /// The vertex of `T_v` lying in class `c`, if any.
    pub fn member_in(&self, c: ClassId, v: usize) -> Option<Vertex> {
        self.members_of(c).ok()?.iter().find(|&&(p, _)| p == v).map(|&(_, b)| b)
    }

    pub fn distance(&self, a: ClassId, b: ClassId) -> Result<u64, QuotientError> {
        let (i, j) = (self.check(a)?, self.check(b)?);
        Ok(self.tree.distance(i, j).expect("checked classes"))
    }

    pub fn geodesic(&self, a: ClassId, b: ClassId) -> Result<Vec<ClassId>, QuotientError> {
        let (i, j) = (self.check(a)?, self.check(b)?);
        Ok(self.tree.geodesic(i, j).expect("checked classes").into_iter().map(|v| ClassId(v as u32)).collect())
    }

    /// Classes meeting the image of `T_v`, sorted.
    pub fn piece_image(&self, v: usize) -> Result<Vec<ClassId>, QuotientError> {
        let k = self
            .index_of
            .get(v)
            .copied()
            .flatten()
            .ok_or(QuotientError::WrongParity { piece: v, parity: self.parity })?;
        let mut out: Vec<ClassId> = self.class_of_flat[self.offset[k]..self.offset[k + 1]]
            .iter()
            .map(|&c| ClassId(c))
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Classes of the glued line carried by opposite-parity piece `w`.
    pub fn line_classes(&self, w: usize) -> Option<&[ClassId]> {
        self.lines.get(&w).map(Vec::as_slice)
    }

    pub fn lines(&self) -> impl Iterator<Item = (usize, &[ClassId])> {
        self.lines.iter().map(|(&w, s)| (w, s.as_slice()))
    }

    /// Nearest-point projection onto a connected class set.
    pub fn project(&self, set: &[ClassId], from: ClassId) -> Result<ClassId, QuotientError> {
        let i = self.check(from)?;
        let verts: Vec<usize> = set.iter().map(|c| c.0 as usize).collect();
        self.tree
            .project_to_subtree(&verts, i)
            .map(|v| ClassId(v as u32))
            .map_err(|_| QuotientError::UnknownClass(from))
    }

    /// DOT export; classes inside a single member tree take that tree's color,
    /// glued classes are drawn black.
    pub fn to_dot(&self) -> String {
        const PALETTE: [&str; 8] =
            ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
        let mut out = format!("graph T{} {{\n", self.parity.index());
        for c in 0..self.len() {
            let members = self.members_of(ClassId(c as u32)).unwrap();
            let (v, b) = members[0];
            let color = if members.iter().all(|&(p, _)| p == v) {
                let k = self.index_of[v].unwrap();
                PALETTE[k % PALETTE.len()]
            } else {
                "#000000"
            };
            let _ = writeln!(out, "  {c} [label=\"{v}:{b}\", color=\"{color}\"];");
        }
        for &(a, b, w) in self.tree.edges() {
            let _ = writeln!(out, "  {a} -- {b} [weight={w}];");
        }
        out.push_str("}\n");
        out
    }

    /// `class,size,members` rows; members are `piece:vertex` joined by `;`.
    pub fn class_audit_csv(&self) -> String {
        let mut out = String::from("class,size,members\n");
        for c in 0..self.len() {
            let members = self.members_of(ClassId(c as u32)).unwrap();
            let list: Vec<String> = members.iter().map(|(v, b)| format!("{v}:{b}")).collect();
            let _ = writeln!(out, "{c},{},{}", members.len(), list.join(";"));
        }
        out
    }
}

/// Builds `(T1, T2)`.
pub fn build_quotient_trees(c: &TotalComplex) -> Result<(QuotientTree, QuotientTree), QuotientError> {
    Ok((QuotientTree::build(c, Parity::One)?, QuotientTree::build(c, Parity::Two)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub piece: usize,
    /// Opposite-parity piece whose line the new tree is glued along.
    pub via: Option<usize>,
    pub glued_to: Option<usize>,
    pub class_merges: usize,
    pub classes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreenessTrace {
    pub parity: Parity,
    pub steps: Vec<TraceStep>,
}

/// Replays the construction of `T_i` one tree at a time, in breadth-first
/// order over the Bass–Serre tree, certifying that each intermediate space is
/// a tree.
pub fn incremental_treeness_trace(c: &TotalComplex, parity: Parity) -> Result<TreenessTrace, QuotientError> {
    let layout = Layout::new(c, parity);
    let mut steps = Vec::new();
    let Some(&start) = layout.members.first() else {
        return Ok(TreenessTrace { parity, steps });
    };

    // breadth-first order and parents in T0
    let n = c.bs().len();
    let mut parent = vec![usize::MAX; n];
    parent[start] = start;
    let mut order = Vec::new();
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        if c.bs().parity(v) == parity {
            order.push(v);
        }
        for u in c.bs().neighbors(v) {
            if parent[u] == usize::MAX {
                parent[u] = v;
                queue.push_back(u);
            }
        }
    }

    let mut uf = UnionFind::new(layout.total());
    let mut added: Vec<usize> = Vec::new();
    for (step, &v) in order.iter().enumerate() {
        let (via, glued_to, merges) = if step == 0 {
            (None, None, 0)
        } else {
            let w = parent[v];
            let anchor = parent[w];
            let rec = glue_pair(c, &layout, &mut uf, w, anchor, v);
            (Some(w), Some(anchor), rec.class_merges)
        };
        added.push(v);

        let flats: Vec<usize> = added
            .iter()
            .flat_map(|&p| (0..c.piece(p).base().len()).map(move |b| (p, b)))
            .map(|(p, b)| layout.flat(p, b))
            .collect();
        let mut dense: HashMap<usize, usize> = HashMap::new();
        let mut labels = vec![usize::MAX; layout.total()];
        let mut rep = Vec::new();
        for &f in &flats {
            let root = uf.find(f);
            let next = dense.len();
            let l = *dense.entry(root).or_insert_with(|| {
                rep.push(layout.piece_of_flat(f));
                next
            });
            labels[f] = l;
        }
        let classes = dense.len();
        let cycle_err = |cyc: Vec<usize>| QuotientError::Cycle {
            parity,
            step: Some(step),
            cycle: cyc.into_iter().map(|l| rep[l]).collect(),
        };
        let edges = class_edges(c, &layout, &labels, added.iter().copied()).map_err(cycle_err)?;
        let pairs: Vec<_> = edges.iter().map(|&(a, b, _)| (a, b)).collect();
        if let Some(cyc) = find_cycle(classes, &pairs) {
            return Err(cycle_err(cyc));
        }
        if edges.len() + 1 != classes {
            return Err(QuotientError::Disconnected { parity, classes, edges: edges.len() });
        }
        steps.push(TraceStep { step, piece: v, via, glued_to, class_merges: merges, classes, edges: edges.len() });
    }
    Ok(TreenessTrace { parity, steps })
}
