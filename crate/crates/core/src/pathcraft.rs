//! Explicit paths realizing the lower bound of the embedding.
//!
//! For `x` in `X_{v_0}` and `y` in `X_{v_n}` with Bass–Serre geodesic
//! `v_0, ..., v_n`, the path is a concatenation of horizontal segments
//! `gamma_j = alpha_j x {t_j}` in `X_{v_j}`, joined by jumps of two tethers
//! (at most `2 mu`) through the glued boundary plane between `v_j` and
//! `v_{j+1}`.
//!
//! `alpha_j` runs inside the image of `T_{v_j}` in the quotient tree of its
//! parity, along the geodesic from `f_i(x)` to `f_i(y)`. The crossing from
//! `alpha_{j-1}` to `alpha_{j+1}` is the projection of the previous crossing
//! onto the glued line carried by `v_j`, and `t_j` is the parameter of that
//! crossing on the shadow lines. `t_0` is the fiber level of `x` and `t_n` the
//! fiber level of `y`.

use serde::Serialize;
use thiserror::Error;

use crate::complex::{ComplexError, Parity, Site, TotalComplex};
use crate::embedding::{EmbedError, Embedding, InstanceConstants};
use crate::piece::PieceVertex;
use crate::quotient::{ClassId, QuotientError};
use crate::tree::{MetricTree, TreeLine};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    /// The construction needs a point the truncation does not contain.
    #[error("truncation: {0}")]
    Truncation(String),
    /// The crossing class is not a parameter point of the shadow line.
    #[error("crossing into piece {piece} at base vertex {vertex} is not a line parameter")]
    OffLattice { piece: usize, vertex: usize },
    /// The convex-image chaining broke; contradicts the quotient structure.
    #[error("chaining failed: {0}")]
    Chaining(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
}

impl PathError {
    pub fn is_truncation(&self) -> bool {
        matches!(self, PathError::Truncation(_))
    }
}

impl From<EmbedError> for PathError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::OutsideWindow { .. } | EmbedError::NoNeighbor { .. } => PathError::Truncation(e.to_string()),
            EmbedError::Complex(c) => PathError::Complex(c),
            EmbedError::Quotient(q) => PathError::Quotient(q),
            other => PathError::Chaining(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SegmentRecord {
    pub j: usize,
    pub piece: usize,
    pub parity: Parity,
    pub alpha_start: ClassId,
    pub alpha_end: ClassId,
    pub alpha_length: u64,
    pub level: i64,
    /// Indices into the vertex sequence where `gamma_j` starts and ends.
    pub start: usize,
    pub end: usize,
    pub jump_to_next: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecialPath {
    pub x: u32,
    pub y: u32,
    pub bs_path: Vec<usize>,
    pub vertices: Vec<u32>,
    pub segments: Vec<SegmentRecord>,
    pub d1: u64,
    pub d2: u64,
}

impl SpecialPath {
    /// Number of Bass–Serre edges crossed.
    pub fn n(&self) -> u64 {
        self.bs_path.len().saturating_sub(1) as u64
    }

    pub fn bound(&self, k: &InstanceConstants) -> u64 {
        k.path_bound(self.n(), self.d1, self.d2)
    }

    pub fn ledger_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }
}

/// Vertices of the Bass–Serre geodesic from `v` to `v2`.
pub fn bs_geodesic(t0: &MetricTree, v: usize, v2: usize) -> Result<Vec<usize>, ComplexError> {
    t0.geodesic(v, v2).map_err(|_| ComplexError::UnknownVertex(v.max(v2) as u32))
}

fn shadow_toward(c: &TotalComplex, v: usize, w: usize) -> Result<(usize, &TreeLine), PathError> {
    let e = c
        .bs()
        .edge_between(v, w)
        .ok_or_else(|| PathError::Chaining(format!("pieces {v} and {w} are not adjacent")))?;
    let piece = c.piece(v);
    let slot = piece
        .slot_of_edge(e)
        .ok_or_else(|| PathError::Chaining(format!("piece {v} has no line for edge {e}")))?;
    Ok((slot, &piece.line(slot).unwrap().shadow))
}

struct Builder<'c> {
    c: &'c TotalComplex,
    vertices: Vec<u32>,
}

impl Builder<'_> {
    fn push(&mut self, s: Site) -> Result<(), PathError> {
        let id = self
            .c
            .id_of(&s)
            .ok_or_else(|| PathError::Truncation(format!("{s:?} lies outside the truncation")))?;
        if self.vertices.last() != Some(&id) {
            self.vertices.push(id);
        }
        Ok(())
    }

    fn last(&self) -> usize {
        self.vertices.len() - 1
    }
}

pub fn build_special_path(emb: &Embedding, x: u32, y: u32) -> Result<SpecialPath, PathError> {
    let c = emb.complex;
    let sx = c.site(x)?;
    let sy = c.site(y)?;
    if x == y {
        return Ok(SpecialPath {
            x,
            y,
            bs_path: vec![sx.piece],
            vertices: vec![x],
            segments: Vec::new(),
            d1: 0,
            d2: 0,
        });
    }
    let path = bs_geodesic(c.bs().tree(), sx.piece, sy.piece)?;
    let n = path.len() - 1;
    let parity_of = |j: usize| c.bs().parity(path[j]);

    let a = [emb.fi_site(Parity::One, &sx)?, emb.fi_site(Parity::Two, &sx)?];
    let b = [emb.fi_site(Parity::One, &sy)?, emb.fi_site(Parity::Two, &sy)?];
    let slot = |p: Parity| p.index() - 1;

    // Crossings on the glued lines carried by interior pieces.
    let mut crossing: Vec<Option<ClassId>> = vec![None; n + 1];
    let mut cursor = a;
    for j in 1..n {
        let p = parity_of(j).other();
        let q = emb.quotient(p);
        let line = q
            .line_classes(path[j])
            .ok_or_else(|| PathError::Chaining(format!("no glued line at piece {}", path[j])))?;
        let cross = q.project(line, cursor[slot(p)])?;
        crossing[j] = Some(cross);
        cursor[slot(p)] = cross;
    }
    // The crossings must lie in order on the geodesic from f_i(x) to f_i(y).
    let mut d = [0u64; 2];
    for p in [Parity::One, Parity::Two] {
        let q = emb.quotient(p);
        let mut at = a[slot(p)];
        let mut walked = 0;
        for j in 1..n {
            if parity_of(j) != p {
                let cross = crossing[j].unwrap();
                walked += q.distance(at, cross)?;
                at = cross;
            }
        }
        walked += q.distance(at, b[slot(p)])?;
        d[slot(p)] = q.distance(a[slot(p)], b[slot(p)])?;
        if walked != d[slot(p)] {
            return Err(PathError::Chaining(format!(
                "crossings in T{} walk {walked}, geodesic has length {}",
                p.index(),
                d[slot(p)]
            )));
        }
    }

    // Fiber levels.
    let mut level = vec![0i64; n + 1];
    level[0] = sx.z;
    level[n] = sy.z;
    for j in 1..n {
        let q = emb.quotient(parity_of(j).other());
        let cross = crossing[j].unwrap();
        let mut params = Vec::new();
        for nb in [path[j - 1], path[j + 1]] {
            let (_, shadow) = shadow_toward(c, nb, path[j])?;
            let vertex = q
                .member_in(cross, nb)
                .ok_or_else(|| PathError::Chaining(format!("crossing class misses piece {nb}")))?;
            params.push(shadow.param_of(vertex).ok_or(PathError::OffLattice { piece: nb, vertex })?);
        }
        if params[0] != params[1] {
            return Err(PathError::Chaining(format!("crossing at piece {} has parameters {params:?}", path[j])));
        }
        level[j] = params[0];
    }

    let mut builder = Builder { c, vertices: vec![x] };
    let retract_x = c.piece(sx.piece).retract(sx.point).map_err(|e| PathError::Chaining(e.to_string()))?;
    builder.push(Site { piece: sx.piece, point: PieceVertex::Base(retract_x), z: sx.z })?;
    if n == 0 {
        let step = if sy.z >= sx.z { 1 } else { -1 };
        let mut z = sx.z;
        while z != sy.z {
            z += step;
            builder.push(Site { piece: sx.piece, point: PieceVertex::Base(retract_x), z })?;
        }
    }

    let mut segments = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let v = path[j];
        let p = parity_of(j);
        let q = emb.quotient(p);
        let start = if j <= 1 { a[slot(p)] } else { crossing[j - 1].unwrap() };
        let end = if j + 1 >= n { b[slot(p)] } else { crossing[j + 1].unwrap() };
        let sb = q
            .member_in(start, v)
            .ok_or_else(|| PathError::Chaining(format!("alpha_{j} start misses piece {v}")))?;
        let eb = q
            .member_in(end, v)
            .ok_or_else(|| PathError::Chaining(format!("alpha_{j} end misses piece {v}")))?;
        let z = if n == 0 { sy.z } else { level[j] };
        let expected = c
            .id_of(&Site { piece: v, point: PieceVertex::Base(sb), z })
            .ok_or_else(|| PathError::Truncation(format!("alpha_{j} start outside truncation")))?;
        if builder.vertices.last() != Some(&expected) {
            return Err(PathError::Chaining(format!("gamma_{j} does not start where the previous leg ended")));
        }
        let seg_start = builder.last();
        let base = c.piece(v).base();
        for bv in base.geodesic(sb, eb).map_err(|e| PathError::Chaining(e.to_string()))?.into_iter().skip(1) {
            builder.push(Site { piece: v, point: PieceVertex::Base(bv), z })?;
        }
        let seg_end = builder.last();
        let alpha_length = base.distance(sb, eb).unwrap();

        let mut jump = None;
        if j < n {
            let next = path[j + 1];
            let (out_slot, out_shadow) = shadow_toward(c, v, next)?;
            let (in_slot, in_shadow) = shadow_toward(c, next, v)?;
            if out_shadow.at(level[j + 1]) != Some(eb) {
                return Err(PathError::Chaining(format!("alpha_{j} does not end on the line toward {next}")));
            }
            builder.push(Site { piece: v, point: PieceVertex::Line { slot: out_slot, t: level[j + 1] }, z })?;
            builder.push(Site { piece: next, point: PieceVertex::Line { slot: in_slot, t: z }, z: level[j + 1] })?;
            let landing = in_shadow
                .at(z)
                .ok_or_else(|| PathError::Truncation(format!("level {z} beyond the line of piece {next}")))?;
            builder.push(Site { piece: next, point: PieceVertex::Base(landing), z: level[j + 1] })?;
            let w: u64 = builder.vertices[seg_end..]
                .windows(2)
                .map(|p| u64::from(c.edge_weight(p[0], p[1]).unwrap_or(u32::MAX)))
                .sum();
            jump = Some(w);
        }
        segments.push(SegmentRecord {
            j,
            piece: v,
            parity: p,
            alpha_start: start,
            alpha_end: end,
            alpha_length,
            level: z,
            start: seg_start,
            end: seg_end,
            jump_to_next: jump,
        });
    }
    builder.push(sy)?;
    if builder.vertices.last() != Some(&y) {
        return Err(PathError::Chaining("path does not end at y".into()));
    }
    Ok(SpecialPath {
        x,
        y,
        bs_path: path,
        vertices: builder.vertices,
        segments,
        d1: d[0],
        d2: d[1],
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathReport {
    /// Index `k` such that `vertices[k]` and `vertices[k + 1]` are not adjacent.
    pub adjacency_failures: Vec<usize>,
    pub length: u64,
    pub segments_sum: u64,
    pub jumps_sum: u64,
    /// Legs from `x` to the first segment and from the last segment to `y`.
    pub ends_sum: u64,
    pub max_jump: u64,
    pub jumps_ok: bool,
    pub ledger_consistent: bool,
    pub accounting_ok: bool,
}

impl PathReport {
    pub fn valid(&self) -> bool {
        self.adjacency_failures.is_empty() && self.jumps_ok && self.ledger_consistent && self.accounting_ok
    }
}

/// Recomputes adjacency, segment lengths and jumps from the vertex sequence
/// and compares them with the ledger.
pub fn validate_path(c: &TotalComplex, p: &SpecialPath) -> PathReport {
    let weight = |k: usize| c.edge_weight(p.vertices[k], p.vertices[k + 1]).map(u64::from);
    let adjacency_failures: Vec<usize> = (0..p.vertices.len().saturating_sub(1))
        .filter(|&k| weight(k).is_none())
        .collect();
    let span = |from: usize, to: usize| -> u64 { (from..to).filter_map(weight).sum() };
    let length = span(0, p.vertices.len().saturating_sub(1));

    let mut segments_sum = 0;
    let mut jumps_sum = 0;
    let mut max_jump = 0;
    let mut ledger_consistent = p.vertices.first() == Some(&p.x) && p.vertices.last() == Some(&p.y);
    for (k, seg) in p.segments.iter().enumerate() {
        let len = span(seg.start, seg.end);
        segments_sum += len;
        ledger_consistent &= len == seg.alpha_length;
        if let Some(next) = p.segments.get(k + 1) {
            let jump = span(seg.end, next.start);
            jumps_sum += jump;
            max_jump = max_jump.max(jump);
            ledger_consistent &= seg.jump_to_next == Some(jump);
        } else {
            ledger_consistent &= seg.jump_to_next.is_none();
        }
    }
    let ends_sum = match (p.segments.first(), p.segments.last()) {
        (Some(first), Some(last)) => span(0, first.start) + span(last.end, p.vertices.len() - 1),
        _ => length,
    };
    PathReport {
        accounting_ok: length == segments_sum + jumps_sum + ends_sum,
        jumps_ok: max_jump <= 2 * c.mu(),
        adjacency_failures,
        length,
        segments_sum,
        jumps_sum,
        ends_sum,
        max_jump,
        ledger_consistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::theoretical_constants;
    use crate::harness::{fixture, Instance};

    fn instance(name: &str) -> Instance {
        Instance::build(&fixture(name).unwrap()).unwrap()
    }

    fn id(c: &TotalComplex, piece: usize, b: usize, z: i64) -> u32 {
        c.id_of(&Site { piece, point: PieceVertex::Base(b), z }).unwrap()
    }

    #[test]
    fn bass_serre_geodesics() {
        let c = instance("instance-a").complex;
        assert_eq!(bs_geodesic(c.bs().tree(), 1, 1).unwrap(), vec![1]);
        assert_eq!(bs_geodesic(c.bs().tree(), 0, 2).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn trivial_path() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        let p = build_special_path(&emb, 5, 5).unwrap();
        assert_eq!(p.vertices, vec![5]);
        let r = validate_path(&inst.complex, &p);
        assert_eq!(r.length, 0);
        assert!(r.valid());
    }

    #[test]
    fn same_piece_path() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        let c = &inst.complex;
        let k = theoretical_constants(c);
        let (x, y) = (id(c, 0, 3, -2), id(c, 0, 17, 3));
        let p = build_special_path(&emb, x, y).unwrap();
        assert_eq!(p.n(), 0);
        assert_eq!(p.segments.len(), 1);
        let r = validate_path(c, &p);
        assert!(r.valid());
        assert!(r.length >= c.distance(x, y).unwrap());
        assert!(r.length <= p.d1 + p.d2 + 4 * k.mu);
    }

    #[test]
    fn cross_pairs_respect_both_bounds() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        let c = &inst.complex;
        let k = theoretical_constants(c);
        for (x, y) in c.sample_core_pairs(1, 300, 12).unwrap() {
            let p = build_special_path(&emb, x, y).unwrap();
            let r = validate_path(c, &p);
            assert!(r.valid(), "{r:?}");
            assert_eq!(r.length, r.segments_sum + r.jumps_sum + r.ends_sum);
            assert!(r.max_jump <= 2 * k.mu);
            assert!(r.length >= c.distance(x, y).unwrap());
            assert!(r.length <= p.bound(&k));
            let (px, py) = (emb.embed(x).unwrap(), emb.embed(y).unwrap());
            let (d0, d1, d2) = emb.coordinate_distances(&px, &py).unwrap();
            assert_eq!((p.d1, p.d2), (d1, d2));
            assert!(d0 + 2 >= p.n());
            for s in &p.segments {
                let q = emb.quotient(s.parity);
                assert_eq!(s.alpha_length, q.distance(s.alpha_start, s.alpha_end).unwrap());
            }
        }
    }

    #[test]
    fn ledger_round_trips_through_json() {
        let inst = instance("instance-b");
        let emb = inst.embedding().unwrap();
        let c = &inst.complex;
        let (x, y) = (id(c, 4, 2, 1), id(c, 9, 5, -2));
        let p = build_special_path(&emb, x, y).unwrap();
        let n = c.bs().tree().distance(4, 9).unwrap() as usize;
        assert_eq!(p.n() as usize, n);
        let v: serde_json::Value = serde_json::from_str(&p.ledger_json()).unwrap();
        assert_eq!(v["segments"].as_array().unwrap().len(), n + 1);
        assert_eq!(v["bs_path"].as_array().unwrap().len(), n + 1);
    }

    #[test]
    fn tampering_is_flagged() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        let c = &inst.complex;
        let (x, y) = (id(c, 0, 3, 1), id(c, 2, 9, -1));
        let mut p = build_special_path(&emb, x, y).unwrap();
        assert!(validate_path(c, &p).valid());
        let k = p.vertices.len() / 2;
        let far = (0..c.vertex_count() as u32)
            .find(|&v| c.edge_weight(p.vertices[k - 1], v).is_none() && v != p.vertices[k - 1])
            .unwrap();
        p.vertices[k] = far;
        let r = validate_path(c, &p);
        assert!(!r.valid());
        assert!(r.adjacency_failures.contains(&(k - 1)));
    }

    #[test]
    fn truncation_is_a_distinct_error() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        let c = &inst.complex;
        let x = id(c, 0, 0, 4);
        let y = id(c, 2, 0, -4);
        match build_special_path(&emb, x, y) {
            Ok(p) => assert!(validate_path(c, &p).valid()),
            Err(e) => assert!(e.is_truncation(), "{e}"),
        }
        let e: PathError = EmbedError::NoNeighbor { piece: 0, parity: Parity::One }.into();
        assert!(e.is_truncation());
        assert!(!PathError::Chaining("x".into()).is_truncation());
    }
}
