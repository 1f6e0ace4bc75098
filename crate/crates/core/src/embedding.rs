//! The coordinate maps `f0, f1, f2` and the product map into `T0 x T1 x T2`.
//!
//! * `f0(x)` is the piece of the canonical description of `x`.
//! * For a description `(v, p, z)` with `v` of parity `i`,
//!   `f_i = [r_v(p)]`, independent of `z`.
//! * For `w` of the other parity, `f_i = [shadow_(v,w)(z)]` for a neighbor
//!   `v` of `w`; the smallest neighbor is used and the choice does not
//!   matter, because all neighbors of `w` glue into one line.
//!
//! The product metric is the l1 sum of the three tree metrics.

use serde::Serialize;
use thiserror::Error;

use crate::complex::{ComplexError, Parity, Site, TotalComplex};
use crate::piece::PieceError;
use crate::quotient::{ClassId, QuotientError, QuotientTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbedError {
    #[error("fiber level {z} of {site:?} lies outside the glued window of every neighbor")]
    OutsideWindow { site: Site, z: i64 },
    #[error("piece {piece} has no neighbor of parity {}", parity.index())]
    NoNeighbor { piece: usize, parity: Parity },
    #[error("quotient tree of parity {} supplied where {} was expected", got.index(), expected.index())]
    ParityMismatch { expected: Parity, got: Parity },
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error(transparent)]
    Piece(#[from] PieceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ProductPoint {
    pub t0: usize,
    pub t1: ClassId,
    pub t2: ClassId,
}

/// Constants of the two-sided estimate, instantiated for one complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstanceConstants {
    pub mu: u64,
    pub lip: u64,
    /// Measured separation of pieces at Bass–Serre distance 2; `None` when
    /// no such pair exists (then `T0` has diameter at most 1).
    pub rho: Option<u64>,
}

impl InstanceConstants {
    /// `d1 + d2 + 2 mu d0 + 4 mu`.
    pub fn lower_bound(&self, d0: u64, d1: u64, d2: u64) -> u64 {
        d1 + d2 + 2 * self.mu * d0 + 4 * self.mu
    }

    /// Bound on the constructed path when the Bass–Serre geodesic has `n` edges.
    pub fn path_bound(&self, n: u64, d1: u64, d2: u64) -> u64 {
        d1 + d2 + 2 * self.mu * n + 4 * self.mu
    }

    /// `d_i <= L d`.
    pub fn coordinate_ok(&self, di: u64, d: u64) -> bool {
        di <= self.lip * d
    }

    /// `d0 <= d / rho + 1`, compared exactly as `d0 * rho <= d + rho`.
    pub fn f0_ok(&self, d0: u64, d: u64) -> bool {
        match self.rho {
            Some(rho) => d0 * rho <= d + rho,
            None => d0 <= 1,
        }
    }

    /// `d_l1 <= (2L + 1/rho) d + 1`, compared exactly.
    pub fn expansion_ok(&self, d_l1: u64, d: u64) -> bool {
        match self.rho {
            Some(rho) => rho * d_l1 <= (2 * self.lip * rho + 1) * d + rho,
            None => d_l1 <= 2 * self.lip * d + 1,
        }
    }

    /// `d <= max(1, 2 mu) d_l1 + 4 mu`.
    pub fn contraction_ok(&self, d: u64, d_l1: u64) -> bool {
        d <= (2 * self.mu).max(1) * d_l1 + 4 * self.mu
    }

    /// Upper envelope of `d_l1 / d` for pairs at distance `d`.
    pub fn expansion_envelope(&self, d: u64) -> f64 {
        let slope = 2.0 * self.lip as f64 + self.rho.map_or(0.0, |r| 1.0 / r as f64);
        slope + 1.0 / d.max(1) as f64
    }

    /// Upper envelope of `d / d_l1` for pairs with product distance `dl1`.
    pub fn contraction_envelope(&self, dl1: u64) -> f64 {
        (2 * self.mu).max(1) as f64 + (4 * self.mu) as f64 / dl1.max(1) as f64
    }
}

pub fn theoretical_constants(c: &TotalComplex) -> InstanceConstants {
    InstanceConstants { mu: c.mu(), lip: c.lip(), rho: c.rho_hat() }
}

/// The product map over a complex and its two quotient trees.
#[derive(Debug, Clone, Copy)]
pub struct Embedding<'a> {
    pub complex: &'a TotalComplex,
    pub t1: &'a QuotientTree,
    pub t2: &'a QuotientTree,
}

impl<'a> Embedding<'a> {
    pub fn new(complex: &'a TotalComplex, t1: &'a QuotientTree, t2: &'a QuotientTree) -> Result<Self, EmbedError> {
        for (q, expected) in [(t1, Parity::One), (t2, Parity::Two)] {
            if q.parity() != expected {
                return Err(EmbedError::ParityMismatch { expected, got: q.parity() });
            }
        }
        Ok(Self { complex, t1, t2 })
    }

    pub fn quotient(&self, parity: Parity) -> &'a QuotientTree {
        match parity {
            Parity::One => self.t1,
            Parity::Two => self.t2,
        }
    }

    pub fn f0(&self, x: u32) -> Result<usize, EmbedError> {
        Ok(self.complex.site(x)?.piece)
    }

    pub fn fi(&self, parity: Parity, x: u32) -> Result<ClassId, EmbedError> {
        self.fi_site(parity, &self.complex.site(x)?)
    }

    /// `f_i` evaluated through a particular description of a vertex.
    pub fn fi_site(&self, parity: Parity, s: &Site) -> Result<ClassId, EmbedError> {
        let c = self.complex;
        if c.bs().parity(s.piece) == parity {
            let b = c.piece(s.piece).retract(s.point)?;
            return Ok(self.quotient(parity).class_of(s.piece, b)?);
        }
        let v = *c
            .bs()
            .neighbors(s.piece)
            .first()
            .ok_or(EmbedError::NoNeighbor { piece: s.piece, parity })?;
        self.fi_via_neighbor(parity, s, v)
    }

    /// Opposite-parity case of `f_i`, computed through neighbor `v`.
    pub fn fi_via_neighbor(&self, parity: Parity, s: &Site, v: usize) -> Result<ClassId, EmbedError> {
        let c = self.complex;
        let e = c
            .bs()
            .edge_between(v, s.piece)
            .ok_or(EmbedError::NoNeighbor { piece: s.piece, parity })?;
        let piece = c.piece(v);
        let slot = piece.slot_of_edge(e).expect("complex build checked line assignment");
        if s.z.abs() > piece.line_radius().min(c.fiber_radius()) {
            return Err(EmbedError::OutsideWindow { site: *s, z: s.z });
        }
        let b = piece.line(slot).unwrap().shadow.at(s.z).unwrap();
        Ok(self.quotient(parity).class_of(v, b)?)
    }

    pub fn embed(&self, x: u32) -> Result<ProductPoint, EmbedError> {
        let s = self.complex.site(x)?;
        Ok(ProductPoint {
            t0: s.piece,
            t1: self.fi_site(Parity::One, &s)?,
            t2: self.fi_site(Parity::Two, &s)?,
        })
    }

    /// Coordinate distances `(d0, d1, d2)`.
    pub fn coordinate_distances(&self, p: &ProductPoint, q: &ProductPoint) -> Result<(u64, u64, u64), EmbedError> {
        let d0 = self
            .complex
            .bs()
            .tree()
            .distance(p.t0, q.t0)
            .map_err(|_| ComplexError::UnknownVertex(p.t0.max(q.t0) as u32))?;
        Ok((d0, self.t1.distance(p.t1, q.t1)?, self.t2.distance(p.t2, q.t2)?))
    }

    /// l1 product distance `d0 + d1 + d2`.
    pub fn product_distance(&self, p: &ProductPoint, q: &ProductPoint) -> Result<u64, EmbedError> {
        let (a, b, c) = self.coordinate_distances(p, q)?;
        Ok(a + b + c)
    }

    /// `vertex,t0,t1,t2` rows with quotient classes written as their
    /// `piece:vertex` representatives. Vertices outside the embedding's
    /// domain are skipped.
    pub fn dump_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("vertex,t0,t1,t2\n");
        for x in 0..self.complex.vertex_count() as u32 {
            let Ok(p) = self.embed(x) else { continue };
            let (a, b) = self.t1.representative(p.t1).unwrap();
            let (c, d) = self.t2.representative(p.t2).unwrap();
            let _ = writeln!(out, "{x},{},{a}:{b},{c}:{d}", p.t0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::harness::{fixture, Instance};
    use crate::piece::PieceVertex;

    fn instance(name: &str) -> Instance {
        Instance::build(&fixture(name).unwrap()).unwrap()
    }

    fn shadow_class(emb: &Embedding, v: usize, w: usize, t: i64) -> ClassId {
        let c = emb.complex;
        let e = c.bs().edge_between(v, w).unwrap();
        let p = c.piece(v);
        let b = p.line(p.slot_of_edge(e).unwrap()).unwrap().shadow.at(t).unwrap();
        emb.quotient(c.bs().parity(v)).class_of(v, b).unwrap()
    }

    #[test]
    fn f0_takes_the_smaller_piece_on_planes() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        let c = &inst.complex;
        for (a, b) in c.glued_pairs() {
            let x = c.id_of(&a).unwrap();
            assert_eq!(emb.f0(x).unwrap(), a.piece.min(b.piece));
            assert_eq!(c.bs().tree().distance(a.piece, b.piece).unwrap(), 1);
        }
        let x = c.id_of(&Site { piece: 1, point: PieceVertex::Base(5), z: 2 }).unwrap();
        assert_eq!(emb.f0(x).unwrap(), 1);
    }

    #[test]
    fn same_parity_ignores_the_fiber() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        for b in 0..inst.complex.piece(0).base().len() {
            let at = |z| emb.fi_site(Parity::One, &Site { piece: 0, point: PieceVertex::Base(b), z }).unwrap();
            assert_eq!(at(-3), at(4));
            assert_eq!(at(0), inst.quotients.as_ref().unwrap().0.class_of(0, b).unwrap());
        }
    }

    #[test]
    fn other_parity_reads_only_the_fiber() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        let c = &inst.complex;
        for z in -4..=4 {
            let expected = shadow_class(&emb, 0, 1, z);
            assert_eq!(expected, shadow_class(&emb, 2, 1, z));
            for p in c.piece(1).points() {
                assert_eq!(emb.fi_site(Parity::One, &Site { piece: 1, point: p, z }).unwrap(), expected);
            }
        }
    }

    #[test]
    fn root_point_embedding() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        let c = &inst.complex;
        let x = c.id_of(&Site { piece: 0, point: PieceVertex::Base(0), z: 0 }).unwrap();
        let p = emb.embed(x).unwrap();
        assert_eq!(p.t0, 0);
        assert_eq!(p.t1, inst.quotients.as_ref().unwrap().0.class_of(0, 0).unwrap());
        assert_eq!(p.t2, shadow_class(&emb, 1, 0, 0));
    }

    #[test]
    fn vertical_steps_move_only_the_other_tree() {
        let inst = instance("instance-b");
        let emb = inst.embedding().unwrap();
        let c = &inst.complex;
        for v in [0usize, 4] {
            let parity = c.bs().parity(v);
            for b in 0..10 {
                let at = |z| emb.embed(c.id_of(&Site { piece: v, point: PieceVertex::Base(b), z }).unwrap()).unwrap();
                let (p, q) = (at(0), at(1));
                assert_eq!(p.t0, q.t0);
                let (same, other) = match parity {
                    Parity::One => ((p.t1, q.t1), emb.t2.distance(p.t2, q.t2).unwrap()),
                    Parity::Two => ((p.t2, q.t2), emb.t1.distance(p.t1, q.t1).unwrap()),
                };
                assert_eq!(same.0, same.1);
                assert!(other <= 1);
            }
        }
    }

    #[test]
    fn product_distance_is_l1() {
        let inst = instance("instance-b");
        let emb = inst.embedding().unwrap();
        let n = inst.complex.vertex_count() as u32;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let [a, b, c] = [0; 3].map(|_| emb.embed(rng.gen_range(0..n)).unwrap());
            let d = |p: &ProductPoint, q: &ProductPoint| emb.product_distance(p, q).unwrap();
            let (d0, d1, d2) = emb.coordinate_distances(&a, &b).unwrap();
            assert_eq!(d(&a, &b), d0 + d1 + d2);
            assert_eq!(d(&a, &b), d(&b, &a));
            assert_eq!(d(&a, &a), 0);
            assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        }
        let p = emb.embed(0).unwrap();
        let q = ProductPoint { t0: 3, ..p };
        assert_eq!(emb.product_distance(&p, &q).unwrap(), inst.complex.bs().tree().distance(p.t0, 3).unwrap());
    }

    #[test]
    fn outside_the_glue_window() {
        let mut cfg = fixture("instance-a").unwrap();
        cfg.radii.line = 2;
        let inst = Instance::build(&cfg).unwrap();
        let emb = inst.embedding().unwrap();
        let s = Site { piece: 1, point: PieceVertex::Base(0), z: 3 };
        assert!(matches!(emb.fi_site(Parity::One, &s), Err(EmbedError::OutsideWindow { z: 3, .. })));
        assert!(emb.fi_site(Parity::Two, &s).is_ok());
    }

    #[test]
    fn constants() {
        let a = theoretical_constants(&instance("instance-a").complex);
        assert_eq!(a, InstanceConstants { mu: 1, lip: 1, rho: Some(2) });
        assert_eq!(a.lower_bound(1, 2, 3), 2 + 3 + 2 + 4);
        assert!(a.f0_ok(3, 4) && !a.f0_ok(4, 4));
        let p = theoretical_constants(&instance("pants-a").complex);
        assert_eq!(p.lip, 2);
        assert!(p.coordinate_ok(6, 3) && !p.coordinate_ok(7, 3));
        assert!(a.expansion_ok(11, 4) && !a.expansion_ok(12, 4));
        assert!(a.contraction_ok(10, 3) && !a.contraction_ok(11, 3));
        assert_eq!(a.expansion_envelope(4), 2.75);
        assert_eq!(a.contraction_envelope(4), 3.0);
    }

    #[test]
    fn dump_has_a_row_per_vertex() {
        let inst = instance("instance-a");
        let emb = inst.embedding().unwrap();
        let csv = emb.dump_csv();
        assert_eq!(csv.lines().next(), Some("vertex,t0,t1,t2"));
        assert_eq!(csv.lines().count(), inst.complex.vertex_count() + 1);
    }
}
