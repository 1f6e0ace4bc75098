use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::instance::Instance;
use crate::complex::{Parity, Site};
use crate::embedding::{EmbedError, Embedding, ProductPoint};
use crate::piece::{PieceKind, PieceVertex};
use crate::quotient::{incremental_treeness_trace, QuotientTree};

pub const INVARIANTS_SCHEMA_VERSION: u32 = 1;

/// Base trees up to this size are checked on all vertex pairs.
const EXHAUSTIVE_BASE: usize = 100;
const SAMPLED_BASE_PAIRS: usize = 2000;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub checked: u64,
    pub failures: u64,
    /// Cases left out because a coordinate fell outside the truncation.
    pub skipped: u64,
    pub detail: String,
}

impl Check {
    fn tally(name: &str, checked: u64, failures: u64, skipped: u64, detail: String) -> Self {
        Self { name: name.into(), passed: failures == 0, checked, failures, skipped, detail }
    }

    fn unavailable(name: &str, why: &str) -> Self {
        Self { name: name.into(), passed: false, checked: 0, failures: 0, skipped: 0, detail: why.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub schema_version: u32,
    pub checks: Vec<Check>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

pub fn run_invariants(inst: &Instance) -> InvariantReport {
    let mut checks = vec![bipartition(inst), piece_axioms(inst), flip_involution(inst), connected(inst)];
    checks.extend(treeness(inst));
    match inst.embedding() {
        Ok(emb) => {
            checks.push(convex_images(&emb, inst.config.seed));
            checks.push(fi_well_defined(&emb));
            checks.push(neighbor_independence(&emb));
            checks.push(lipschitz_scan(&emb));
        }
        Err(e) => {
            let why = format!("quotient trees unavailable: {e}");
            for name in ["convex_image_isometry", "fi_well_defined", "neighbor_independence", "lipschitz_scan"] {
                checks.push(Check::unavailable(name, &why));
            }
        }
    }
    InvariantReport { schema_version: INVARIANTS_SCHEMA_VERSION, checks }
}

fn bipartition(inst: &Instance) -> Check {
    let ok = inst.complex.bs().verify_bipartition();
    Check::tally("bass_serre_bipartition", 1, u64::from(!ok), 0, String::new())
}

fn piece_axioms(inst: &Instance) -> Check {
    let reports: Vec<_> = inst.complex.pieces().par_iter().map(|p| (p.kind(), p.verify_axioms())).collect();
    let mut bad = Vec::new();
    for (v, (kind, r)) in reports.iter().enumerate() {
        let expected_lip = match kind {
            PieceKind::Synthetic => r.measured_lipschitz <= 1.0,
            PieceKind::Pants => r.measured_lipschitz == 2.0,
        };
        if !r.passes || !expected_lip {
            let lines: Vec<String> = r
                .lines
                .iter()
                .filter(|l| !(l.injective && l.unit_speed && l.shadow_geodesic))
                .map(|l| format!("line {} {:?}", l.slot, (l.injective, l.unit_speed, l.shadow_geodesic)))
                .collect();
            bad.push(format!(
                "piece {v}: displacement {} (mu {}), lipschitz {} (L {}), lines disjoint {}, {}",
                r.max_displacement,
                r.mu,
                r.measured_lipschitz,
                r.lip,
                r.lines_disjoint,
                lines.join(", ")
            ));
        }
    }
    Check::tally("piece_axioms", reports.len() as u64, bad.len() as u64, 0, bad.join("; "))
}

/// Every in-window pair of the flip gluing must describe one vertex, and
/// the flip must be an involution.
fn flip_involution(inst: &Instance) -> Check {
    let c = &inst.complex;
    let (mut checked, mut failures) = (0u64, 0u64);
    let mut first = String::new();
    for e in 0..c.bs().edge_count() {
        let (v, w) = c.bs().edge(e);
        let Some(sv) = c.piece(v).slot_of_edge(e) else {
            failures += 1;
            continue;
        };
        let (rv, rw) = (c.piece(v).line_radius(), c.piece(w).line_radius());
        let fr = c.fiber_radius();
        for t in -rv.min(fr)..=rv.min(fr) {
            for u in -rw.min(fr)..=rw.min(fr) {
                checked += 1;
                let a = Site { piece: v, point: PieceVertex::Line { slot: sv, t }, z: u };
                let ok = c.flip_image(&a, e).ok().is_some_and(|b| {
                    c.flip_image(&b, e).ok() == Some(a) && c.id_of(&a).is_some() && c.id_of(&a) == c.id_of(&b)
                });
                if !ok {
                    failures += 1;
                    if first.is_empty() {
                        first = format!("first failure at {a:?} across edge {e}");
                    }
                }
            }
        }
    }
    Check::tally("flip_involution", checked, failures, 0, first)
}

fn connected(inst: &Instance) -> Check {
    let ok = inst.complex.is_connected();
    Check::tally("complex_connected", 1, u64::from(!ok), 0, String::new())
}

fn treeness(inst: &Instance) -> Vec<Check> {
    let c = &inst.complex;
    [Parity::One, Parity::Two]
        .into_iter()
        .map(|p| {
            let name = format!("quotient_treeness_t{}", p.index());
            let result = QuotientTree::build(c, p)
                .and_then(|q| incremental_treeness_trace(c, p).map(|t| (q.len(), t.steps.len())));
            match result {
                Ok((n, steps)) => Check::tally(&name, 1, 0, 0, format!("{n} classes, {steps} incremental steps")),
                Err(e) => Check::tally(&name, 1, 1, 0, e.to_string()),
            }
        })
        .collect()
}

/// Each base tree maps isometrically into its quotient tree.
fn convex_images(emb: &Embedding, seed: u64) -> Check {
    let c = emb.complex;
    let jobs: Vec<(Parity, usize)> = [Parity::One, Parity::Two]
        .into_iter()
        .flat_map(|p| c.bs().members(p).into_iter().map(move |v| (p, v)))
        .collect();
    let results: Vec<(u64, u64, String)> = jobs
        .par_iter()
        .map(|&(p, v)| {
            let q = emb.quotient(p);
            let base = c.piece(v).base();
            let n = base.len();
            let pairs: Vec<(usize, usize)> = if n <= EXHAUSTIVE_BASE {
                (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(v as u64);
                (0..SAMPLED_BASE_PAIRS).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect()
            };
            let mut failures = 0;
            let mut first = String::new();
            for &(a, b) in &pairs {
                let dq = q.class_of(v, a).and_then(|ca| q.class_of(v, b).and_then(|cb| q.distance(ca, cb)));
                let db = base.distance(a, b).ok();
                if dq.as_ref().ok() != db.as_ref() {
                    failures += 1;
                    if first.is_empty() {
                        first = format!("piece {v}: d({a},{b}) = {db:?} in the base, {dq:?} in T{}", p.index());
                    }
                }
            }
            (pairs.len() as u64, failures, first)
        })
        .collect();
    let checked = results.iter().map(|r| r.0).sum();
    let failures = results.iter().map(|r| r.1).sum();
    let detail = results.into_iter().map(|r| r.2).find(|s| !s.is_empty()).unwrap_or_default();
    Check::tally("convex_image_isometry", checked, failures, 0, detail)
}

/// Both descriptions of a glued vertex give the same `f_i`.
fn fi_well_defined(emb: &Embedding) -> Check {
    let pairs = emb.complex.glued_pairs();
    let results: Vec<(u64, u64, u64)> = pairs
        .par_iter()
        .map(|(a, b)| {
            let mut r = (0, 0, 0);
            for p in [Parity::One, Parity::Two] {
                match (emb.fi_site(p, a), emb.fi_site(p, b)) {
                    (Ok(x), Ok(y)) => {
                        r.0 += 1;
                        r.1 += u64::from(x != y);
                    }
                    (Err(EmbedError::OutsideWindow { .. }), _) | (_, Err(EmbedError::OutsideWindow { .. })) => r.2 += 1,
                    _ => r.1 += 1,
                }
            }
            r
        })
        .collect();
    let sum = |k: fn(&(u64, u64, u64)) -> u64| results.iter().map(k).sum();
    Check::tally("fi_well_defined", sum(|r| r.0), sum(|r| r.1), sum(|r| r.2), String::new())
}

/// For opposite-parity pieces, every neighbor gives the same `f_i`.
fn neighbor_independence(emb: &Embedding) -> Check {
    let c = emb.complex;
    let (mut checked, mut failures, mut skipped) = (0, 0, 0);
    let mut first = String::new();
    for w in 0..c.bs().len() {
        let nbrs = c.bs().neighbors(w);
        let parity = c.bs().parity(w).other();
        for z in -c.fiber_radius()..=c.fiber_radius() {
            let site = Site { piece: w, point: PieceVertex::Base(c.piece(w).center()), z };
            let images: Vec<_> = nbrs.iter().map(|&v| emb.fi_via_neighbor(parity, &site, v)).collect();
            if images.iter().any(|r| matches!(r, Err(EmbedError::OutsideWindow { .. }))) {
                skipped += 1;
                continue;
            }
            checked += 1;
            let distinct = images.iter().any(|r| r.is_err() || r.as_ref().ok() != images[0].as_ref().ok());
            if distinct {
                failures += 1;
                if first.is_empty() {
                    first = format!("piece {w} at level {z}: {images:?}");
                }
            }
        }
    }
    Check::tally("neighbor_independence", checked, failures, skipped, first)
}

/// Along every edge of weight `w`: `d0 <= w` and `d_i <= L w`.
fn lipschitz_scan(emb: &Embedding) -> Check {
    let c = emb.complex;
    let lip = c.lip();
    let points: Vec<Option<ProductPoint>> =
        (0..c.vertex_count() as u32).into_par_iter().map(|x| emb.embed(x).ok()).collect();
    let edges: Vec<(u32, u32, u32)> = c.edges().collect();
    let (checked, failures, skipped) = edges
        .par_iter()
        .map(|&(a, b, w)| match (&points[a as usize], &points[b as usize]) {
            (Some(p), Some(q)) => {
                let w = u64::from(w);
                let bad = match emb.coordinate_distances(p, q) {
                    Ok((d0, d1, d2)) => d0 > w || d1 > lip * w || d2 > lip * w,
                    Err(_) => true,
                };
                (1u64, u64::from(bad), 0u64)
            }
            _ => (0, 0, 1),
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    Check::tally("lipschitz_scan", checked, failures, skipped, String::new())
}
