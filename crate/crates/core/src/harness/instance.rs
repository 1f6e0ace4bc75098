use thiserror::Error;

use super::config::{BaseSpec, ConfigError, InstanceConfig, NegativeControl, PieceKindSpec};
use crate::complex::{BassSerreTree, BuildOptions, ComplexError, TotalComplex};
use crate::embedding::Embedding;
use crate::piece::{seeded_center_lines, Piece, PieceError};
use crate::quotient::{build_quotient_trees, QuotientError, QuotientTree};
use crate::tree::{MetricTree, TreeError, TreeLine, TreeSpec};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("Bass–Serre tree: {0}")]
    Tree(#[from] TreeError),
    #[error("piece {piece}: {source}")]
    Piece { piece: usize, source: PieceError },
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// Shipped configurations, by name.
pub const FIXTURES: &[(&str, &str)] = &[
    ("instance-a", include_str!("../../fixtures/instance_a.json")),
    ("instance-b", include_str!("../../fixtures/instance_b.json")),
    ("path-chain", include_str!("../../fixtures/path_chain.json")),
    ("pants-a", include_str!("../../fixtures/pants_a.json")),
    ("broken-shadow", include_str!("../../fixtures/broken_shadow.json")),
    ("missing-gluing", include_str!("../../fixtures/missing_gluing.json")),
    ("bench", include_str!("../../fixtures/bench.json")),
];

pub fn fixture(name: &str) -> Option<InstanceConfig> {
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| InstanceConfig::from_json(text).expect("shipped fixture is valid"))
}

fn bs_tree(cfg: &InstanceConfig) -> Result<BassSerreTree, InstanceError> {
    let tree = MetricTree::build(&cfg.bs_tree)?;
    let frontier = match cfg.bs_tree {
        TreeSpec::Regular { radius, .. } if radius > 0 => {
            (0..tree.len()).map(|v| tree.hops_from_root(v) as usize == radius).collect()
        }
        _ => vec![false; tree.len()],
    };
    Ok(BassSerreTree::new(tree, frontier))
}

/// Builds the Bass–Serre tree and one piece per vertex. Incident edges are
/// assigned to slots in increasing edge order; a regular Bass–Serre ball
/// gives every piece `valence` slots so that frontier pieces keep their
/// lines when the ball grows.
pub fn generate_instance(cfg: &InstanceConfig) -> Result<(BassSerreTree, Vec<Piece>), InstanceError> {
    cfg.validate()?;
    let bs = bs_tree(cfg)?;
    let radii = cfg.radii;
    let mut pieces = Vec::with_capacity(bs.len());
    for v in 0..bs.len() {
        let mut edges: Vec<usize> = bs.neighbors(v).iter().filter_map(|&u| bs.edge_between(v, u)).collect();
        edges.sort_unstable();
        let slot_count = match cfg.bs_tree {
            TreeSpec::Regular { valence, .. } => valence.max(1),
            _ => edges.len().max(1),
        };
        let wrap = |source| InstanceError::Piece { piece: v, source };
        let piece = match cfg.piece_kind {
            PieceKindSpec::Pants => Piece::pants(radii.base, radii.line, &edges).map_err(wrap)?,
            PieceKindSpec::Synthetic => {
                let valence = match cfg.per_piece.base {
                    BaseSpec::Regular { valence } => valence,
                    _ => 2,
                };
                let base = MetricTree::build(&TreeSpec::regular(valence, radii.base as usize))?;
                let shadows =
                    seeded_center_lines(&base, 0, slot_count, radii.line, cfg.seed, v as u64).map_err(wrap)?;
                let mut slots: Vec<Option<usize>> = edges.into_iter().map(Some).collect();
                slots.resize(slot_count, None);
                Piece::synthetic(base, 0, radii.base, slots, shadows, radii.line).map_err(wrap)?
            }
        };
        pieces.push(piece);
    }
    if cfg.negative_control == Some(NegativeControl::BrokenShadow) {
        let v = pieces.len() - 1;
        pieces[v] = break_shadow(&pieces[v]).map_err(|source| InstanceError::Piece { piece: v, source })?;
    }
    Ok((bs, pieces))
}

/// Swaps the second and third parameters of the first line.
fn break_shadow(p: &Piece) -> Result<Piece, PieceError> {
    let slots = p.lines().iter().map(|l| l.edge).collect();
    let mut shadows: Vec<TreeLine> = p.lines().iter().map(|l| l.shadow.clone()).collect();
    let mut params = shadows[0].params().to_vec();
    params.swap(1, 2);
    shadows[0] = TreeLine::new_unchecked(shadows[0].radius(), shadows[0].speed(), params)?;
    Piece::from_parts_unchecked(
        p.kind(),
        p.base().clone(),
        p.center(),
        p.base_radius(),
        slots,
        shadows,
        p.line_radius(),
        p.lip(),
    )
}

/// A built complex together with its quotient trees. Quotient failures are
/// kept rather than raised, so that the audits can report them.
#[derive(Debug)]
pub struct Instance {
    pub config: InstanceConfig,
    pub complex: TotalComplex,
    pub quotients: Result<(QuotientTree, QuotientTree), QuotientError>,
}

impl Instance {
    pub fn build(cfg: &InstanceConfig) -> Result<Self, InstanceError> {
        let (bs, pieces) = generate_instance(cfg)?;
        let opts = BuildOptions {
            skip_gluing: (cfg.negative_control == Some(NegativeControl::MissingGluing)).then_some(0),
        };
        let complex = TotalComplex::build(bs, pieces, cfg.radii.fiber, &opts)?;
        let quotients = build_quotient_trees(&complex);
        Ok(Self { config: cfg.clone(), complex, quotients })
    }

    pub fn build_scaled(cfg: &InstanceConfig, factor: f64) -> Result<Self, InstanceError> {
        Self::build(&cfg.scaled(factor))
    }

    pub fn embedding(&self) -> Result<Embedding<'_>, QuotientError> {
        let (t1, t2) = self.quotients.as_ref().map_err(Clone::clone)?;
        Ok(Embedding::new(&self.complex, t1, t2).expect("quotient parities are fixed by construction"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::Parity;

    #[test]
    fn fixtures_parse() {
        for (name, _) in FIXTURES {
            assert!(fixture(name).is_some(), "{name}");
        }
        assert!(fixture("nope").is_none());
    }

    #[test]
    fn instance_b_has_ten_pieces() {
        let (bs, pieces) = generate_instance(&fixture("instance-b").unwrap()).unwrap();
        assert_eq!(bs.len(), 10);
        assert_eq!(pieces.len(), 10);
        assert!(bs.verify_bipartition());
        assert_eq!(bs.members(Parity::One).len(), 7);
        assert!(pieces.iter().all(|p| p.lines().len() == 3));
        assert_eq!((0..10).filter(|&v| bs.is_frontier(v)).count(), 6);
    }

    #[test]
    fn pants_with_four_edges_rejected() {
        let mut cfg = fixture("pants-a").unwrap();
        cfg.bs_tree = TreeSpec::regular(4, 1);
        let err = generate_instance(&cfg).unwrap_err();
        assert!(matches!(
            err,
            InstanceError::Piece { piece: 0, source: PieceError::TooManyEdges { requested: 4, max: 3 } }
        ));
    }

    #[test]
    fn same_seed_same_build_log() {
        let cfg = fixture("instance-a").unwrap();
        let a = Instance::build(&cfg).unwrap();
        let b = Instance::build(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(a.complex.log()).unwrap(),
            serde_json::to_string(b.complex.log()).unwrap()
        );
    }

    #[test]
    fn broken_shadow_is_injective_but_not_geodesic() {
        let (_, pieces) = generate_instance(&fixture("broken-shadow").unwrap()).unwrap();
        let report = pieces[2].verify_axioms();
        assert!(!report.passes);
        assert!(report.lines[0].injective);
        assert!(!report.lines[0].shadow_geodesic);
    }

    #[test]
    fn scaled_lines_extend_small_lines() {
        let cfg = fixture("instance-b").unwrap();
        let (_, small) = generate_instance(&cfg).unwrap();
        let (_, big) = generate_instance(&cfg.scaled(1.5)).unwrap();
        for (p, q) in small.iter().zip(&big) {
            for (l, m) in p.lines().iter().zip(q.lines()) {
                if l.edge.is_some() {
                    assert_eq!(l.edge, m.edge);
                }
                for (t, b) in l.shadow.iter() {
                    assert_eq!(m.shadow.at(t), Some(b));
                }
            }
        }
    }
}
