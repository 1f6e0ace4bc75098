use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{MetricTree, TreeSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKindSpec {
    Synthetic,
    Pants,
}

/// Base tree of every piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    /// A path of length `2 R_base` centered at vertex 0.
    Path,
    /// Ball of radius `R_base` in the `valence`-regular tree.
    Regular { valence: usize },
    /// Ball of radius `R_base` in the Cayley tree of the free group of rank 2.
    FreeGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinePolicy {
    /// One line through the base center per boundary slot, with branch
    /// directions drawn from the seed.
    SeededBranches,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerPiece {
    pub base: BaseSpec,
    pub line_policy: LinePolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Radii {
    pub base: u64,
    pub line: i64,
    pub fiber: i64,
}

/// Deliberately broken instances that the audits must reject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeControl {
    /// Two consecutive parameters of one shadow line are swapped.
    BrokenShadow,
    /// The flip identifications of Bass–Serre edge 0 are left out.
    MissingGluing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub bs_tree: TreeSpec,
    pub piece_kind: PieceKindSpec,
    pub per_piece: PerPiece,
    pub radii: Radii,
    pub margin: i64,
    pub sample_count: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_control: Option<NegativeControl>,
}

impl InstanceConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: PathBuf::from("<inline>"),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let bs = MetricTree::build(&self.bs_tree).map_err(|e| ConfigError::Invalid(format!("bs_tree: {e}")))?;
        if bs.is_empty() {
            return bad("the Bass–Serre tree is empty".into());
        }
        let Radii { base, line, fiber } = self.radii;
        if self.margin < 0 {
            return bad(format!("margin {} is negative", self.margin));
        }
        if (base as i64) < self.margin || line < self.margin || fiber < self.margin {
            return bad(format!(
                "radii ({base}, {line}, {fiber}) must all be at least the margin {}",
                self.margin
            ));
        }
        match (self.piece_kind, self.per_piece.base) {
            (PieceKindSpec::Pants, BaseSpec::FreeGroup) => {
                if 2 * line as u64 > base {
                    return bad(format!("pants lines of radius {line} need a base radius of at least {}", 2 * line));
                }
            }
            (PieceKindSpec::Pants, _) => return bad("pants pieces require the free_group base".into()),
            (PieceKindSpec::Synthetic, BaseSpec::FreeGroup) => {
                return bad("the free_group base is reserved for pants pieces".into())
            }
            (PieceKindSpec::Synthetic, BaseSpec::Regular { valence }) if valence < 2 => {
                return bad(format!("a regular base of valence {valence} carries no lines"));
            }
            (PieceKindSpec::Synthetic, _) => {
                if line as u64 > base {
                    return bad(format!("line radius {line} exceeds base radius {base}"));
                }
            }
        }
        if self.negative_control == Some(NegativeControl::BrokenShadow) && line < 2 {
            return bad("the broken_shadow control needs line radius at least 2".into());
        }
        if self.negative_control == Some(NegativeControl::MissingGluing) && bs.edges().is_empty() {
            return bad("the missing_gluing control needs a Bass–Serre edge".into());
        }
        Ok(())
    }

    /// The same instance with every radius multiplied by `factor` and
    /// rounded up, keeping pants bases wide enough for their lines. A regular
    /// Bass–Serre ball grows with the radii; explicit Bass–Serre trees are
    /// kept.
    pub fn scaled(&self, factor: f64) -> Self {
        let up = |r: f64| (r * factor).ceil();
        let mut out = self.clone();
        out.radii = Radii {
            base: up(self.radii.base as f64) as u64,
            line: up(self.radii.line as f64) as i64,
            fiber: up(self.radii.fiber as f64) as i64,
        };
        if self.piece_kind == PieceKindSpec::Pants {
            out.radii.base = out.radii.base.max(2 * out.radii.line as u64);
        }
        if let TreeSpec::Regular { valence, radius } = self.bs_tree {
            out.bs_tree = TreeSpec::Regular { valence, radius: up(radius as f64) as usize };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: &str = r#"{
        "bs_tree": {"path": {"vertices": 3}},
        "piece_kind": "synthetic",
        "per_piece": {"base": {"regular": {"valence": 3}}, "line_policy": "seeded_branches"},
        "radii": {"base": 4, "line": 4, "fiber": 4},
        "margin": 1,
        "sample_count": 500,
        "seed": 7
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = InstanceConfig::from_json(A).unwrap();
        assert_eq!(cfg.radii, Radii { base: 4, line: 4, fiber: 4 });
        assert_eq!(InstanceConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = A.replace("\"seed\": 7", "\"seed\": 7, \"colour\": 1");
        assert!(matches!(InstanceConfig::from_json(&text), Err(ConfigError::Parse { .. })));
        let text = A.replace("\"fiber\": 4", "\"fiber\": 4, \"extra\": 0");
        assert!(matches!(InstanceConfig::from_json(&text), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn empty_bs_tree_rejected() {
        let text = A.replace(r#"{"path": {"vertices": 3}}"#, r#"{"path": {"vertices": 0}}"#);
        assert!(matches!(InstanceConfig::from_json(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn margin_bounds() {
        let text = A.replace("\"margin\": 1", "\"margin\": 5");
        assert!(InstanceConfig::from_json(&text).is_err());
        let text = A.replace("\"margin\": 1", "\"margin\": -1");
        assert!(InstanceConfig::from_json(&text).is_err());
    }

    #[test]
    fn pants_needs_free_group_and_room() {
        let text = A.replace("\"synthetic\"", "\"pants\"");
        assert!(InstanceConfig::from_json(&text).is_err());
        let text = text.replace(r#"{"regular": {"valence": 3}}"#, r#""free_group""#);
        assert!(InstanceConfig::from_json(&text).is_err());
        let text = text.replace("\"base\": 4,", "\"base\": 8,");
        assert!(InstanceConfig::from_json(&text).is_ok());
    }

    #[test]
    fn scaling_rounds_up() {
        let cfg = InstanceConfig::from_json(A).unwrap();
        let big = cfg.scaled(1.5);
        assert_eq!(big.radii, Radii { base: 6, line: 6, fiber: 6 });
        assert_eq!(big.bs_tree, cfg.bs_tree);
        assert_eq!(big.margin, cfg.margin);
    }
}
