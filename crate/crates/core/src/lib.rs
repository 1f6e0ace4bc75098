//! Quasi-isometric embedding of flip graph manifold covers into a product of
//! three metric trees.
//!
//! The crate builds finite truncations of the total complex `X` over a
//! bipartite Bass–Serre tree `T0`, constructs the two quotient trees `T1` and
//! `T2` from the piece base trees, and evaluates the product map
//! `f = (f0, f1, f2)` together with the explicit paths that witness its lower
//! bound.

pub mod complex;
pub mod embedding;
pub mod harness;
pub mod pathcraft;
pub mod piece;
pub mod quotient;
pub mod tree;
pub mod union_find;

pub use complex::{BassSerreTree, BuildOptions, Parity, Site, TotalComplex};
pub use embedding::{Embedding, InstanceConstants, ProductPoint};
pub use pathcraft::{build_special_path, validate_path, SpecialPath};
pub use piece::{Piece, PieceVertex};
pub use quotient::{build_quotient_trees, ClassId, QuotientTree};
pub use tree::{MetricTree, TreeLine, TreeSpec};
