use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::instance::Instance;
use crate::complex::{BassSerreTree, Parity};
use crate::quotient::QuotientError;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Quotient(#[from] QuotientError),
}

/// Files written by [`export_artifacts`], in order.
pub const EXPORT_FILES: &[&str] = &[
    "t0.dot",
    "t1.dot",
    "t2.dot",
    "complex.edges",
    "embed.csv",
    "build_log.json",
    "t1_classes.csv",
    "t2_classes.csv",
];

pub fn bass_serre_dot(bs: &BassSerreTree) -> String {
    let mut out = String::from("graph T0 {\n");
    for v in 0..bs.len() {
        let color = match bs.parity(v) {
            Parity::One => "#1f77b4",
            Parity::Two => "#d62728",
        };
        let _ = writeln!(out, "  {v} [label=\"{v}\", color=\"{color}\"];");
    }
    for e in 0..bs.edge_count() {
        let (a, b) = bs.edge(e);
        let _ = writeln!(out, "  {a} -- {b} [label=\"e{e}\"];");
    }
    out.push_str("}\n");
    out
}

/// Writes the DOT files of `T0, T1, T2`, the complex edge list, the embedding
/// dump, the build log and the quotient class audits into `dir`, creating it
/// if needed. Output depends only on the configuration.
pub fn export_artifacts(inst: &Instance, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    let emb = inst.embedding()?;
    let (t1, t2) = (emb.t1, emb.t2);
    let c = &inst.complex;
    std::fs::create_dir_all(dir).map_err(|source| ExportError::Io { path: dir.into(), source })?;
    let contents = [
        bass_serre_dot(c.bs()),
        t1.to_dot(),
        t2.to_dot(),
        c.edge_list(),
        emb.dump_csv(),
        serde_json::to_string_pretty(c.log()).expect("build log serializes") + "\n",
        t1.class_audit_csv(),
        t2.class_audit_csv(),
    ];
    let mut written = Vec::new();
    for (name, body) in EXPORT_FILES.iter().zip(contents) {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| ExportError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}
