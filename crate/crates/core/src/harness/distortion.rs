//! Per-pair evaluation of the two-sided estimate on doubling-certified
//! safe-core pairs.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `x`, `y` | vertex ids in the complex |
//! | `d` | distance in the complex |
//! | `d0`, `d1`, `d2` | distances of the images in `T0`, `T1`, `T2` |
//! | `d_l1` | `d0 + d1 + d2` |
//! | `bound` | `d1 + d2 + 2 mu d0 + 4 mu` |
//! | `slack` | `bound - d` |
//! | `path_status` | `ok`, `truncation` or `error` |
//! | `path_length` | length of the constructed path (empty unless `ok`) |
//! | `path_bound` | `d1 + d2 + 2 mu n + 4 mu` with `n` Bass–Serre steps (empty unless `ok`) |
//! | `violations` | failed inequalities, `|`-separated |

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::instance::{Instance, InstanceError};
use crate::complex::{doubling_check, ComplexError};
use crate::embedding::{theoretical_constants, EmbedError, Embedding, InstanceConstants};
use crate::pathcraft::{build_special_path, validate_path};
use crate::quotient::QuotientError;

pub const DISTORTION_SCHEMA_VERSION: u32 = 1;

/// Sampling rounds before giving up on reaching the requested pair count.
const MAX_ROUNDS: u64 = 8;

#[derive(Debug, Error)]
pub enum DistortionError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy)]
pub struct DistortionOptions {
    pub pairs: usize,
    pub seed: u64,
    pub radii_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Ok,
    Truncation,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    pub x: u32,
    pub y: u32,
    pub d: u64,
    pub d0: u64,
    pub d1: u64,
    pub d2: u64,
    pub d_l1: u64,
    pub bound: u64,
    pub slack: i64,
    pub path_status: PathStatus,
    pub path_length: Option<u64>,
    pub path_bound: Option<u64>,
    pub violations: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ViolationCounts {
    pub lower_bound: u64,
    pub coordinate_t1: u64,
    pub coordinate_t2: u64,
    pub f0: u64,
    pub path_invalid: u64,
    pub path_shorter_than_distance: u64,
    pub path_over_bound: u64,
    pub path_steps: u64,
    pub path_error: u64,
    pub expansion_envelope: u64,
    pub contraction_envelope: u64,
    pub doubling_shortened: u64,
}

impl ViolationCounts {
    pub fn total(&self) -> u64 {
        self.lower_bound
            + self.coordinate_t1
            + self.coordinate_t2
            + self.f0
            + self.path_invalid
            + self.path_shorter_than_distance
            + self.path_over_bound
            + self.path_steps
            + self.path_error
            + self.expansion_envelope
            + self.contraction_envelope
            + self.doubling_shortened
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingSummary {
    pub radii_scale: f64,
    pub drawn: usize,
    pub agreeing: usize,
    pub inflated: usize,
    pub shortened: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathSummary {
    pub attempted: usize,
    pub built: usize,
    pub truncation: usize,
    pub errors: usize,
    pub success_rate: f64,
    pub max_jump: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub constants: InstanceConstants,
    pub doubling: DoublingSummary,
    pub pairs: usize,
    /// Largest `d_l1 / d` over pairs with `d > 0`.
    pub max_expansion: f64,
    pub mean_expansion: f64,
    /// Largest `d / d_l1` over pairs with `d_l1 > 0`.
    pub max_contraction: f64,
    pub mean_contraction: f64,
    pub path: PathSummary,
    pub violations: ViolationCounts,
    pub total_violations: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    pub summary: DistortionSummary,
    pub records: Vec<PairRecord>,
}

impl DistortionReport {
    pub fn passed(&self) -> bool {
        self.summary.total_violations == 0
    }

    pub fn csv(&self) -> Result<String, DistortionError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    /// Writes `distortion.csv` and `distortion.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), DistortionError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| DistortionError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let csv_path = dir.join("distortion.csv");
        std::fs::write(&csv_path, self.csv()?).map_err(io(&csv_path))?;
        let json_path = dir.join("distortion.json");
        std::fs::write(&json_path, self.summary_json() + "\n").map_err(io(&json_path))?;
        Ok(())
    }
}

struct Evaluated {
    record: PairRecord,
    counts: ViolationCounts,
    max_jump: u64,
}

fn evaluate(emb: &Embedding, k: &InstanceConstants, x: u32, y: u32, d: u64) -> Result<Evaluated, DistortionError> {
    let c = emb.complex;
    let (px, py) = (emb.embed(x)?, emb.embed(y)?);
    let (d0, d1, d2) = emb.coordinate_distances(&px, &py)?;
    let d_l1 = d0 + d1 + d2;
    let bound = k.lower_bound(d0, d1, d2);
    let mut v = ViolationCounts::default();
    let mut names = Vec::new();
    let mut flag = |hit: bool, counter: &mut u64, name: &'static str| {
        if hit {
            *counter += 1;
            names.push(name);
        }
    };
    flag(d > bound, &mut v.lower_bound, "lower_bound");
    flag(!k.coordinate_ok(d1, d), &mut v.coordinate_t1, "coordinate_t1");
    flag(!k.coordinate_ok(d2, d), &mut v.coordinate_t2, "coordinate_t2");
    flag(!k.f0_ok(d0, d), &mut v.f0, "f0");
    flag(!k.expansion_ok(d_l1, d), &mut v.expansion_envelope, "expansion_envelope");
    flag(!k.contraction_ok(d, d_l1), &mut v.contraction_envelope, "contraction_envelope");

    let (mut path_status, mut path_length, mut path_bound, mut max_jump) = (PathStatus::Error, None, None, 0);
    match build_special_path(emb, x, y) {
        Ok(p) => {
            let report = validate_path(c, &p);
            path_status = PathStatus::Ok;
            path_length = Some(report.length);
            path_bound = Some(p.bound(k));
            max_jump = report.max_jump;
            flag(!report.valid(), &mut v.path_invalid, "path_invalid");
            flag(report.length < d, &mut v.path_shorter_than_distance, "path_shorter_than_distance");
            flag(report.length > p.bound(k), &mut v.path_over_bound, "path_over_bound");
            flag(d0 + 2 < p.n(), &mut v.path_steps, "path_steps");
        }
        Err(e) if e.is_truncation() => path_status = PathStatus::Truncation,
        Err(_) => flag(true, &mut v.path_error, "path_error"),
    }
    Ok(Evaluated {
        record: PairRecord {
            x,
            y,
            d,
            d0,
            d1,
            d2,
            d_l1,
            bound,
            slack: bound as i64 - d as i64,
            path_status,
            path_length,
            path_bound,
            violations: names.join("|"),
        },
        counts: v,
        max_jump,
    })
}

/// Draws seeded safe-core pairs, keeps those whose distance agrees with a
/// build at `radii_scale` times the radii, and evaluates every inequality on
/// the first `opts.pairs` of them.
pub fn run_distortion(inst: &Instance, opts: &DistortionOptions) -> Result<DistortionReport, DistortionError> {
    let emb = inst.embedding()?;
    let c = &inst.complex;
    let k = theoretical_constants(c);
    let big = Instance::build_scaled(&inst.config, opts.radii_scale)?;

    let mut kept = Vec::new();
    let mut doubling = DoublingSummary { radii_scale: opts.radii_scale, drawn: 0, agreeing: 0, inflated: 0, shortened: 0 };
    for round in 0..MAX_ROUNDS {
        if kept.len() >= opts.pairs {
            break;
        }
        let want = opts.pairs - kept.len();
        let seed = opts.seed.wrapping_add(round.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let pairs = c.sample_core_pairs(inst.config.margin, want, seed)?;
        let report = doubling_check(c, &big.complex, &pairs)?;
        doubling.drawn += pairs.len();
        doubling.inflated += report.inflated;
        doubling.shortened += report.shortened;
        kept.extend(report.agreeing().map(|r| (r.x, r.y, r.d_small)));
    }
    kept.truncate(opts.pairs);
    doubling.agreeing = kept.len();

    let evaluated = kept
        .par_iter()
        .map(|&(x, y, d)| evaluate(&emb, &k, x, y, d))
        .collect::<Result<Vec<_>, _>>()?;

    let mut violations = ViolationCounts { doubling_shortened: doubling.shortened as u64, ..Default::default() };
    let mut path = PathSummary { attempted: evaluated.len(), built: 0, truncation: 0, errors: 0, success_rate: 0.0, max_jump: 0 };
    let (mut max_e, mut sum_e, mut n_e) = (0f64, 0f64, 0usize);
    let (mut max_c, mut sum_c, mut n_c) = (0f64, 0f64, 0usize);
    let mut records = Vec::with_capacity(evaluated.len());
    for ev in evaluated {
        let r = &ev.record;
        let v = &ev.counts;
        violations.lower_bound += v.lower_bound;
        violations.coordinate_t1 += v.coordinate_t1;
        violations.coordinate_t2 += v.coordinate_t2;
        violations.f0 += v.f0;
        violations.path_invalid += v.path_invalid;
        violations.path_shorter_than_distance += v.path_shorter_than_distance;
        violations.path_over_bound += v.path_over_bound;
        violations.path_steps += v.path_steps;
        violations.path_error += v.path_error;
        violations.expansion_envelope += v.expansion_envelope;
        violations.contraction_envelope += v.contraction_envelope;
        match r.path_status {
            PathStatus::Ok => path.built += 1,
            PathStatus::Truncation => path.truncation += 1,
            PathStatus::Error => path.errors += 1,
        }
        path.max_jump = path.max_jump.max(ev.max_jump);
        if r.d > 0 {
            let e = r.d_l1 as f64 / r.d as f64;
            max_e = max_e.max(e);
            sum_e += e;
            n_e += 1;
        }
        if r.d_l1 > 0 {
            let q = r.d as f64 / r.d_l1 as f64;
            max_c = max_c.max(q);
            sum_c += q;
            n_c += 1;
        }
        records.push(ev.record);
    }
    path.success_rate = if path.attempted == 0 { 1.0 } else { path.built as f64 / path.attempted as f64 };
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    let total_violations = violations.total();
    Ok(DistortionReport {
        summary: DistortionSummary {
            schema_version: DISTORTION_SCHEMA_VERSION,
            seed: opts.seed,
            constants: k,
            doubling,
            pairs: records.len(),
            max_expansion: max_e,
            mean_expansion: mean(sum_e, n_e),
            max_contraction: max_c,
            mean_contraction: mean(sum_c, n_c),
            path,
            violations,
            total_violations,
        },
        records,
    })
}
