use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::InstanceConfig;
use super::instance::{Instance, InstanceError};
use crate::complex::ComplexError;

pub const BENCH_SCHEMA_VERSION: u32 = 1;
const BATCH: usize = 1000;

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub vertices: usize,
    pub edges: usize,
    pub memory_bytes: usize,
    pub build_seconds: f64,
    pub queries: usize,
    pub mean_query_ms: f64,
    pub max_query_ms: f64,
    pub mean_bidirectional_ms: f64,
    pub max_bidirectional_ms: f64,
    pub batch_queries: usize,
    pub threads: usize,
    pub batch_sequential_seconds: f64,
    pub batch_parallel_seconds: f64,
    pub batch_speedup: f64,
}

fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.gen_range(0..n) as u32, rng.gen_range(0..n) as u32))
        .collect()
}

/// Builds the instance and times single distance queries between uniformly
/// random vertices, then a batch of queries run sequentially and on the
/// rayon pool.
pub fn run_bench(cfg: &InstanceConfig, queries: usize, seed: u64) -> Result<(Instance, BenchReport), InstanceError> {
    let start = Instant::now();
    let inst = Instance::build(cfg)?;
    let build_seconds = start.elapsed().as_secs_f64();
    let c = &inst.complex;
    let n = c.vertex_count();

    let time = |f: &dyn Fn(u32, u32) -> Result<u64, ComplexError>, pairs: &[(u32, u32)]| -> Result<Vec<f64>, ComplexError> {
        pairs
            .iter()
            .map(|&(x, y)| {
                let t = Instant::now();
                f(x, y)?;
                Ok(t.elapsed().as_secs_f64() * 1e3)
            })
            .collect()
    };
    let pairs = random_pairs(n, queries, seed);
    let single = time(&|x, y| c.distance(x, y), &pairs)?;
    let bidi = time(&|x, y| c.bidirectional_distance(x, y), &pairs)?;
    let stats = |v: &[f64]| {
        let mean = if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        (mean, v.iter().copied().fold(0.0, f64::max))
    };
    let (mean_query_ms, max_query_ms) = stats(&single);
    let (mean_bidirectional_ms, max_bidirectional_ms) = stats(&bidi);

    let batch = random_pairs(n, BATCH, seed.wrapping_add(1));
    let t = Instant::now();
    let seq: Vec<u64> = batch.iter().map(|&(x, y)| c.distance(x, y)).collect::<Result<_, _>>()?;
    let batch_sequential_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let par: Vec<u64> = batch.par_iter().map(|&(x, y)| c.distance(x, y)).collect::<Result<_, _>>()?;
    let batch_parallel_seconds = t.elapsed().as_secs_f64();
    debug_assert_eq!(seq, par);

    let report = BenchReport {
        schema_version: BENCH_SCHEMA_VERSION,
        vertices: n,
        edges: c.edge_count(),
        memory_bytes: c.memory_bytes(),
        build_seconds,
        queries,
        mean_query_ms,
        max_query_ms,
        mean_bidirectional_ms,
        max_bidirectional_ms,
        batch_queries: BATCH,
        threads: rayon::current_num_threads(),
        batch_sequential_seconds,
        batch_parallel_seconds,
        batch_speedup: batch_sequential_seconds / batch_parallel_seconds.max(1e-12),
    };
    Ok((inst, report))
}
