//! Builds the large fixture and times distance queries.

use flipqi::harness::bench::run_bench;
use flipqi::harness::fixture;

fn main() {
    let cfg = fixture("bench").unwrap();
    let (_, r) = run_bench(&cfg, 100, cfg.seed).unwrap();
    println!("{} vertices, {} edges, built in {:.2}s", r.vertices, r.edges, r.build_seconds);
    println!("query mean {:.3} ms, max {:.3} ms", r.mean_query_ms, r.max_query_ms);
    println!("bidirectional mean {:.3} ms", r.mean_bidirectional_ms);
    println!("batch of {} on {} threads: speedup {:.2}", r.batch_queries, r.threads, r.batch_speedup);
}
