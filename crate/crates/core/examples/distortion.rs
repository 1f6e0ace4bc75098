//! Measures distortion on doubling-certified pairs and writes the CSV report.

use flipqi::harness::distortion::{run_distortion, DistortionOptions};
use flipqi::harness::{fixture, Instance};

fn main() {
    let cfg = fixture("instance-b").unwrap();
    let inst = Instance::build(&cfg).unwrap();
    let opts = DistortionOptions { pairs: 200, seed: cfg.seed, radii_scale: 1.5 };
    let report = run_distortion(&inst, &opts).unwrap();
    let s = &report.summary;
    println!("{} pairs, {} violations", s.pairs, s.total_violations);
    println!("expansion max {:.3} mean {:.3}", s.max_expansion, s.mean_expansion);
    println!("contraction max {:.3} mean {:.3}", s.max_contraction, s.mean_contraction);
    let dir = std::env::temp_dir().join("flipqi-distortion");
    report.write(&dir).unwrap();
    println!("wrote {}", dir.display());
}
