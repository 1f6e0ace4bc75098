//! Runs the invariant suite on a valid instance and on both negative controls.

use flipqi::harness::invariants::run_invariants;
use flipqi::harness::{fixture, Instance};

fn main() {
    for name in ["instance-a", "broken-shadow", "missing-gluing"] {
        let report = run_invariants(&Instance::build(&fixture(name).unwrap()).unwrap());
        println!("{name}: passed = {}, failed = {:?}", report.passed(), report.failed());
    }
}
