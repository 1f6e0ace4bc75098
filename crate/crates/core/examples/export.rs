//! Writes DOT files, the edge list and the embedding dump.

use flipqi::harness::export::export_artifacts;
use flipqi::harness::{fixture, Instance};

fn main() {
    let inst = Instance::build(&fixture("path-chain").unwrap()).unwrap();
    let dir = std::env::temp_dir().join("flipqi-export");
    for path in export_artifacts(&inst, &dir).unwrap() {
        println!("{}", path.display());
    }
}
