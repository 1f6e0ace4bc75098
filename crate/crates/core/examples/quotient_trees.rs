//! Builds T1 and T2 and prints the images of each piece.

use flipqi::harness::{fixture, Instance};
use flipqi::quotient::incremental_treeness_trace;
use flipqi::Parity;

fn main() {
    let inst = Instance::build(&fixture("instance-b").unwrap()).unwrap();
    let (t1, t2) = inst.quotients.as_ref().unwrap();
    for t in [t1, t2] {
        println!("T{}: {} classes over pieces {:?}", t.parity().index(), t.len(), t.members());
        for &v in t.members() {
            println!("  piece {v} covers {} classes", t.piece_image(v).unwrap().len());
        }
    }
    let trace = incremental_treeness_trace(&inst.complex, Parity::One).unwrap();
    for s in &trace.steps {
        println!("  step {}: piece {} via {:?}, {} merges, {} classes", s.step, s.piece, s.via, s.class_merges, s.classes);
    }

    let broken = Instance::build(&fixture("broken-shadow").unwrap()).unwrap();
    println!("broken shadow: {}", broken.quotients.unwrap_err());
}
