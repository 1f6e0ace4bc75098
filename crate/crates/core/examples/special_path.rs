//! Builds the staircase path between two vertices in different pieces.

use flipqi::embedding::theoretical_constants;
use flipqi::harness::{fixture, Instance};
use flipqi::{build_special_path, validate_path, PieceVertex, Site};

fn main() {
    let inst = Instance::build(&fixture("instance-b").unwrap()).unwrap();
    let emb = inst.embedding().unwrap();
    let c = &inst.complex;
    let x = c.id_of(&Site { piece: 4, point: PieceVertex::Base(2), z: 1 }).unwrap();
    let y = c.id_of(&Site { piece: 9, point: PieceVertex::Base(5), z: -2 }).unwrap();
    let path = build_special_path(&emb, x, y).unwrap();
    let report = validate_path(c, &path);
    println!("Bass–Serre path {:?}", path.bs_path);
    for s in &path.segments {
        println!(
            "  segment {} in piece {} at level {}: length {}, jump {:?}",
            s.j, s.piece, s.level, s.alpha_length, s.jump_to_next
        );
    }
    println!(
        "length {} (distance {}), bound {}, valid {}",
        report.length,
        c.distance(x, y).unwrap(),
        path.bound(&theoretical_constants(c)),
        report.valid()
    );
}
