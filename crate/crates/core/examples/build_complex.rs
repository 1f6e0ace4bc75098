//! Builds the three-piece instance and measures a few distances.

use flipqi::harness::{fixture, Instance};
use flipqi::{PieceVertex, Site};

fn main() {
    let inst = Instance::build(&fixture("instance-a").unwrap()).unwrap();
    let c = &inst.complex;
    let log = c.log();
    println!("{} pieces, {} vertices, {} edges", log.pieces, log.vertices, log.edges);
    println!("{} flip identifications, rho_hat = {:?}", log.identified_pairs, c.rho_hat());

    let x = c.id_of(&Site { piece: 0, point: PieceVertex::Base(0), z: 0 }).unwrap();
    for (piece, z) in [(0, 3), (1, 0), (2, -2)] {
        let y = c.id_of(&Site { piece, point: PieceVertex::Base(0), z }).unwrap();
        println!("d(root, piece {piece} center at z={z}) = {}", c.distance(x, y).unwrap());
    }
}
