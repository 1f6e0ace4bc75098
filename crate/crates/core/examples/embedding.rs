//! Embeds a handful of vertices into T0 x T1 x T2 and compares distances.

use flipqi::embedding::theoretical_constants;
use flipqi::harness::{fixture, Instance};

fn main() {
    let inst = Instance::build(&fixture("instance-a").unwrap()).unwrap();
    let emb = inst.embedding().unwrap();
    let c = &inst.complex;
    let k = theoretical_constants(c);
    println!("mu = {}, L = {}, rho_hat = {:?}", k.mu, k.lip, k.rho);
    for (x, y) in c.sample_core_pairs(1, 6, 3).unwrap() {
        let (px, py) = (emb.embed(x).unwrap(), emb.embed(y).unwrap());
        let (d0, d1, d2) = emb.coordinate_distances(&px, &py).unwrap();
        let d = c.distance(x, y).unwrap();
        println!(
            "{} -> {}: d = {d}, (d0, d1, d2) = ({d0}, {d1}, {d2}), lower bound {}",
            x,
            y,
            k.lower_bound(d0, d1, d2)
        );
    }
}
