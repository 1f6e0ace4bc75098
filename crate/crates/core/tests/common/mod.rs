#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use flipqi::{PieceVertex, Site, TotalComplex};

/// A straightforward rebuild of the total complex from its pieces: every
/// site is materialized, flip identifications are merged through a plain
/// parent map, and distances come from Dijkstra on the resulting graph.
pub struct NaiveComplex {
    pub sites: Vec<Site>,
    index: HashMap<Site, usize>,
    class: Vec<usize>,
    adj: Vec<Vec<(usize, u64)>>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl NaiveComplex {
    pub fn new(c: &TotalComplex) -> Self {
        let rz = c.fiber_radius();
        let mut sites = Vec::new();
        for v in 0..c.bs().len() {
            for p in c.piece(v).points() {
                for z in -rz..=rz {
                    sites.push(Site { piece: v, point: p, z });
                }
            }
        }
        let index: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let mut parent: Vec<usize> = (0..sites.len()).collect();
        for e in 0..c.bs().edge_count() {
            let (v, w) = c.bs().edge(e);
            let sv = c.piece(v).slot_of_edge(e).unwrap();
            let sw = c.piece(w).slot_of_edge(e).unwrap();
            let (rv, rw) = (c.piece(v).line_radius(), c.piece(w).line_radius());
            for t in -rv..=rv {
                for u in -rw..=rw {
                    let a = Site { piece: v, point: PieceVertex::Line { slot: sv, t }, z: u };
                    let b = Site { piece: w, point: PieceVertex::Line { slot: sw, t: u }, z: t };
                    if let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        parent[ri] = rj;
                    }
                }
            }
        }
        let class: Vec<usize> = (0..sites.len()).map(|i| find(&mut parent, i)).collect();
        let mut adj = vec![Vec::new(); sites.len()];
        let mut link = |a: usize, b: usize, w: u64| {
            let (ca, cb) = (class[a], class[b]);
            if ca != cb {
                adj[ca].push((cb, w));
                adj[cb].push((ca, w));
            }
        };
        for v in 0..c.bs().len() {
            let piece = c.piece(v);
            let edges = piece.edges();
            for z in -rz..=rz {
                let at = |k: usize, z: i64| index[&Site { piece: v, point: piece.point(k), z }];
                for &(a, b, w) in &edges {
                    link(at(a, z), at(b, z), w);
                }
                if z < rz {
                    for k in 0..piece.point_count() {
                        link(at(k, z), at(k, z + 1), 1);
                    }
                }
            }
        }
        NaiveComplex { sites, index, class, adj }
    }

    /// Number of distinct vertices after identification.
    pub fn vertex_count(&self) -> usize {
        (0..self.sites.len()).filter(|&i| self.class[i] == i).count()
    }

    pub fn representatives(&self) -> Vec<usize> {
        (0..self.sites.len()).filter(|&i| self.class[i] == i).collect()
    }

    pub fn class_of(&self, s: &Site) -> usize {
        self.class[self.index[s]]
    }

    pub fn distances_from(&self, src: usize) -> HashMap<usize, u64> {
        let src = self.class[src];
        let mut dist = HashMap::new();
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, src)));
        while let Some(Reverse((d, x))) = heap.pop() {
            if dist.contains_key(&x) {
                continue;
            }
            dist.insert(x, d);
            for &(y, w) in &self.adj[x] {
                if !dist.contains_key(&y) {
                    heap.push(Reverse((d + w, y)));
                }
            }
        }
        dist
    }
}
