//! Disjoint-set forest with path compression and union by rank.

#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            sets: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Number of disjoint sets.
    pub fn sets(&self) -> usize {
        self.sets
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns `false` if they were already
    /// in the same set.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let mut a = self.find(a);
        let mut b = self.find(b);
        if a == b {
            return false;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] = self.rank[a].saturating_add(1);
        }
        self.sets -= 1;
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Dense labels `0..sets()` ordered by the smallest member of each set.
    pub fn dense_labels(&mut self) -> Vec<usize> {
        let n = self.len();
        let mut label_of_root = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut next = 0;
        for (v, label) in labels.iter_mut().enumerate() {
            let r = self.find(v);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            *label = label_of_root[r];
        }
        labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_merges() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 3));
        assert!(uf.union(3, 4));
        assert!(!uf.union(0, 4));
        assert_eq!(uf.sets(), 3);
        assert_eq!(uf.dense_labels(), vec![0, 1, 2, 0, 0]);
    }

    proptest! {
        #[test]
        fn labels_match_naive_components(
            n in 1usize..40,
            pairs in prop::collection::vec((0usize..40, 0usize..40), 0..60),
        ) {
            let pairs: Vec<_> = pairs.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let mut uf = UnionFind::new(n);
            for &(a, b) in &pairs {
                uf.union(a, b);
            }
            // naive relabel-until-stable components
            let mut comp: Vec<usize> = (0..n).collect();
            loop {
                let mut changed = false;
                for &(a, b) in &pairs {
                    let m = comp[a].min(comp[b]);
                    if comp[a] != m || comp[b] != m {
                        comp[a] = m;
                        comp[b] = m;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            for a in 0..n {
                for b in 0..n {
                    prop_assert_eq!(uf.same(a, b), comp[a] == comp[b]);
                }
            }
            let distinct: std::collections::BTreeSet<_> = comp.iter().collect();
            prop_assert_eq!(uf.sets(), distinct.len());
        }
    }
}
