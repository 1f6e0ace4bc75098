use proptest::prelude::*;

use flipqi::{MetricTree, TreeLine, TreeSpec};

fn random_tree() -> impl Strategy<Value = (usize, Vec<(usize, usize, u64)>)> {
    (2usize..24).prop_flat_map(|n| {
        (Just(n), proptest::collection::vec((any::<prop::sample::Index>(), 1u64..5), n - 1)).prop_map(|(n, picks)| {
            let edges = picks.iter().enumerate().map(|(i, (p, w))| (p.index(i + 1), i + 1, *w)).collect();
            (n, edges)
        })
    })
}

fn floyd_warshall(n: usize, edges: &[(usize, usize, u64)]) -> Vec<Vec<u64>> {
    let mut d = vec![vec![u64::MAX / 4; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b, w) in edges {
        d[a][b] = w;
        d[b][a] = w;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    d
}

proptest! {
    #[test]
    fn tree_distances_match_floyd_warshall((n, edges) in random_tree()) {
        let t = MetricTree::from_edges(n, &edges).unwrap();
        let d = floyd_warshall(n, &edges);
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(t.distance(a, b).unwrap(), d[a][b]);
            }
        }
    }

    #[test]
    fn four_point_condition((n, edges) in random_tree(), picks in proptest::collection::vec(any::<prop::sample::Index>(), 4)) {
        let t = MetricTree::from_edges(n, &edges).unwrap();
        let [x, y, z, w] = [0, 1, 2, 3].map(|i| picks[i].index(n));
        let d = |a, b| t.distance(a, b).unwrap();
        let mut s = [d(x, y) + d(z, w), d(x, z) + d(y, w), d(x, w) + d(y, z)];
        s.sort();
        prop_assert_eq!(s[1], s[2]);
    }

    #[test]
    fn geodesics_have_the_right_length((n, edges) in random_tree(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let t = MetricTree::from_edges(n, &edges).unwrap();
        let (a, b) = (a.index(n), b.index(n));
        let g = t.geodesic(a, b).unwrap();
        prop_assert_eq!(g.first(), Some(&a));
        prop_assert_eq!(g.last(), Some(&b));
        let len: u64 = g.windows(2).map(|p| t.distance(p[0], p[1]).unwrap()).sum();
        prop_assert_eq!(len, t.distance(a, b).unwrap());
        prop_assert!(g.windows(2).all(|p| t.neighbors(p[0]).iter().any(|&(v, _)| v == p[1])));
    }

    #[test]
    fn projection_is_the_nearest_point((n, edges) in random_tree(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>(), from in any::<prop::sample::Index>()) {
        let t = MetricTree::from_edges(n, &edges).unwrap();
        let subset = t.geodesic(a.index(n), b.index(n)).unwrap();
        prop_assert!(t.is_connected_subset(&subset));
        let from = from.index(n);
        let p = t.project_to_subtree(&subset, from).unwrap();
        let best = subset.iter().map(|&s| t.distance(from, s).unwrap()).min().unwrap();
        prop_assert_eq!(t.distance(from, p).unwrap(), best);
        prop_assert!(subset.contains(&p));
    }

    #[test]
    fn lines_along_geodesics_are_unit_speed(len in 1usize..15) {
        let t = MetricTree::build(&TreeSpec::path(2 * len + 1)).unwrap();
        let params: Vec<usize> = (0..=2 * len).collect();
        let line = TreeLine::new(&t, len as i64, 1, params).unwrap();
        for (s, a) in line.iter() {
            for (u, b) in line.iter() {
                prop_assert_eq!(t.distance(a, b).unwrap(), s.abs_diff(u));
            }
        }
        let mut swapped: Vec<usize> = (0..=2 * len).collect();
        swapped.swap(0, 1);
        prop_assert!(TreeLine::new(&t, len as i64, 1, swapped).is_err());
    }
}
