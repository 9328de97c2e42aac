#![allow(dead_code)]

use mural_core::data::{Column, ColumnKind, ColumnSpec, Dataset, Schema};
use mural_core::distance::DistanceMatrix;
use mural_core::forest::{Topology, TreeShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random rooted tree: leaves are expanded into 2-4 children until the
/// leaf count reaches a random target of at most `max_leaves`.
pub fn random_topology(rng: &mut ChaCha8Rng, max_leaves: usize) -> Topology {
    let target = rng.random_range(2..=max_leaves);
    let mut parents: Vec<Option<usize>> = vec![None];
    let mut weights = vec![0.0];
    let mut leaves = vec![0usize];
    while leaves.len() < target {
        let pick = rng.random_range(0..leaves.len());
        let node = leaves.swap_remove(pick);
        let arity = rng.random_range(2..=4).min(target - leaves.len()).max(2);
        for _ in 0..arity {
            leaves.push(parents.len());
            parents.push(Some(node));
            weights.push(if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.1..3.0) });
        }
    }
    Topology::new(parents, weights).unwrap()
}

/// Floyd-Warshall over the undirected weighted tree.
#[allow(clippy::needless_range_loop)]
pub fn floyd_warshall<T: TreeShape>(tree: &T) -> Vec<Vec<f64>> {
    let n = tree.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        if let Some(p) = tree.parent(i) {
            d[i][p] = tree.edge_weight(i);
            d[p][i] = tree.edge_weight(i);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Random simplex vector with some exact zeros.
pub fn random_masses(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut m: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() }).collect();
    if m.iter().all(|&x| x == 0.0) {
        m[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = m.iter().sum();
    m.iter_mut().for_each(|x| *x /= s);
    m
}

/// Leaf-to-leaf ground metric of `tree` as a distance matrix over its
/// leaves (in `leaves_dfs` order).
pub fn leaf_metric<T: TreeShape>(tree: &T) -> (Vec<usize>, DistanceMatrix) {
    let all = floyd_warshall(tree);
    let leaves = tree.leaves_dfs();
    let d = DistanceMatrix::from_fn(leaves.len(), |i, j| all[leaves[i]][leaves[j]]);
    (leaves, d)
}

/// Node masses obtained by pushing leaf masses up to the root.
pub fn subtree_masses<T: TreeShape>(tree: &T, leaves: &[usize], leaf_mass: &[f64]) -> Vec<f64> {
    let n = tree.node_count();
    let mut m = vec![0.0; n];
    for (&l, &x) in leaves.iter().zip(leaf_mass) {
        m[l] = x;
    }
    for i in (1..n).rev() {
        let p = tree.parent(i).unwrap();
        m[p] += m[i];
    }
    m
}

/// Mixed-type dataset: two continuous signals, a binary, an ordinal and a
/// categorical column. With `missing`, the first continuous column is
/// masked above a threshold and the ordinal column at random.
pub fn mixed_dataset(rng: &mut ChaCha8Rng, n: usize, missing: bool) -> Dataset {
    let schema = Schema::new(vec![
        ColumnSpec::new("a", ColumnKind::Continuous),
        ColumnSpec::new("b", ColumnKind::Continuous),
        ColumnSpec::new("flag", ColumnKind::Binary),
        ColumnSpec::new("grade", ColumnKind::Ordinal { levels: 4 }),
        ColumnSpec::new("site", ColumnKind::Categorical { cardinality: 3 }),
    ])
    .unwrap();
    let mut cols: Vec<Vec<Option<f64>>> = (0..5).map(|_| Vec::with_capacity(n)).collect();
    for _ in 0..n {
        let z: f64 = rng.random_range(-2.0..2.0);
        let a = z + rng.random_range(-0.3..0.3);
        cols[0].push(if missing && a > 1.2 { None } else { Some(a) });
        cols[1].push(Some(rng.random_range(-1.0..1.0) - z));
        cols[2].push(Some(if z + rng.random_range(-1.0..1.0) > 0.0 { 1.0 } else { 0.0 }));
        let g = rng.random_range(0..4) as f64;
        cols[3].push(if missing && rng.random_bool(0.15) { None } else { Some(g) });
        cols[4].push(Some(rng.random_range(0..3) as f64));
    }
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(j, c)| if j < 2 { Column::continuous(c) } else { Column::discrete(c.into_iter().map(|v| v.map(|x| x as u32)).collect()) })
        .collect();
    Dataset::new(schema, columns).unwrap()
}
