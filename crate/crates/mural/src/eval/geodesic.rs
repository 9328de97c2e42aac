//! Rank agreement between an estimated metric and shortest-path distances
//! on the complete-data kNN graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use mural_core::data::standardize;
use mural_core::distance::DistanceMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generate::SwissRollSample;
use crate::error::{MuralError, Result};

/// Pair budget above which pairs are sampled.
pub const MAX_PAIRS: usize = 100_000;
const SAMPLE_SOURCES: usize = 100;

/// Symmetrised kNN graph with Euclidean edge lengths.
fn knn_graph(points: &[Vec<f64>], k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = points.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut buf: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        buf.clear();
        buf.extend((0..n).filter(|&j| j != i).map(|j| {
            let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            (d.sqrt(), j)
        }));
        let k = k.min(buf.len());
        if k == 0 {
            continue;
        }
        buf.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(d, j) in &buf[..k] {
            adj[i].push((j, d));
            adj[j].push((i, d));
        }
    }
    for list in &mut adj {
        list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        list.dedup_by_key(|e| e.0);
    }
    adj
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Item(0.0, source));
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Item(nd, v));
            }
        }
    }
    dist
}

/// Builds the graph with `k_graph` neighbours, doubling once if it is
/// disconnected.
fn connected_graph(points: &[Vec<f64>], k_graph: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    for k in [k_graph, 2 * k_graph] {
        let adj = knn_graph(points, k);
        if points.is_empty() || dijkstra(&adj, 0).iter().all(|d| d.is_finite()) {
            return Ok(adj);
        }
    }
    Err(MuralError::Disconnected(2 * k_graph))
}

/// All-pairs shortest-path distances on the kNN graph of `points`.
pub fn geodesic_distances(points: &[Vec<f64>], k_graph: usize) -> Result<DistanceMatrix> {
    let adj = connected_graph(points, k_graph)?;
    let rows: Vec<Vec<f64>> = (0..points.len()).map(|s| dijkstra(&adj, s)).collect();
    Ok(DistanceMatrix::from_fn(points.len(), |i, j| 0.5 * (rows[i][j] + rows[j][i])))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        order[i..j].iter().for_each(|&o| r[o] = avg);
        i = j;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Spearman correlation between `est` and graph geodesics over all pairs,
/// or over [`MAX_PAIRS`] pairs (100 random sources, random targets each)
/// when there are more pairs than that.
pub fn geodesic_correlation_points(est: &DistanceMatrix, points: &[Vec<f64>], k_graph: usize, seed: u64) -> Result<f64> {
    let n = points.len();
    if est.n() != n {
        return Err(mural_core::Error::Dimension(format!("{} rows vs {n} points", est.n())).into());
    }
    let adj = connected_graph(points, k_graph)?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    if n * (n - 1) / 2 <= MAX_PAIRS {
        for i in 0..n {
            let g = dijkstra(&adj, i);
            for (j, &gj) in g.iter().enumerate().skip(i + 1) {
                xs.push(est.get(i, j));
                ys.push(gj);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let per = MAX_PAIRS / SAMPLE_SOURCES;
        for _ in 0..SAMPLE_SOURCES {
            let s = rng.random_range(0..n);
            let g = dijkstra(&adj, s);
            for _ in 0..per {
                let mut t = rng.random_range(0..n - 1);
                if t >= s {
                    t += 1;
                }
                xs.push(est.get(s, t));
                ys.push(g[t]);
            }
        }
    }
    Ok(spearman(&xs, &ys))
}

/// Geodesic correlation against the standardized complete Swiss roll.
pub fn geodesic_correlation(est: &DistanceMatrix, truth: &SwissRollSample, k_graph: usize) -> Result<f64> {
    geodesic_correlation_points(est, &standardized_points(&truth.dataset), k_graph, 0)
}

/// Rows of a fully observed dataset after standardization.
pub fn standardized_points(d: &mural_core::data::Dataset) -> Vec<Vec<f64>> {
    let (s, _) = standardize(d);
    (0..s.n_rows()).map(|r| s.row(r).into_iter().map(|v| v.unwrap_or(0.0)).collect()).collect()
}
