//! Spectral clustering on a diffusion operator.

use mural_core::distance::DiffusionOperator;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MuralError, Result};

pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_ITERS: usize = 300;

/// Right eigenvectors of `P` for the `count` largest eigenvalues after the
/// stationary one, as an `n x count` row-major embedding.
///
/// `P = D^-1 K` is similar to the symmetric `A = D^-1/2 K D^-1/2`; the
/// trivial eigenvector `sqrt(d)` of `A` is deflated to eigenvalue -2 before
/// the decomposition, and eigenvectors `phi` of `A` map back to `D^-1/2 phi`.
pub fn diffusion_eigenvectors(p: &DiffusionOperator, count: usize) -> Result<Vec<Vec<f64>>> {
    let n = p.n();
    let sd: Vec<f64> = p.degrees().iter().map(|d| d.sqrt()).collect();
    let norm = sd.iter().map(|x| x * x).sum::<f64>().sqrt();
    let phi0: Vec<f64> = sd.iter().map(|x| x / norm).collect();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let aij = sd[i] * p.get(i, j) / sd[j];
        let aji = sd[j] * p.get(j, i) / sd[i];
        0.5 * (aij + aji) - 3.0 * phi0[i] * phi0[j]
    });
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0).ok_or_else(|| MuralError::Eigen("no convergence".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(MuralError::Eigen("non-finite eigenvalues".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    Ok((0..n).map(|i| order[..count].iter().map(|&c| eig.eigenvectors[(i, c)] / sd[i]).collect()).collect())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            // All remaining points coincide with a centre: take any unused one.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[pick]));
        }
    }
    centers
}

/// Lloyd iterations from k-means++ seeds; the run with the lowest inertia
/// over `restarts` wins. Returns labels and inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> (Vec<usize>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = points.first().map_or(0, Vec::len);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts.max(1) {
        let mut centers = kmeans_pp(points, k, &mut rng);
        let mut labels = vec![usize::MAX; points.len()];
        for _ in 0..KMEANS_ITERS {
            let mut changed = false;
            for (i, p) in points.iter().enumerate() {
                let (c, _) = nearest(p, &centers);
                if labels[i] != c {
                    labels[i] = c;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (p, &l) in points.iter().zip(&labels) {
                counts[l] += 1;
                sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
            }
            for c in 0..k {
                if counts[c] > 0 {
                    centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
                }
            }
        }
        let inertia: f64 = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((labels, inertia));
        }
    }
    let (labels, inertia) = best.expect("at least one restart");
    (canonical(&labels), inertia)
}

/// Renames cluster ids in order of first appearance.
fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|m| m.0 == l) {
            Some(m) => m.1,
            None => {
                map.push((l, map.len()));
                map.len() - 1
            }
        })
        .collect()
}

/// k-means on the leading non-trivial right eigenvectors of `P`
/// (`k - 1` of them).
pub fn spectral_cluster(p: &DiffusionOperator, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = p.n();
    if k < 2 || k > n {
        return Err(mural_core::Error::KOutOfRange { k, n }.into());
    }
    let embedding = diffusion_eigenvectors(p, k - 1)?;
    Ok(kmeans(&embedding, k, KMEANS_RESTARTS, seed).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mural_core::distance::{diffusion, AffinityMatrix};

    #[test]
    fn disconnected_blocks() {
        let n = 6;
        let data: Vec<f64> = (0..n * n).map(|x| if (x / n < 3) == (x % n < 3) { 1.0 } else { 0.0 }).collect();
        let p = diffusion(&AffinityMatrix::from_dense(n, data, 1.0).unwrap()).unwrap();
        assert_eq!(spectral_cluster(&p, 2, 0).unwrap(), vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn kmeans_singletons() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * i as f64]).collect();
        let (labels, inertia) = kmeans(&pts, 5, 3, 1);
        assert_eq!(labels, vec![0, 1, 2, 3, 4]);
        assert_eq!(inertia, 0.0);
    }
}
