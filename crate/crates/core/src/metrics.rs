//! Embedding-free quality measures on distance matrices and labelings.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distance::DistanceMatrix;
use crate::{Error, Result};

/// The `k` nearest other rows of `i`, ties broken by row index, sorted.
fn knn(d: &DistanceMatrix, i: usize, k: usize, buf: &mut Vec<(f64, usize)>) -> Vec<usize> {
    buf.clear();
    buf.extend(d.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(j, &v)| (v, j)));
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < buf.len() {
        buf.select_nth_unstable_by(k - 1, cmp);
    }
    let mut out: Vec<usize> = buf[..k].iter().map(|p| p.1).collect();
    out.sort_unstable();
    out
}

fn overlap(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Mean fraction of each row's `k` nearest neighbours under `est` that are
/// also among its `k` nearest under `truth`.
pub fn precision_at_k(est: &DistanceMatrix, truth: &DistanceMatrix, k: usize) -> Result<f64> {
    let n = est.n();
    if truth.n() != n {
        return Err(Error::Dimension(alloc::format!("{n} rows vs {}", truth.n())));
    }
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, n });
    }
    let row = |i: usize, buf: &mut Vec<(f64, usize)>| {
        let a = knn(est, i, k, buf);
        let b = knn(truth, i, k, buf);
        overlap(&a, &b)
    };
    #[cfg(feature = "std")]
    let hits: usize = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map_init(Vec::new, |buf, i| row(i, buf)).sum()
    };
    #[cfg(not(feature = "std"))]
    let hits: usize = {
        let mut buf = Vec::new();
        (0..n).map(|i| row(i, &mut buf)).sum()
    };
    Ok(hits as f64 / (n * k) as f64)
}

/// Scale-free squared relative error: with `c` minimising
/// `sum (c * est - truth)^2`, the mean of `(c * est - truth)^2 / truth^2`
/// over pairs with `truth > 0`. All pairs are used when there are at most
/// `sample_pairs` of them; otherwise that many are drawn with replacement.
pub fn distortion(est: &DistanceMatrix, truth: &DistanceMatrix, sample_pairs: usize, seed: u64) -> Result<f64> {
    let n = est.n();
    if truth.n() != n {
        return Err(Error::Dimension(alloc::format!("{n} rows vs {}", truth.n())));
    }
    if n < 2 {
        return Err(Error::TooFewRows { rows: n, required: 2 });
    }
    let total = n * (n - 1) / 2;
    let mut pairs = Vec::new();
    if total <= sample_pairs {
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while pairs.len() < sample_pairs {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                pairs.push((i, j));
            }
        }
    }
    pairs.retain(|&(i, j)| truth.get(i, j) > 0.0);
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let (mut et, mut ee) = (0.0, 0.0);
    for &(i, j) in &pairs {
        let (e, t) = (est.get(i, j), truth.get(i, j));
        et += e * t;
        ee += e * e;
    }
    let c = if ee > 0.0 { et / ee } else { 0.0 };
    let s: f64 = pairs
        .iter()
        .map(|&(i, j)| {
            let (e, t) = (est.get(i, j), truth.get(i, j));
            let r = c * e - t;
            r * r / (t * t)
        })
        .sum();
    Ok(s / pairs.len() as f64)
}

/// Dense relabelling `0..k` in order of first appearance.
fn dense_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut seen: Vec<usize> = Vec::new();
    let out = labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(p) => p,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect();
    (out, seen.len())
}

/// Mean silhouette `(b - a) / max(a, b)`; points in singleton clusters
/// score 0.
pub fn silhouette(d: &DistanceMatrix, labels: &[usize]) -> Result<f64> {
    let n = d.n();
    if labels.len() != n {
        return Err(Error::Dimension(alloc::format!("{} labels for {n} rows", labels.len())));
    }
    let (lab, k) = dense_labels(labels);
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    let mut size = vec![0usize; k];
    for &l in &lab {
        size[l] += 1;
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        if size[lab[i]] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, &v) in d.row(i).iter().enumerate() {
            sums[lab[j]] += v;
        }
        let a = sums[lab[i]] / (size[lab[i]] - 1) as f64;
        let b = (0..k).filter(|&c| c != lab[i]).map(|c| sums[c] / size[c] as f64).fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same rows.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(alloc::format!("{} vs {} labels", a.len(), b.len())));
    }
    let (la, ka) = dense_labels(a);
    let (lb, kb) = dense_labels(b);
    let mut table = vec![0u64; ka * kb];
    for (&x, &y) in la.iter().zip(&lb) {
        table[x * kb + y] += 1;
    }
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for x in 0..ka {
        for y in 0..kb {
            rows[x] += table[x * kb + y];
            cols[y] += table[x * kb + y];
        }
    }
    let index: f64 = table.iter().map(|&c| choose2(c)).sum();
    let sa: f64 = rows.iter().map(|&c| choose2(c)).sum();
    let sb: f64 = cols.iter().map(|&c| choose2(c)).sum();
    let pairs = choose2(a.len() as u64);
    if pairs == 0.0 {
        return Ok(1.0);
    }
    let expected = sa * sb / pairs;
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> DistanceMatrix {
        DistanceMatrix::from_fn(n, |i, j| (j - i) as f64)
    }

    #[test]
    fn precision_identity_and_range() {
        let d = line(10);
        for k in 1..10 {
            assert_eq!(precision_at_k(&d, &d, k).unwrap(), 1.0);
        }
        assert!(matches!(precision_at_k(&d, &d, 10), Err(Error::KOutOfRange { .. })));
        assert!(precision_at_k(&d, &d, 0).is_err());
    }

    #[test]
    fn precision_breaks_ties_by_index() {
        // Every row of `flat` is all ones, so neighbours are the lowest
        // indices.
        let flat = DistanceMatrix::from_fn(4, |_, _| 1.0);
        let d = line(4);
        // k=1: flat picks 1,0,0,0; line picks 1,0,1,2.
        assert_eq!(precision_at_k(&flat, &d, 1).unwrap(), 0.5);
    }

    #[test]
    fn distortion_scale_free() {
        let t = line(6);
        let e = DistanceMatrix::from_fn(6, |i, j| 7.0 * (j - i) as f64);
        assert_eq!(distortion(&t, &t, 10_000, 0).unwrap(), 0.0);
        assert!(distortion(&e, &t, 10_000, 0).unwrap() < 1e-24);
    }

    #[test]
    fn distortion_hand_instance() {
        // Pairs (0,1), (0,2), (1,2): truth 1, 2, 1; est 1, 1, 1.
        let t = DistanceMatrix::from_dense(3, vec![0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]).unwrap();
        let e = DistanceMatrix::from_fn(3, |_, _| 1.0);
        // c = 4 / 3; residuals 1/3, -2/3, 1/3 -> (1/9 + (4/9)/4 + 1/9) / 3.
        let want = (1.0 / 9.0 + 1.0 / 9.0 + 1.0 / 9.0) / 3.0;
        assert!((distortion(&e, &t, 10, 0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn silhouette_two_pairs() {
        // Points 0,1 and 2,3: intra 1, inter 10.
        let d = DistanceMatrix::from_fn(4, |i, j| if i / 2 == j / 2 { 1.0 } else { 10.0 });
        assert!((silhouette(&d, &[0, 0, 1, 1]).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(silhouette(&d, &[5, 5, 2, 2]).unwrap(), silhouette(&d, &[0, 0, 1, 1]).unwrap());
        let flat = DistanceMatrix::from_fn(4, |_, _| 3.0);
        assert_eq!(silhouette(&flat, &[0, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(silhouette(&d, &[0, 0, 0, 0]), Err(Error::SingleCluster));
        // Singletons contribute 0.
        assert_eq!(silhouette(&d, &[0, 1, 2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn ari_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((v + 0.5).abs() < 1e-12);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 0, 0]).unwrap(), 1.0);
    }
}
