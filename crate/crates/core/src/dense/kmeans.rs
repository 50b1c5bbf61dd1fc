//! Lloyd's k-means over the columns of a matrix, seeded with k-means++.

use rand::Rng;

use super::{DenseMatrix, RngSeed};
use crate::error::{Error, Result};

pub const DEFAULT_KMEANS_MAX_ITER: usize = 100;

#[derive(Debug, Clone)]
pub struct Clustering {
    /// Cluster index of every column.
    pub assignment: Vec<usize>,
    /// Centroids as columns, `m×k`.
    pub centroids: DenseMatrix,
    /// Within-cluster sum of squares after each assignment step.
    pub objective_trace: Vec<f64>,
}

impl Clustering {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

/// Clusters the columns of `m` into `k` groups.
///
/// Empty clusters are re-seeded at the points farthest from their current
/// centroid. Ties in the assignment step go to the lowest cluster index, so
/// identical columns can leave a cluster permanently empty.
pub fn kmeans(m: &DenseMatrix, k: usize, seed: RngSeed, max_iter: usize) -> Result<Clustering> {
    let (dim, n) = m.shape();
    if k == 0 || k > n {
        return Err(Error::arg(format!("k = {k} outside 1..={n}")));
    }
    if max_iter == 0 {
        return Err(Error::arg("k-means needs max_iter >= 1"));
    }
    let points: Vec<&[f64]> = (0..n).map(|j| m.column(j)).collect();
    let mut rng = seed.rng();
    let mut centroids = plus_plus_seeds(&points, k, &mut rng);

    let mut assignment = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        let mut changed = false;
        for (j, p) in points.iter().enumerate() {
            let (best, d) = nearest(p, &centroids);
            if assignment[j] != best {
                assignment[j] = best;
                changed = true;
            }
            dist[j] = d;
        }
        trace.push(dist.iter().sum());
        if !changed && trace.len() > 1 {
            break;
        }

        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; dim]; k];
        for (j, p) in points.iter().enumerate() {
            counts[assignment[j]] += 1;
            sums[assignment[j]].iter_mut().zip(p.iter()).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                centroids[c] = sums[c].iter().map(|s| s * inv).collect();
            }
        }
        let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        if !empty.is_empty() {
            let mut far: Vec<usize> = (0..n).collect();
            far.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
            for (c, j) in empty.into_iter().zip(far) {
                centroids[c] = points[j].to_vec();
            }
        }
    }

    let flat: Vec<f64> = centroids.into_iter().flatten().collect();
    Ok(Clustering {
        assignment,
        centroids: DenseMatrix::from_column_major(dim, k, flat)?,
        objective_trace: trace,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(c, cen)| (c, sq_dist(p, cen)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus_seeds(points: &[&[f64]], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (j, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(j);
                    break;
                }
            }
            // Rounding can leave `acc` just short of `target`.
            pick.unwrap_or_else(|| (0..n).rev().find(|&j| d2[j] > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (j, p) in points.iter().enumerate() {
            d2[j] = d2[j].min(sq_dist(p, points[next]));
        }
    }
    chosen.into_iter().map(|j| points[j].to_vec()).collect()
}
