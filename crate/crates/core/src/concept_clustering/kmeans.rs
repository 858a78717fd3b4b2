//! Mini-batch k-means with k-means++ seeding, deterministic under a seed.
//!
//! Updates follow the batched form: assign the batch to nearest centroids,
//! then move each centroid toward its batch mean with a per-centroid
//! learning rate of batch_count / lifetime_count. With the batch covering
//! the whole input this step never increases the objective, because moving
//! a centroid part-way toward the mean of its assigned points cannot
//! increase their summed squared distance, and reassignment only decreases
//! it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
}

/// Raw clustering outcome over anonymous points.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOutcome {
    pub centroids: Vec<Vec<f64>>,
    /// assignments[i] = index of the nearest centroid to point i, enforced
    /// by a finishing full pass.
    pub assignments: Vec<usize>,
    /// Full-data objective (sum of squared distances to assigned centroids)
    /// after seeding and after each iteration.
    pub objective_trace: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

fn objective(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> f64 {
    points.iter().map(|p| nearest(p, centroids).1).sum()
}

/// k-means++ seeding: first centroid uniform, then each next centroid drawn
/// with probability proportional to squared distance from the chosen set.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, d) in dist.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // every point already coincides with a centroid
            rng.gen_range(0..points.len())
        };
        centroids.push(points[next].clone());
        for (d, p) in dist.iter_mut().zip(points) {
            let nd = squared_distance(p, centroids.last().expect("just pushed"));
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// Clusters `points` into `k` groups. Deterministic given the seed; errors
/// when there are fewer points than clusters.
pub fn minibatch_kmeans(points: &[Vec<f64>], params: &KMeansParams) -> Result<KMeansOutcome> {
    let KMeansParams {
        k,
        batch_size,
        iterations,
        seed,
    } = *params;
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::InvalidInput(format!(
            "{} points cannot form {k} clusters",
            points.len()
        )));
    }
    if batch_size == 0 {
        return Err(Error::InvalidInput("batch size must be positive".into()));
    }
    let dim = points[0].len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::InvalidInput(format!(
                "point {i} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!("point {i} has a non-finite component")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut trace = vec![objective(points, &centroids)];
    let mut lifetime_counts = vec![0u64; k];
    let full_batch = batch_size >= points.len();

    let mut batch_indices: Vec<usize> = (0..points.len()).collect();
    for _ in 0..iterations {
        let batch: &[usize] = if full_batch {
            &batch_indices
        } else {
            // partial Fisher-Yates: the first batch_size entries become a
            // uniform sample without replacement
            for i in 0..batch_size {
                let j = rng.gen_range(i..batch_indices.len());
                batch_indices.swap(i, j);
            }
            &batch_indices[..batch_size]
        };

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0u64; k];
        for &idx in batch {
            let (c, _) = nearest(&points[idx], &centroids);
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(&points[idx]) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            lifetime_counts[c] += counts[c];
            let rate = counts[c] as f64 / lifetime_counts[c] as f64;
            let inv = 1.0 / counts[c] as f64;
            for (ci, si) in centroids[c].iter_mut().zip(&sums[c]) {
                let mean = si * inv;
                *ci += rate * (mean - *ci);
            }
        }
        trace.push(objective(points, &centroids));
    }

    // finishing full pass: assignments are exactly nearest-centroid
    let assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    Ok(KMeansOutcome {
        centroids,
        assignments,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: (f64, f64), n: usize, spread: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                vec![center.0 + spread * (t - 0.5), center.1 - spread * (t - 0.5)]
            })
            .collect()
    }

    #[test]
    fn k_equal_distinct_points_reaches_zero_objective() {
        let points = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![5.0, 5.0],
        ];
        let out = minibatch_kmeans(
            &points,
            &KMeansParams {
                k: 4,
                batch_size: 4,
                iterations: 10,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(*out.objective_trace.last().unwrap(), 0.0);
        let mut seen: Vec<usize> = out.assignments.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn two_blobs_recovered() {
        let mut points = blob((0.0, 0.0), 6, 0.5);
        points.extend(blob((10.0, 10.0), 6, 0.5));
        let out = minibatch_kmeans(
            &points,
            &KMeansParams {
                k: 2,
                batch_size: 12,
                iterations: 25,
                seed: 1,
            },
        )
        .unwrap();
        let first = out.assignments[0];
        assert!(out.assignments[..6].iter().all(|&a| a == first));
        assert!(out.assignments[6..].iter().all(|&a| a != first));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let mut points = blob((0.0, 0.0), 15, 2.0);
        points.extend(blob((4.0, -3.0), 17, 2.5));
        let params = KMeansParams {
            k: 5,
            batch_size: 8,
            iterations: 30,
            seed: 99,
        };
        let a = minibatch_kmeans(&points, &params).unwrap();
        let b = minibatch_kmeans(&points, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_batch_objective_never_increases() {
        let mut points = blob((0.0, 0.0), 10, 3.0);
        points.extend(blob((6.0, 1.0), 11, 2.0));
        points.extend(blob((-3.0, 8.0), 7, 1.0));
        let out = minibatch_kmeans(
            &points,
            &KMeansParams {
                k: 4,
                batch_size: points.len(),
                iterations: 40,
                seed: 5,
            },
        )
        .unwrap();
        for w in out.objective_trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "objective rose from {} to {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn final_assignment_is_nearest_centroid() {
        let mut points = blob((0.0, 0.0), 9, 4.0);
        points.extend(blob((7.0, 7.0), 9, 4.0));
        let out = minibatch_kmeans(
            &points,
            &KMeansParams {
                k: 3,
                batch_size: 4,
                iterations: 12,
                seed: 11,
            },
        )
        .unwrap();
        for (p, &a) in points.iter().zip(&out.assignments) {
            let (n, _) = nearest(p, &out.centroids);
            assert_eq!(a, n);
        }
    }

    #[test]
    fn fewer_points_than_k_is_error() {
        let points = vec![vec![0.0], vec![1.0]];
        assert!(minibatch_kmeans(
            &points,
            &KMeansParams {
                k: 3,
                batch_size: 2,
                iterations: 5,
                seed: 0,
            }
        )
        .is_err());
    }
}
