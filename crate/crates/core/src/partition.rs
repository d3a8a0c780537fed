//! Directional clustering of MGA weight vectors.
//!
//! Vectors are normalised to unit length and clustered with Lloyd's k-means.
//! Centres are seeded with k-means++ from a ChaCha8 stream. Assignment ties go
//! to the lowest cluster index. A cluster left empty by an assignment step is
//! re-seeded at the point farthest from its current centre.
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::MgaWeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Unit-norm centre.
    pub centroid: Vec<f64>,
    /// Positions in the input list, ascending.
    pub indices: Vec<usize>,
    pub members: Vec<MgaWeightVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPartition {
    pub clusters: Vec<Cluster>,
    pub k: usize,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
}

impl WeightPartition {
    /// Cluster index of every input vector.
    pub fn assignment(&self) -> Vec<usize> {
        let n = self.clusters.iter().map(|c| c.indices.len()).sum();
        let mut out = vec![0; n];
        for (c, cl) in self.clusters.iter().enumerate() {
            for &i in &cl.indices {
                out[i] = c;
            }
        }
        out
    }
}

pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidArgument(
            "cannot normalise a zero or non-finite vector".into(),
        ));
    }
    Ok(v.iter().map(|a| a / norm).collect())
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centres: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centre) in centres.iter().enumerate() {
        let d = dist2(p, centre);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.gen_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave the target just past the last positive weight.
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("positive total"))
        } else {
            (0..points.len())
                .find(|i| !chosen.contains(i))
                .expect("k <= number of points")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Clusters `vectors` by direction into `k` groups.
pub fn partition_weights(
    vectors: &[MgaWeightVector],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<WeightPartition> {
    if k < 1 || k > vectors.len() {
        return Err(Error::InvalidArgument(format!(
            "cluster count {k} outside 1..={}",
            vectors.len()
        )));
    }
    let dim = vectors[0].dim();
    if vectors.iter().any(|v| v.dim() != dim) {
        return Err(Error::Dimension("weight vectors differ in length".into()));
    }
    let points = vectors
        .iter()
        .map(|v| normalize(&v.weights))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centres = kmeans_pp(&points, k, &mut rng);
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centres).0).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        let da = dist2(&points[a], &centres[assign[a]]);
                        let db = dist2(&points[b], &centres[assign[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("non-empty input");
                centres[c] = points[far].clone();
            } else {
                centres[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centres).0).collect();
        if next == assign {
            converged = true;
            break;
        }
        assign = next;
    }

    let clusters = (0..k)
        .map(|c| {
            let indices: Vec<usize> = (0..points.len()).filter(|&i| assign[i] == c).collect();
            let centroid =
                normalize(&centres[c]).unwrap_or_else(|_| points[indices.first().copied().unwrap_or(0)].clone());
            Cluster {
                centroid,
                members: indices.iter().map(|&i| vectors[i].clone()).collect(),
                indices,
            }
        })
        .collect();
    Ok(WeightPartition {
        clusters,
        k,
        seed,
        iterations,
        converged,
    })
}

/// One work list per non-empty cluster, each holding up to `per_instance`
/// `(input index, vector)` pairs in cluster order.
pub fn schedule(partition: &WeightPartition, per_instance: usize) -> Vec<Vec<(usize, MgaWeightVector)>> {
    partition
        .clusters
        .iter()
        .filter(|c| !c.indices.is_empty())
        .map(|c| {
            c.indices
                .iter()
                .copied()
                .zip(c.members.iter().cloned())
                .take(per_instance)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vecs(raw: &[&[f64]]) -> Vec<MgaWeightVector> {
        raw.iter().map(|w| MgaWeightVector::explicit(w.to_vec())).collect()
    }

    #[test]
    fn two_directions() {
        let v = vecs(&[&[1.0, 0.0], &[0.9, 0.1], &[0.0, 1.0], &[0.1, 0.9]]);
        let p = partition_weights(&v, 2, 3, 100).unwrap();
        let a = p.assignment();
        assert_eq!(a[0], a[1]);
        assert_eq!(a[2], a[3]);
        assert_ne!(a[0], a[2]);
        for c in &p.clusters {
            let n: f64 = c.centroid.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k_equal_to_count_gives_singletons() {
        let v = vecs(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]]);
        let p = partition_weights(&v, 4, 11, 100).unwrap();
        assert!(p.clusters.iter().all(|c| c.indices.len() == 1));
    }

    #[test]
    fn rejects_bad_input() {
        let v = vecs(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(partition_weights(&v, 1, 0, 10).is_err());
        let v = vecs(&[&[1.0, 0.0]]);
        assert!(partition_weights(&v, 2, 0, 10).is_err());
        assert!(partition_weights(&v, 0, 0, 10).is_err());
    }

    #[test]
    fn schedule_caps_and_skips_empty() {
        let v = vecs(&[&[1.0, 0.0], &[0.9, 0.1], &[0.8, 0.2], &[0.0, 1.0]]);
        let p = partition_weights(&v, 2, 5, 100).unwrap();
        let lists = schedule(&p, 2);
        assert_eq!(lists.len(), 2);
        assert!(lists.iter().all(|l| l.len() <= 2));
        let mut p1 = p.clone();
        p1.clusters.push(Cluster {
            centroid: vec![1.0, 0.0],
            indices: vec![],
            members: vec![],
        });
        assert_eq!(schedule(&p1, 16).len(), 2);
        let single = partition_weights(&v, 1, 5, 100).unwrap();
        assert_eq!(
            schedule(&single, 16),
            vec![v.iter().cloned().enumerate().collect::<Vec<_>>()]
        );
    }
}
