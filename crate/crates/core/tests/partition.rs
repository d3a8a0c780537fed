use cga_core::partition::{partition_weights, schedule};
use cga_core::MgaWeightVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row-major point matrix.
struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    fn unit_rows(vectors: &[Vec<f64>]) -> Self {
        let dim = vectors[0].len();
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for v in vectors {
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            data.extend(v.iter().map(|a| a / n));
        }
        Self { data, dim }
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

fn closest(p: &[f64], centres: &[Vec<f64>]) -> usize {
    let mut best = 0;
    for c in 1..centres.len() {
        if sq(p, &centres[c]) < sq(p, &centres[best]) {
            best = c;
        }
    }
    best
}

/// Plain Lloyd iteration with k-means++ seeding drawn from the same ChaCha8 stream.
fn oracle(vectors: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Vec<usize> {
    let pts = Points::unit_rows(vectors);
    let n = pts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n);
    let mut picks = vec![first];
    let mut weight: Vec<f64> = (0..n).map(|i| sq(pts.row(i), pts.row(first))).collect();
    for _ in 1..k {
        let total: f64 = weight.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut cum = 0.0;
            let mut found = None;
            let mut last_positive = 0;
            for (i, w) in weight.iter().enumerate() {
                cum += w;
                if *w > 0.0 {
                    last_positive = i;
                    if found.is_none() && cum > target {
                        found = Some(i);
                    }
                }
            }
            found.unwrap_or(last_positive)
        } else {
            (0..n).find(|i| !picks.contains(i)).unwrap()
        };
        picks.push(pick);
        for i in 0..n {
            weight[i] = weight[i].min(sq(pts.row(i), pts.row(pick)));
        }
    }
    let mut centres: Vec<Vec<f64>> = picks.iter().map(|&i| pts.row(i).to_vec()).collect();
    let mut labels: Vec<usize> = (0..n).map(|i| closest(pts.row(i), &centres)).collect();
    for _ in 0..max_iters {
        let mut updated = centres.clone();
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            if members.is_empty() {
                let mut far = 0;
                for i in 1..n {
                    if sq(pts.row(i), &centres[labels[i]]) > sq(pts.row(far), &centres[labels[far]]) {
                        far = i;
                    }
                }
                updated[c] = pts.row(far).to_vec();
            } else {
                let mut mean = vec![0.0; pts.dim];
                for &i in &members {
                    for (m, v) in mean.iter_mut().zip(pts.row(i)) {
                        *m += v;
                    }
                }
                updated[c] = mean.iter().map(|m| m / members.len() as f64).collect();
            }
        }
        centres = updated;
        let next: Vec<usize> = (0..n).map(|i| closest(pts.row(i), &centres)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

fn random_set(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn wrap(raw: &[Vec<f64>]) -> Vec<MgaWeightVector> {
    raw.iter().cloned().map(MgaWeightVector::explicit).collect()
}

/// Points scattered around `k` well separated unit directions, with random
/// positive lengths. Returns the vectors and their planted labels.
fn planted(k: usize, per: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut labels = Vec::new();
    for i in 0..k * per {
        let c = i % k;
        let scale = rng.gen_range(0.1..50.0);
        let v: Vec<f64> = (0..dim)
            .map(|j| scale * (if j == c { 1.0 } else { 0.0 } + rng.gen_range(-0.05..0.05)))
            .collect();
        out.push(v);
        labels.push(c);
    }
    (out, labels)
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

#[test]
fn matches_independent_lloyd() {
    let raw = random_set(320, 12, 99);
    for seed in [0, 1, 7] {
        let part = partition_weights(&wrap(&raw), 6, seed, 100).unwrap();
        assert_eq!(part.assignment(), oracle(&raw, 6, seed, 100), "seed {seed}");
    }
}

#[test]
fn converged_points_sit_nearest_their_centre() {
    let raw = random_set(200, 6, 3);
    let part = partition_weights(&wrap(&raw), 5, 11, 500).unwrap();
    assert!(part.converged);
    let pts = Points::unit_rows(&raw);
    let labels = part.assignment();
    let means: Vec<Vec<f64>> = (0..5)
        .map(|c| {
            let m: Vec<usize> = (0..raw.len()).filter(|&i| labels[i] == c).collect();
            (0..pts.dim)
                .map(|d| m.iter().map(|&i| pts.row(i)[d]).sum::<f64>() / m.len() as f64)
                .collect()
        })
        .collect();
    for i in 0..raw.len() {
        let own = sq(pts.row(i), &means[labels[i]]);
        assert!(means.iter().all(|m| own <= sq(pts.row(i), m) + 1e-12));
    }
    for c in &part.clusters {
        let norm: f64 = c.centroid.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn planted_clusters_recovered() {
    for seed in 0..5 {
        let (raw, truth) = planted(4, 15, 6, seed);
        let part = partition_weights(&wrap(&raw), 4, seed, 100).unwrap();
        assert!(same_partition(&part.assignment(), &truth), "seed {seed}");
    }
}

#[test]
fn schedule_respects_cap_and_covers_inputs() {
    let (raw, _) = planted(3, 10, 4, 2);
    let part = partition_weights(&wrap(&raw), 3, 0, 100).unwrap();
    let full = schedule(&part, usize::MAX);
    let mut seen: Vec<usize> = full.iter().flatten().map(|(i, _)| *i).collect();
    seen.sort_unstable();
    assert_eq!(seen, (0..raw.len()).collect::<Vec<_>>());
    assert!(schedule(&part, 4).iter().all(|l| l.len() == 4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rescaling_does_not_change_clusters(
        seed in 0u64..10_000,
        scales in prop::collection::vec(1e-3f64..1e3, 40),
    ) {
        let raw = random_set(40, 5, seed);
        let scaled: Vec<Vec<f64>> = raw.iter().zip(&scales)
            .map(|(v, s)| v.iter().map(|a| a * s).collect())
            .collect();
        let a = partition_weights(&wrap(&raw), 4, seed, 100).unwrap();
        let b = partition_weights(&wrap(&scaled), 4, seed, 100).unwrap();
        prop_assert_eq!(a.assignment(), b.assignment());
    }

    #[test]
    fn every_vector_lands_in_one_cluster(seed in 0u64..10_000, k in 1usize..8) {
        let raw = random_set(30, 4, seed);
        let part = partition_weights(&wrap(&raw), k, seed, 100).unwrap();
        let total: usize = part.clusters.iter().map(|c| c.indices.len()).sum();
        prop_assert_eq!(total, 30);
        prop_assert_eq!(part.clusters.len(), k);
    }
}
