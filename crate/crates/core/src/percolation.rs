//! Bernoulli site percolation: seeded cluster sampling and Monte Carlo
//! estimates of expected absorbing-walk return probabilities.
//!
//! Sample `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so the
//! estimate does not depend on how rayon splits the work. Per-sample values
//! are collected in index order and reduced sequentially.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, WalkKernel};

pub const DEFAULT_CLUSTER_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterSample {
    pub root_open: bool,
    /// Vertex ids in discovery order; empty when the root is closed.
    pub cluster: Vec<usize>,
    /// The exploration stopped at the cap.
    pub truncated: bool,
}

/// Site states are drawn lazily, in BFS discovery order, for vertices of
/// `ball(root, radius)` only.
pub fn sample_cluster<R: Rng + ?Sized>(
    g: &Graph,
    root: usize,
    p: f64,
    radius: usize,
    cap: usize,
    rng: &mut R,
) -> ClusterSample {
    let within: Vec<bool> = {
        let mut w = vec![false; g.len()];
        for v in g.ball(root, radius) {
            w[v] = true;
        }
        w
    };
    // 0 = undecided, 1 = open, 2 = closed
    let mut state = vec![0u8; g.len()];
    let open = |v: usize, state: &mut Vec<u8>, rng: &mut R| -> bool {
        if state[v] == 0 {
            state[v] = if rng.random::<f64>() < p { 1 } else { 2 };
        }
        state[v] == 1
    };
    if !open(root, &mut state, rng) {
        return ClusterSample {
            root_open: false,
            cluster: Vec::new(),
            truncated: false,
        };
    }
    let mut cluster = vec![root];
    let mut queued = vec![false; g.len()];
    queued[root] = true;
    let mut head = 0;
    let mut truncated = false;
    'explore: while head < cluster.len() {
        let v = cluster[head];
        head += 1;
        for &w in g.neighbours(v) {
            if !within[w] || queued[w] {
                continue;
            }
            queued[w] = true;
            if open(w, &mut state, rng) {
                if cluster.len() >= cap {
                    truncated = true;
                    break 'explore;
                }
                cluster.push(w);
            }
        }
    }
    ClusterSample {
        root_open: true,
        cluster,
        truncated,
    }
}

/// Generator for sample `index` under master `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub capped: usize,
    pub seed: u64,
    pub p: f64,
    pub n: u32,
}

pub fn mc_expected_return(
    kernel: &WalkKernel<'_>,
    root: usize,
    p: f64,
    n: u32,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_expected_return_capped(kernel, root, p, n, samples, seed, DEFAULT_CLUSTER_CAP)
}

/// Average of `(T_C^n)(root, root)` over sampled clusters `C`, each cut to
/// the ball of radius `n/2` (closed paths of length `n` cannot leave it).
pub fn mc_expected_return_capped(
    kernel: &WalkKernel<'_>,
    root: usize,
    p: f64,
    n: u32,
    samples: usize,
    seed: u64,
    cap: usize,
) -> Result<McEstimate> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p.to_string()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let g = kernel.graph();
    let radius = (n / 2) as usize;
    g.require_ball(root, radius)?;
    let values: Vec<(f64, bool)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| -> Result<(f64, bool)> {
            let mut rng = sample_rng(seed, i);
            let sample = sample_cluster(g, root, p, radius, cap, &mut rng);
            let value = if !sample.root_open {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            } else if n == 0 {
                1.0
            } else {
                let fk = kernel.truncate(&sample.cluster)?;
                fk.return_probability(root, n).expect("root is in its cluster")
            };
            Ok((value, sample.truncated))
        })
        .collect::<Result<Vec<_>>>()?;
    let count = values.len() as f64;
    let mean = values.iter().map(|(v, _)| v).sum::<f64>() / count;
    let var = if values.len() > 1 {
        values.iter().map(|(v, _)| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: mean,
        stderr: (var / count).sqrt(),
        samples,
        capped: values.iter().filter(|(_, c)| *c).count(),
        seed,
        p,
        n,
    })
}

/// Estimates `P[root open and its cluster stays strictly inside the ball]`,
/// a proxy for `P[root open, cluster finite]` on a large ball. Returns
/// `(estimate, standard error)`.
pub fn estimate_finite_mass(g: &Graph, root: usize, p: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let radius = g.radius().unwrap_or(usize::MAX);
    let dist: Vec<usize> = {
        let mut d = vec![usize::MAX; g.len()];
        for (v, k) in g.bfs_distances(root) {
            d[v] = k;
        }
        d
    };
    let hits: Vec<bool> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let s = sample_cluster(g, root, p, radius, DEFAULT_CLUSTER_CAP, &mut rng);
            s.root_open && !s.truncated && s.cluster.iter().all(|&v| dist[v] < radius)
        })
        .collect();
    let k = hits.iter().filter(|&&h| h).count() as f64;
    let q = k / samples as f64;
    Ok((q, (q * (1.0 - q) / samples as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{kernel, GraphSpec};

    fn whole(text: &str) -> Graph {
        let spec = GraphSpec::parse(text).unwrap();
        spec.materialize(&spec.default_root(), None).unwrap()
    }

    #[test]
    fn extreme_probabilities() {
        let g = whole("grid:3x3");
        let mut rng = sample_rng(1, 0);
        let s = sample_cluster(&g, 0, 1.0, 10, DEFAULT_CLUSTER_CAP, &mut rng);
        assert!(s.root_open);
        assert_eq!(s.cluster.len(), 9);
        let s = sample_cluster(&g, 0, 0.0, 10, DEFAULT_CLUSTER_CAP, &mut rng);
        assert!(!s.root_open);
        assert!(s.cluster.is_empty());
    }

    #[test]
    fn cluster_stays_in_ball_and_is_connected() {
        let spec = GraphSpec::parse("z2").unwrap();
        let g = spec.materialize(&spec.default_root(), Some(6)).unwrap();
        for i in 0..200 {
            let mut rng = sample_rng(9, i);
            let s = sample_cluster(&g, 0, 0.55, 3, DEFAULT_CLUSTER_CAP, &mut rng);
            let ball = g.ball(0, 3);
            assert!(s.cluster.iter().all(|v| ball.contains(v)));
            // every vertex after the first has an earlier neighbour
            for (k, &v) in s.cluster.iter().enumerate().skip(1) {
                assert!(s.cluster[..k].iter().any(|&u| g.is_adjacent(u, v)));
            }
        }
    }

    #[test]
    fn cap_truncates_and_flags() {
        let g = whole("grid:3x3");
        let mut rng = sample_rng(1, 0);
        let s = sample_cluster(&g, 0, 1.0, 10, 4, &mut rng);
        assert!(s.truncated);
        assert_eq!(s.cluster.len(), 4);
        let k = kernel(&g).unwrap();
        let est = mc_expected_return_capped(&k, 0, 1.0, 4, 10, 3, 4).unwrap();
        assert_eq!(est.capped, 10);
    }

    #[test]
    fn k2_full_cluster_frequency() {
        let g = whole("grid:2x1");
        let samples = 100_000u64;
        let both = (0..samples)
            .into_par_iter()
            .filter(|&i| {
                let mut rng = sample_rng(2024, i);
                sample_cluster(&g, 0, 0.5, 1, DEFAULT_CLUSTER_CAP, &mut rng)
                    .cluster
                    .len()
                    == 2
            })
            .count();
        let freq = both as f64 / samples as f64;
        assert!((freq - 0.25).abs() <= 3.0 * (0.25f64 * 0.75 / samples as f64).sqrt());
    }

    #[test]
    fn trivial_step_counts() {
        let g = whole("grid:3x3");
        let k = kernel(&g).unwrap();
        let one = mc_expected_return(&k, 0, 0.5, 1, 500, 5).unwrap();
        assert_eq!((one.estimate, one.stderr), (0.0, 0.0));
        let zero = mc_expected_return(&k, 0, 0.5, 0, 500, 5).unwrap();
        assert_eq!((zero.estimate, zero.stderr), (1.0, 0.0));
    }

    #[test]
    fn reproducible_per_seed() {
        let g = whole("grid:3x1");
        let k = kernel(&g).unwrap();
        let a = mc_expected_return(&k, 1, 0.5, 4, 5000, 11).unwrap();
        let b = mc_expected_return(&k, 1, 0.5, 4, 5000, 11).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let c = mc_expected_return(&k, 1, 0.5, 4, 5000, 12).unwrap();
        assert_ne!(a.estimate.to_bits(), c.estimate.to_bits());
    }

    #[test]
    fn region_must_cover_half_path_length() {
        let spec = GraphSpec::parse("z2").unwrap();
        let g = spec.materialize(&spec.default_root(), Some(1)).unwrap();
        let k = kernel(&g).unwrap();
        assert!(mc_expected_return(&k, 0, 0.5, 2, 10, 0).is_ok());
        assert!(mc_expected_return(&k, 0, 0.5, 4, 10, 0).is_err());
    }
}
