//! Empirical basin statistics of an acquisition snapshot.
//!
//! Independent single-start ascents are clustered by single linkage; the
//! cluster count estimates the number of distinct local maxima and the
//! cluster frequencies estimate the per-basin reach probabilities. The
//! probability mass of the cluster that lands on the global maximizer is
//! the quantity whose complement decays as `(1 - beta_g)^N` under
//! multi-start.

use crate::domain::{l2_distance, Domain};
use crate::error::Result;
use crate::opt::local::multi_start_results;
use crate::opt::{Differentiable, LocalSearchConfig};

/// Basin estimates for one round's snapshot.
#[derive(Debug, Clone)]
pub struct BasinStats {
    pub round: usize,
    pub n_probes: usize,
    /// Estimated number of distinct local maxima (cluster count).
    pub rho_hat: usize,
    /// Per-cluster reach frequencies; positive, summing to one.
    pub beta_hat: Vec<f64>,
    /// Frequency of the cluster containing the global maximizer (0 when no
    /// cluster coincides with it).
    pub beta_g_hat: f64,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root index wins, keeping cluster order deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Probe the surface with `n_probes` seeded single-start ascents and cluster
/// the converged points with single linkage at radius
/// `cluster_tol * diam(domain)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_basins(
    obj: &dyn Differentiable,
    domain: &Domain,
    global_x: &[f64],
    n_probes: usize,
    cluster_tol: f64,
    coincidence_tol: f64,
    cfg: &LocalSearchConfig,
    seed: u64,
    round: usize,
) -> Result<BasinStats> {
    let probes = multi_start_results(obj, domain, n_probes, cfg, seed)?;
    let diam = domain.diameter();
    let radius = cluster_tol * diam;
    let mut uf = UnionFind::new(n_probes);
    for i in 0..n_probes {
        for j in (i + 1)..n_probes {
            if l2_distance(&probes[i].x_star, &probes[j].x_star) <= radius {
                uf.union(i, j);
            }
        }
    }
    // Clusters keyed by root, ordered by first-member index.
    let mut roots: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..n_probes {
        let root = uf.find(i);
        match roots.iter().position(|&r| r == root) {
            Some(c) => members[c].push(i),
            None => {
                roots.push(root);
                members.push(vec![i]);
            }
        }
    }
    let beta_hat: Vec<f64> = members
        .iter()
        .map(|m| m.len() as f64 / n_probes as f64)
        .collect();
    // A cluster "is" the global basin when its best member coincides with
    // the global maximizer.
    let mut beta_g_hat = 0.0;
    for (c, m) in members.iter().enumerate() {
        let best = m
            .iter()
            .copied()
            .max_by(|&a, &b| {
                probes[a]
                    .value
                    .partial_cmp(&probes[b].value)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if l2_distance(&probes[best].x_star, global_x) <= coincidence_tol * diam {
            beta_g_hat = beta_hat[c];
            break;
        }
    }
    Ok(BasinStats {
        round,
        n_probes,
        rho_hat: members.len(),
        beta_hat,
        beta_g_hat,
    })
}
