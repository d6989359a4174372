//! Lloyd's k-means with distance-weighted seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centers: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub inertia: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = dist2(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<(usize, f64)> {
    if points.len() * centers.len() > 50_000 {
        points.par_iter().map(|p| nearest(p, centers)).collect()
    } else {
        points.iter().map(|p| nearest(p, centers)).collect()
    }
}

/// Picks `k` initial centers, each drawn with probability proportional to the
/// squared distance to the nearest center chosen so far.
fn seed_centers(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d.iter().sum();
        let idx = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d.iter().enumerate() {
                if w > 0.0 && t < w {
                    pick = i;
                    break;
                }
                t -= w;
            }
            // Rounding can leave `t` just past the end; fall back to the last positive weight.
            if d[pick] == 0.0 {
                pick = d.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // Fewer distinct points than clusters: duplicate a point.
            rng.random_range(0..n)
        };
        let c = points[idx].clone();
        for (di, p) in d.iter_mut().zip(points) {
            *di = di.min(dist2(p, &c));
        }
        centers.push(c);
    }
    centers
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::invalid("k-means needs k ≥ 1"));
    }
    if points.len() < k {
        return Err(Error::invalid(format!("k-means with k = {k} needs at least {k} points, got {}", points.len())));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("k-means points differ in dimension"));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("k-means point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(points, k, &mut rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut inertia = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        let assigned = assign(points, &centers);
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        inertia.push(assigned.iter().map(|a| a.1).sum());
        if new_labels == labels {
            converged = true;
            break;
        }
        labels = new_labels;
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // Empty clusters take the point farthest from its current center.
        for c in 0..k {
            if counts[c] == 0 {
                let (far, _) = points
                    .iter()
                    .zip(&labels)
                    .enumerate()
                    .map(|(i, (p, &l))| (i, dist2(p, &centers[l])))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                centers[c] = points[far].clone();
                let old = labels[far];
                counts[old] -= 1;
                counts[c] = 1;
                labels[far] = c;
            }
        }
    }
    if labels.is_empty() {
        labels = assign(points, &centers).into_iter().map(|a| a.0).collect();
    }
    Ok(KMeansFit {
        centers,
        assignment: labels,
        inertia,
        iterations,
        converged,
    })
}
