//! Quasi-Newton ascent over the free entries of a continuous group connected surface.
//!
//! Works in normalized units `u = X/Z0` on `|h_RI Θ h_IT|² / bound_group`.
//! Gradients are central differences evaluated through the low-rank block
//! updates, so a full gradient costs `O(P)` after one factorization per block.

use std::collections::VecDeque;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::block::BlockState;
use super::{check_grouping, Configuration, OptimizeResult};
use crate::bounds::bound_group;
use crate::grouping::GroupingStrategy;
use crate::netmodel::{upper_len, upper_pairs, ChannelRealization, ReactanceAssignment, DEFAULT_Z0};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousOptions {
    pub z0: f64,
    /// Stop after two consecutive iterations with relative gain below this.
    pub tol: f64,
    pub restarts: usize,
    pub max_iters: usize,
    /// Above this many free entries the inverse Hessian is kept in limited memory.
    pub dense_limit: usize,
    pub memory: usize,
}

impl Default for ContinuousOptions {
    fn default() -> Self {
        Self {
            z0: DEFAULT_Z0,
            tol: 1e-10,
            restarts: 3,
            max_iters: 5000,
            dense_limit: 300,
            memory: 20,
        }
    }
}

impl ContinuousOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            return Err(Error::invalid(format!("characteristic impedance must be positive, got {}", self.z0)));
        }
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::invalid("restarts and max_iters must be at least 1"));
        }
        Ok(())
    }
}

struct Problem {
    blocks: Vec<BlockState>,
    pairs: Vec<(usize, usize)>,
    scale: f64,
    fd_floor: f64,
}

impl Problem {
    fn value(&self) -> f64 {
        self.blocks.iter().map(BlockState::contribution).sum::<Complex64>().norm_sqr() / self.scale
    }

    fn set(&mut self, u: &[f64]) {
        let len = self.pairs.len();
        for (b, chunk) in self.blocks.iter_mut().zip(u.chunks(len)) {
            b.set_all(chunk);
        }
    }

    fn gradient(&self) -> Vec<f64> {
        let h: Complex64 = self.blocks.iter().map(BlockState::contribution).sum();
        let mut grad = Vec::with_capacity(self.blocks.len() * self.pairs.len());
        for b in &self.blocks {
            for &(i, j) in &self.pairs {
                let u = b.u_at(i, j);
                let step = (1e-4 * u.abs()).max(self.fd_floor);
                let fp = (h + b.delta(i, j, u + step)).norm_sqr();
                let fm = (h + b.delta(i, j, u - step)).norm_sqr();
                grad.push((fp - fm) / (2.0 * step * self.scale));
            }
        }
        grad
    }

    fn u(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.u().iter().copied()).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inverse-Hessian approximation of the minimized objective `−f`.
enum InverseHessian {
    Dense { h: Vec<f64>, n: usize, fresh: bool },
    Limited { pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>, memory: usize },
}

impl InverseHessian {
    fn new(n: usize, opts: &ContinuousOptions) -> Self {
        if n <= opts.dense_limit {
            let mut h = vec![0.0; n * n];
            for k in 0..n {
                h[k * n + k] = 1.0;
            }
            InverseHessian::Dense { h, n, fresh: true }
        } else {
            InverseHessian::Limited {
                pairs: VecDeque::new(),
                memory: opts.memory,
            }
        }
    }

    fn reset(&mut self) {
        match self {
            InverseHessian::Dense { h, n, fresh } => {
                h.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..*n {
                    h[k * *n + k] = 1.0;
                }
                *fresh = true;
            }
            InverseHessian::Limited { pairs, .. } => pairs.clear(),
        }
    }

    /// `H·g`.
    fn apply(&self, g: &[f64]) -> Vec<f64> {
        match self {
            InverseHessian::Dense { h, n, .. } => (0..*n).map(|r| dot(&h[r * n..(r + 1) * n], g)).collect(),
            InverseHessian::Limited { pairs, .. } => {
                let mut q = g.to_vec();
                let mut alpha = Vec::with_capacity(pairs.len());
                for (s, y, rho) in pairs.iter().rev() {
                    let a = rho * dot(s, &q);
                    q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
                    alpha.push(a);
                }
                let gamma = pairs.back().map_or(1.0, |(s, y, _)| dot(s, y) / dot(y, y));
                q.iter_mut().for_each(|v| *v *= gamma);
                for ((s, y, rho), a) in pairs.iter().zip(alpha.iter().rev()) {
                    let b = rho * dot(y, &q);
                    q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
                }
                q
            }
        }
    }

    fn update(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if !(sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt()) {
            return;
        }
        let rho = 1.0 / sy;
        match self {
            InverseHessian::Dense { h, n, fresh } => {
                let n = *n;
                if *fresh {
                    // Scale the identity start to the observed curvature.
                    let gamma = sy / dot(&y, &y);
                    h.iter_mut().for_each(|v| *v *= gamma);
                    *fresh = false;
                }
                // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ.
                let hy: Vec<f64> = (0..n).map(|r| dot(&h[r * n..(r + 1) * n], &y)).collect();
                let yhy = dot(&y, &hy);
                let c = (1.0 + rho * yhy) * rho;
                for r in 0..n {
                    for k in 0..n {
                        h[r * n + k] += c * s[r] * s[k] - rho * (hy[r] * s[k] + s[r] * hy[k]);
                    }
                }
            }
            InverseHessian::Limited { pairs, memory } => {
                if pairs.len() == *memory {
                    pairs.pop_front();
                }
                pairs.push_back((s, y, rho));
            }
        }
    }
}

fn build_problem(ch: &ChannelRealization, grouping: &GroupingStrategy, u0: &[Vec<f64>], z0: f64) -> Result<Problem> {
    let scale = bound_group(ch, grouping)?;
    let pairs: Vec<(usize, usize)> = upper_pairs(grouping.n_g()).collect();
    let blocks = u0
        .iter()
        .enumerate()
        .map(|(g, u)| {
            let (a, b) = ch.group_links(grouping, g);
            BlockState::new(a, b, u.clone())
        })
        .collect();
    Ok(Problem {
        blocks,
        pairs,
        scale: if scale > 0.0 { scale } else { 1.0 },
        fd_floor: 1e-2 / z0,
    })
}

struct RunOutcome {
    u: Vec<f64>,
    trace: Vec<f64>,
    iterations: usize,
    evaluations: u64,
}

fn run(mut prob: Problem, opts: &ContinuousOptions) -> RunOutcome {
    let mut u = prob.u();
    let n = u.len();
    let mut hess = InverseHessian::new(n, opts);
    let mut f = prob.value();
    let mut g: Vec<f64> = prob.gradient().iter().map(|v| -v).collect();
    let mut evaluations = 2 * n as u64 + 1;
    let mut trace = vec![f * prob.scale];
    let mut small = 0;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        if dot(&g, &g).sqrt() < opts.tol {
            break;
        }
        let mut d: Vec<f64> = hess.apply(&g).iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hess.reset();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        // Armijo backtracking on −f.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(x, di)| x + t * di).collect();
            if trial.iter().all(|x| x.is_finite()) {
                prob.set(&trial);
                evaluations += 1;
                let ft = prob.value();
                if ft.is_finite() && -ft <= -f + 1e-4 * t * slope {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((u_new, f_new)) = accepted else {
            prob.set(&u);
            break;
        };
        iterations += 1;
        let g_new: Vec<f64> = prob.gradient().iter().map(|v| -v).collect();
        evaluations += 2 * n as u64;
        let s: Vec<f64> = u_new.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        hess.update(s, y);
        let gain = (f_new - f) / f.abs().max(1e-300);
        u = u_new;
        g = g_new;
        f = f_new;
        trace.push(f * prob.scale);
        small = if gain < opts.tol { small + 1 } else { 0 };
        if small >= 2 {
            break;
        }
    }
    RunOutcome {
        u,
        trace,
        iterations,
        evaluations,
    }
}

fn assignment(grouping: &GroupingStrategy, u: &[f64], z0: f64) -> Result<ReactanceAssignment> {
    let len = upper_len(grouping.n_g());
    let blocks = u.chunks(len).map(|c| c.iter().map(|v| v * z0).collect()).collect();
    ReactanceAssignment::from_upper(grouping.clone(), blocks)
}

/// One quasi-Newton run from `init`.
pub fn optimize_group_continuous_from(
    ch: &ChannelRealization,
    init: &ReactanceAssignment,
    opts: &ContinuousOptions,
) -> Result<OptimizeResult> {
    opts.validate()?;
    let grouping = init.grouping();
    check_grouping(ch, grouping)?;
    let u0: Vec<Vec<f64>> = init.blocks().iter().map(|b| b.iter().map(|x| x / opts.z0).collect()).collect();
    let out = run(build_problem(ch, grouping, &u0, opts.z0)?, opts);
    let x = assignment(grouping, &out.u, opts.z0)?;
    OptimizeResult::finish(ch, Configuration::Reactance(x), opts.z0, out.iterations, out.trace, out.evaluations)
}

/// Best of `opts.restarts` quasi-Newton runs, each from entries drawn i.i.d. `N(0, Z0²)`.
pub fn optimize_group_continuous<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    grouping: &GroupingStrategy,
    opts: &ContinuousOptions,
    rng: &mut R,
) -> Result<OptimizeResult> {
    opts.validate()?;
    check_grouping(ch, grouping)?;
    let len = upper_len(grouping.n_g());
    let mut best: Option<OptimizeResult> = None;
    let mut evaluations = 0;
    for _ in 0..opts.restarts {
        let u0: Vec<Vec<f64>> = (0..grouping.group_count())
            .map(|_| (0..len).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let out = run(build_problem(ch, grouping, &u0, opts.z0)?, opts);
        evaluations += out.evaluations;
        let x = assignment(grouping, &out.u, opts.z0)?;
        let r = OptimizeResult::finish(ch, Configuration::Reactance(x), opts.z0, out.iterations, out.trace, out.evaluations)?;
        if best.as_ref().is_none_or(|b| r.power > b.power) {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one restart");
    best.search_evaluations = evaluations;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{bound_fully, bound_single};
    use crate::channels::{generate, ChannelModel, ChannelModelConfig, Polarization};
    use crate::rng::{stream, Purpose};

    #[test]
    fn reaches_bounds_on_small_instances() {
        let cfg = ChannelModelConfig::new(8, ChannelModel::IidRayleigh, Polarization::Uni);
        let opts = ContinuousOptions::default();
        for seed in 0..3 {
            let ch = generate(&cfg, &mut stream(seed, Purpose::Channel)).unwrap();
            let mut rng = stream(seed, Purpose::Optimizer);
            let single = optimize_group_continuous(&ch, &GroupingStrategy::singletons(8).unwrap(), &opts, &mut rng).unwrap();
            assert!((single.power / bound_single(&ch) - 1.0).abs() < 1e-3);
            let fully = optimize_group_continuous(&ch, &GroupingStrategy::single_group(8).unwrap(), &opts, &mut rng).unwrap();
            assert!((fully.power / bound_fully(&ch) - 1.0).abs() < 1e-3, "{} vs {}", fully.power, bound_fully(&ch));
            assert!(fully.objective_trace.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
