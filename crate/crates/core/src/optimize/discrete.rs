//! Group connected surfaces with scalar or vector reactance codebooks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::block::BlockState;
use super::{check_grouping, improves, AoOptions, Configuration, OptimizeResult};
use crate::codebook::{ScalarCodebook, VectorCodebook};
use crate::grouping::GroupingStrategy;
use crate::netmodel::{block_scattering, upper_pairs, upper_to_matrix, ChannelRealization, ReactanceAssignment};
use crate::{Error, Result};

fn total(blocks: &[BlockState]) -> Complex64 {
    blocks.iter().map(BlockState::contribution).sum()
}

fn to_assignment(grouping: &GroupingStrategy, blocks: &[Vec<f64>]) -> Result<ReactanceAssignment> {
    ReactanceAssignment::from_upper(grouping.clone(), blocks.to_vec())
}

/// Entry-wise coordinate ascent over every block's upper triangle.
///
/// Entries start uniformly at random from the codebook; each is then set to
/// its best codebook value, groups and entries in ascending order. A sweep
/// that changes nothing ends the search.
pub fn optimize_group_scalar_discrete<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    grouping: &GroupingStrategy,
    codebook: &ScalarCodebook,
    opts: &AoOptions,
    rng: &mut R,
) -> Result<OptimizeResult> {
    opts.validate()?;
    check_grouping(ch, grouping)?;
    let values = codebook.values();
    let uvals: Vec<f64> = values.iter().map(|v| v / opts.z0).collect();
    let n = grouping.n_g();
    let pairs: Vec<(usize, usize)> = upper_pairs(n).collect();
    // Codebook indices of the current entries.
    let mut idx: Vec<Vec<usize>> = (0..grouping.group_count())
        .map(|_| pairs.iter().map(|_| rng.random_range(0..values.len())).collect())
        .collect();
    let mut blocks: Vec<BlockState> = idx
        .iter()
        .enumerate()
        .map(|(g, ix)| {
            let (a, b) = ch.group_links(grouping, g);
            BlockState::new(a, b, ix.iter().map(|&k| uvals[k]).collect())
        })
        .collect();
    let mut h = total(&blocks);
    let mut trace = vec![h.norm_sqr()];
    let mut evaluations = 0u64;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for (g, block) in blocks.iter_mut().enumerate() {
            for (e, &(i, j)) in pairs.iter().enumerate() {
                let cur = h.norm_sqr();
                let mut best = (idx[g][e], cur, Complex64::new(0.0, 0.0));
                for (k, &u) in uvals.iter().enumerate() {
                    evaluations += 1;
                    if k == idx[g][e] {
                        continue;
                    }
                    let d = block.delta(i, j, u);
                    let p = (h + d).norm_sqr();
                    if improves(p, best.1) {
                        best = (k, p, d);
                    }
                }
                if best.0 != idx[g][e] {
                    idx[g][e] = best.0;
                    let old = block.contribution();
                    block.apply(i, j, uvals[best.0]);
                    h += block.contribution() - old;
                    changed = true;
                }
            }
        }
        for b in &mut blocks {
            b.refresh();
        }
        h = total(&blocks);
        trace.push(h.norm_sqr());
        if !changed {
            break;
        }
    }
    let upper: Vec<Vec<f64>> = idx.iter().map(|ix| ix.iter().map(|&k| values[k]).collect()).collect();
    let x = to_assignment(grouping, &upper)?;
    OptimizeResult::finish(ch, Configuration::Reactance(x), opts.z0, sweeps, trace, evaluations)
}

/// Vector codebook with the scattering block of every codeword precomputed.
#[derive(Debug, Clone)]
pub struct PreparedVectorCodebook {
    codebook: VectorCodebook,
    z0: f64,
    theta: Vec<DMatrix<Complex64>>,
}

impl PreparedVectorCodebook {
    pub fn new(codebook: &VectorCodebook, z0: f64) -> Result<Self> {
        if !(z0 > 0.0 && z0.is_finite()) {
            return Err(Error::invalid(format!("characteristic impedance must be positive, got {z0}")));
        }
        let n = codebook.n_g();
        let theta = codebook
            .codewords()
            .iter()
            .map(|w| block_scattering(&upper_to_matrix(n, w), z0))
            .collect();
        Ok(Self {
            codebook: codebook.clone(),
            z0,
            theta,
        })
    }

    pub fn codebook(&self) -> &VectorCodebook {
        &self.codebook
    }
}

fn bilinear(a: &[Complex64], theta: &DMatrix<Complex64>, b: &[Complex64]) -> Complex64 {
    let n = a.len();
    let mut s = Complex64::new(0.0, 0.0);
    for r in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for c in 0..n {
            row += theta[(r, c)] * b[c];
        }
        s += a[r] * row;
    }
    s
}

pub fn optimize_group_vector_discrete<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    grouping: &GroupingStrategy,
    codebook: &VectorCodebook,
    opts: &AoOptions,
    rng: &mut R,
) -> Result<OptimizeResult> {
    let prepared = PreparedVectorCodebook::new(codebook, opts.z0)?;
    optimize_group_vector_prepared(ch, grouping, &prepared, opts, rng)
}

/// Block-wise coordinate ascent over whole codewords from a random start.
///
/// With a single group one sweep is an exhaustive codebook search.
pub fn optimize_group_vector_prepared<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    grouping: &GroupingStrategy,
    prepared: &PreparedVectorCodebook,
    opts: &AoOptions,
    rng: &mut R,
) -> Result<OptimizeResult> {
    opts.validate()?;
    check_grouping(ch, grouping)?;
    if prepared.codebook.n_g() != grouping.n_g() {
        return Err(Error::DimensionMismatch {
            expected: grouping.n_g(),
            found: prepared.codebook.n_g(),
        });
    }
    if prepared.z0 != opts.z0 {
        return Err(Error::invalid("vector codebook was prepared for a different impedance"));
    }
    let n_words = prepared.theta.len();
    let links: Vec<_> = (0..grouping.group_count()).map(|g| ch.group_links(grouping, g)).collect();
    // contrib[g][k]: block g's contribution with codeword k.
    let contrib: Vec<Vec<Complex64>> = links
        .iter()
        .map(|(a, b)| prepared.theta.iter().map(|t| bilinear(a, t, b)).collect())
        .collect();
    let mut idx: Vec<usize> = (0..links.len()).map(|_| rng.random_range(0..n_words)).collect();
    let sum = |idx: &[usize]| -> Complex64 { idx.iter().enumerate().map(|(g, &k)| contrib[g][k]).sum() };
    let mut h = sum(&idx);
    let mut trace = vec![h.norm_sqr()];
    let mut evaluations = 0u64;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for g in 0..links.len() {
            let rest = h - contrib[g][idx[g]];
            let mut best = (idx[g], h.norm_sqr());
            for (k, c) in contrib[g].iter().enumerate() {
                evaluations += 1;
                let p = (rest + c).norm_sqr();
                if improves(p, best.1) {
                    best = (k, p);
                }
            }
            if best.0 != idx[g] {
                idx[g] = best.0;
                h = rest + contrib[g][best.0];
                changed = true;
            }
        }
        h = sum(&idx);
        trace.push(h.norm_sqr());
        if !changed || links.len() == 1 {
            break;
        }
    }
    let words = prepared.codebook.codewords();
    let upper: Vec<Vec<f64>> = idx.iter().map(|&k| words[k].clone()).collect();
    let x = to_assignment(grouping, &upper)?;
    OptimizeResult::finish(ch, Configuration::Reactance(x), opts.z0, sweeps, trace, evaluations)
}
