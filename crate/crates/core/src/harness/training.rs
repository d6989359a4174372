//! Offline codebook learning for an experiment configuration.
//!
//! Training channels come from their own stream and never overlap with the
//! evaluation draws, whatever seeds are used.

use rayon::prelude::*;

use super::{configure_threads, resolve_grouping, Discretization, SimConfig};
use crate::channels::{normalize, ChannelGenerator};
use crate::codebook::{learn_scalar, learn_scalar_b1, learn_vector, Codebook, PatternSearchOptions};
use crate::grouping::GroupingStrategy;
use crate::netmodel::{ChannelRealization, ReactanceAssignment};
use crate::optimize::{optimize_group_continuous, optimize_group_scalar_discrete, AoOptions, ContinuousOptions};
use crate::rng::{stream, trial_seed, Purpose};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOptions {
    pub seed: u64,
    /// Realizations for the one-bit pattern search.
    pub b1_realizations: usize,
    /// Realizations for multi-bit scalar codebooks.
    pub scalar_realizations: usize,
    pub vector_realizations: usize,
    pub pattern: PatternSearchOptions,
    /// Quasi-Newton settings for continuous training solutions; `z0` is taken from the experiment.
    pub continuous: ContinuousOptions,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            b1_realizations: 20,
            scalar_realizations: 100,
            vector_realizations: 300,
            pattern: PatternSearchOptions::default(),
            continuous: ContinuousOptions::default(),
        }
    }
}

fn training_set(config: &SimConfig, seed: u64, size: usize) -> Result<Vec<(ChannelRealization, GroupingStrategy, u64)>> {
    let generator = ChannelGenerator::new(config.channel.clone())?;
    (0..size)
        .into_par_iter()
        .map(|k| {
            let s = trial_seed(seed, k as u64);
            let raw = generator.generate(&mut stream(s, Purpose::TrainingChannel));
            let ch = if config.normalizes() { normalize(&raw)?.0 } else { raw };
            let g = resolve_grouping(config, &ch)?;
            Ok((ch, g, s))
        })
        .collect()
}

fn continuous_solutions(config: &SimConfig, opts: &TrainingOptions, size: usize) -> Result<Vec<ReactanceAssignment>> {
    let qn = ContinuousOptions {
        z0: config.z0,
        ..opts.continuous
    };
    training_set(config, opts.seed, size)?
        .par_iter()
        .map(|(ch, g, s)| {
            let r = optimize_group_continuous(ch, g, &qn, &mut stream(*s, Purpose::TrainingInit))?;
            r.configuration
                .as_reactance()
                .cloned()
                .ok_or_else(|| Error::InvariantViolation("continuous optimizer returned phases".into()))
        })
        .collect()
}

/// Learns the codebook an experiment configuration needs.
///
/// One-bit scalar codebooks come from pattern search over the discrete
/// optimizer's power; larger scalar and all vector codebooks cluster
/// continuous training solutions.
pub fn train_codebook(config: &SimConfig, opts: &TrainingOptions) -> Result<Codebook> {
    config.validate()?;
    configure_threads();
    match config.discretization {
        Discretization::Scalar(1) => {
            let set: Vec<_> = training_set(config, opts.seed, opts.b1_realizations)?
                .into_iter()
                .map(|(ch, g, _)| (ch, g))
                .collect();
            let ao = AoOptions {
                max_sweeps: config.max_sweeps,
                z0: config.z0,
            };
            let cb = learn_scalar_b1(&set, config.z0, opts.seed, &opts.pattern, |ch, g, cb, init| {
                optimize_group_scalar_discrete(ch, g, cb, &ao, &mut stream(init, Purpose::TrainingInit)).map(|r| r.power)
            })?;
            Ok(Codebook::Scalar(cb))
        }
        Discretization::Scalar(bits) => {
            let sols = continuous_solutions(config, opts, opts.scalar_realizations)?;
            Ok(Codebook::Scalar(learn_scalar(&sols, bits, config.z0, opts.seed)?))
        }
        Discretization::Vector(bits) => {
            let sols = continuous_solutions(config, opts, opts.vector_realizations)?;
            Ok(Codebook::Vector(learn_vector(&sols, config.n_g, bits, config.z0, opts.seed)?))
        }
        Discretization::Continuous | Discretization::Phase(_) => {
            Err(Error::invalid(format!("{} needs no learned codebook", config.discretization)))
        }
    }
}
