//! Online optimizers for a known channel.
//!
//! Discrete surfaces use alternating optimization: one phase, reactance
//! entry or block codeword at a time, each set to its best codebook value
//! with the rest fixed. The continuous group connected surface uses a
//! quasi-Newton ascent over the free reactance entries.
//!
//! Every optimizer maximizes `|h_RI Θ h_IT|²`; the direct link can always be
//! co-phased afterwards.

mod block;
mod continuous;
mod discrete;
mod single;

use crate::grouping::GroupingStrategy;
use crate::netmodel::{
    received_power, scattering_from_reactance, ChannelRealization, ReactanceAssignment,
    ScatteringMatrix, DEFAULT_Z0,
};
use crate::{Error, Result};

pub use continuous::{optimize_group_continuous, optimize_group_continuous_from, ContinuousOptions};
pub use discrete::{
    optimize_group_scalar_discrete, optimize_group_vector_discrete, optimize_group_vector_prepared,
    PreparedVectorCodebook,
};
pub use single::optimize_single_discrete;

pub const DEFAULT_MAX_SWEEPS: usize = 20;

/// Relative gain a candidate must beat to replace the incumbent.
pub(crate) const ACCEPT_REL: f64 = 1e-10;

pub(crate) fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + ACCEPT_REL * incumbent.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoOptions {
    pub max_sweeps: usize,
    pub z0: f64,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            max_sweeps: DEFAULT_MAX_SWEEPS,
            z0: DEFAULT_Z0,
        }
    }
}

impl AoOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            return Err(Error::invalid(format!("characteristic impedance must be positive, got {}", self.z0)));
        }
        Ok(())
    }
}

/// Surface configuration found by an optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum Configuration {
    /// Single connected surface described by its reflection phases.
    Phases(Vec<f64>),
    Reactance(ReactanceAssignment),
}

impl Configuration {
    pub fn scattering(&self, z0: f64) -> Result<ScatteringMatrix> {
        match self {
            Configuration::Phases(p) => ScatteringMatrix::from_phases(p),
            Configuration::Reactance(x) => scattering_from_reactance(x, z0),
        }
    }

    pub fn as_reactance(&self) -> Option<&ReactanceAssignment> {
        match self {
            Configuration::Reactance(x) => Some(x),
            Configuration::Phases(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub configuration: Configuration,
    /// `|h_RI Θ h_IT|²` recomputed from `configuration`.
    pub power: f64,
    pub iterations: usize,
    /// Objective after initialization and after each sweep or iteration.
    pub objective_trace: Vec<f64>,
    pub search_evaluations: u64,
}

impl OptimizeResult {
    pub(crate) fn finish(
        ch: &ChannelRealization,
        configuration: Configuration,
        z0: f64,
        iterations: usize,
        objective_trace: Vec<f64>,
        search_evaluations: u64,
    ) -> Result<Self> {
        let theta = configuration.scattering(z0)?;
        let power = received_power(ch, &theta, false)?;
        Ok(Self {
            configuration,
            power,
            iterations,
            objective_trace,
            search_evaluations,
        })
    }
}

pub(crate) fn check_grouping(ch: &ChannelRealization, grouping: &GroupingStrategy) -> Result<()> {
    if grouping.n_i() != ch.n_i() {
        return Err(Error::DimensionMismatch {
            expected: ch.n_i(),
            found: grouping.n_i(),
        });
    }
    Ok(())
}

/// Cosine similarity `|h_RI Θ h_IT| / (‖h_RI‖‖h_IT‖)`; 1 means the bound of the
/// fully connected surface is met.
pub fn alignment_eta(ch: &ChannelRealization, theta: &ScatteringMatrix) -> Result<f64> {
    let h = crate::netmodel::cascaded_channel(ch, theta, false)?;
    let na: f64 = ch.h_ri().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = ch.h_it().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((h.norm() / (na * nb)).min(1.0))
}

/// Architecture whose per-iteration search cost is counted by [`search_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchSpace {
    /// `N_I·2^B`.
    Single { n_i: usize, bits: u32 },
    /// `G·N_G(N_G+1)/2·2^B`.
    ScalarGroup { n_i: usize, n_g: usize, bits: u32 },
    /// `(N_I/N_G)·2^{B_V}`.
    Vector { n_i: usize, n_g: usize, bits: u32 },
    /// Order of a quasi-Newton iteration: `(N_I(N_G+1)/2)²`.
    QuasiNewton { n_i: usize, n_g: usize },
}

/// Codebook evaluations per complete iteration.
pub fn search_count(space: SearchSpace) -> Result<u128> {
    let overflow = || Error::invalid("search count overflows");
    let pow2 = |b: u32| 1u128.checked_shl(b).filter(|_| b < 128).ok_or_else(overflow);
    let groups = |n_i: usize, n_g: usize| {
        if n_g == 0 || !n_i.is_multiple_of(n_g) {
            Err(Error::invalid(format!("group size {n_g} must divide {n_i}")))
        } else {
            Ok((n_i / n_g) as u128)
        }
    };
    let free = |n_g: usize| (n_g as u128) * (n_g as u128 + 1) / 2;
    match space {
        SearchSpace::Single { n_i, bits } => (n_i as u128).checked_mul(pow2(bits)?).ok_or_else(overflow),
        SearchSpace::ScalarGroup { n_i, n_g, bits } => groups(n_i, n_g)?
            .checked_mul(free(n_g))
            .and_then(|v| v.checked_mul(pow2(bits).ok()?))
            .ok_or_else(overflow),
        SearchSpace::Vector { n_i, n_g, bits } => groups(n_i, n_g)?.checked_mul(pow2(bits)?).ok_or_else(overflow),
        SearchSpace::QuasiNewton { n_i, n_g } => {
            let p = groups(n_i, n_g)? * free(n_g);
            p.checked_mul(p).ok_or_else(overflow)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn search_counts() {
        assert_eq!(search_count(SearchSpace::Single { n_i: 64, bits: 4 }).unwrap(), 1024);
        assert_eq!(search_count(SearchSpace::ScalarGroup { n_i: 64, n_g: 64, bits: 1 }).unwrap(), 4160);
        assert_eq!(search_count(SearchSpace::Vector { n_i: 64, n_g: 2, bits: 9 }).unwrap(), 16384);
        assert_eq!(search_count(SearchSpace::QuasiNewton { n_i: 64, n_g: 64 }).unwrap(), 2080 * 2080);
        assert!(search_count(SearchSpace::Vector { n_i: 64, n_g: 3, bits: 1 }).is_err());
        assert!(search_count(SearchSpace::Single { n_i: 2, bits: 200 }).is_err());
    }

    #[test]
    fn eta_orthogonal_is_zero() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let ch = ChannelRealization::new(c(0.0, 0.0), vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let g = GroupingStrategy::single_group(2).unwrap();
        let theta = scattering_from_reactance(&ReactanceAssignment::zeros(g), 50.0).unwrap();
        assert_eq!(alignment_eta(&ch, &theta).unwrap(), 0.0);
    }
}
