//! Design and evaluation of reconfigurable intelligent surfaces built from
//! single, group, and fully connected discrete-value reactance networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`netmodel`]: reactance → scattering conversion and the cascaded channel.
//! - [`channels`]: i.i.d. Rayleigh and correlated Rician channel generators.
//! - [`bounds`]: closed-form received-power upper bounds and Rayleigh scaling laws.
//! - [`grouping`]: grouping strategies and the per-realization swap search.
//! - [`codebook`]: offline codebook learning (pattern search, MAD cleaning, k-means).
//! - [`optimize`]: online alternating optimization and the quasi-Newton baseline.
//! - [`harness`]: seeded Monte Carlo experiments, figure suites, and CSV output.

pub mod bounds;
pub mod channels;
pub mod codebook;
mod error;
pub mod grouping;
pub mod harness;
pub mod netmodel;
pub mod optimize;
pub mod rng;

pub use error::{Error, Result};

pub use bounds::{
    bound_fully, bound_group, bound_single, expected_bound_rayleigh, power_gains, BoundReport,
};
pub use channels::{
    generate, normalize, ChannelGenerator, ChannelModel, ChannelModelConfig, NormalizationFactors,
    Polarization,
};
pub use codebook::{
    phase_codebook, Codebook, PhaseCodebook, Provenance, ScalarCodebook, VectorCodebook,
};
pub use grouping::{
    correlated_grouping, count_groupings, optimal_grouping, rho, swap_neighborhood,
    uncorrelated_grouping, GroupingStrategy,
};
pub use harness::{
    experiment_suite, run_experiment, Architecture, Discretization, ExperimentOutput,
    GroupingChoice, ResultRow, SimConfig,
};
pub use netmodel::{
    cascaded_channel, phase_to_reactance, reactance_to_phase, received_power,
    scattering_from_reactance, ChannelRealization, ReactanceAssignment, ScatteringMatrix,
    DEFAULT_Z0,
};
pub use optimize::{
    alignment_eta, optimize_group_continuous, optimize_group_scalar_discrete,
    optimize_group_vector_discrete, optimize_single_discrete, search_count, Configuration,
    OptimizeResult,
};
