//! Shared fixtures for the optimizer benchmarks.

use bdris_core::channels::{ChannelGenerator, ChannelModel, ChannelModelConfig, Polarization};
use bdris_core::rng::{stream, Purpose};
use bdris_core::ChannelRealization;

/// Deterministic i.i.d. Rayleigh realization.
pub fn rayleigh_channel(n_i: usize, seed: u64) -> ChannelRealization {
    let config = ChannelModelConfig::new(n_i, ChannelModel::IidRayleigh, Polarization::Uni);
    ChannelGenerator::new(config)
        .expect("valid benchmark configuration")
        .generate(&mut stream(seed, Purpose::Channel))
}
