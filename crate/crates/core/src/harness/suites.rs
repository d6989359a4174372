//! Named batches of configurations, one per figure-level comparison.
//!
//! Every configuration of a suite shares the master seed, so the compared
//! designs see identical channel draws trial by trial.

use super::{Architecture, Discretization, GroupingChoice, SimConfig};
use crate::channels::{ChannelModel, ChannelModelConfig, Polarization};
use crate::{Error, Result};

pub const SUITES: [&str; 9] = ["fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12"];

const SIZES: [usize; 5] = [4, 8, 16, 32, 64];
const SCALAR_BITS: [u32; 4] = [1, 2, 3, 4];
const SUITE_TRIALS: usize = 200;

fn architecture(n_i: usize, n_g: usize) -> Architecture {
    if n_g == 1 {
        Architecture::Single
    } else if n_g == n_i {
        Architecture::Fully
    } else {
        Architecture::Group
    }
}

struct Builder {
    suite: &'static str,
    configs: Vec<SimConfig>,
}

impl Builder {
    fn add(&mut self, model: ChannelModel, pol: Polarization, n_i: usize, n_g: usize, grouping: GroupingChoice, disc: Discretization) {
        let mut c = SimConfig::new(ChannelModelConfig::new(n_i, model, pol), architecture(n_i, n_g), n_g, disc);
        c.suite = self.suite.into();
        c.grouping = grouping;
        c.trials = SUITE_TRIALS;
        self.configs.push(c);
    }

    /// Scalar codebooks of every resolution plus the continuous reference.
    fn scalar_sweep(&mut self, model: ChannelModel, pol: Polarization, n_i: usize, n_g: usize, grouping: GroupingChoice) {
        for b in SCALAR_BITS {
            self.add(model, pol, n_i, n_g, grouping.clone(), Discretization::Scalar(b));
        }
        self.add(model, pol, n_i, n_g, grouping, Discretization::Continuous);
    }
}

/// Rayleigh uses one grouping (all are equivalent in distribution); the
/// correlated model compares all three strategies.
fn groupings(model: ChannelModel) -> Vec<GroupingChoice> {
    match model {
        ChannelModel::IidRayleigh => vec![GroupingChoice::Uncorrelated],
        ChannelModel::Correlated => vec![GroupingChoice::Correlated, GroupingChoice::Uncorrelated, GroupingChoice::Optimal],
    }
}

const MODELS: [ChannelModel; 2] = [ChannelModel::IidRayleigh, ChannelModel::Correlated];

/// Configurations of a named suite, with 200 trials and master seed 0.
pub fn experiment_suite(name: &str) -> Result<Vec<SimConfig>> {
    let suite = SUITES.iter().copied().find(|s| *s == name).ok_or_else(|| Error::UnknownSuite {
        name: name.into(),
        valid: SUITES.iter().map(|s| s.to_string()).collect(),
    })?;
    let mut b = Builder { suite, configs: Vec::new() };
    let uni = Polarization::Uni;
    let ug = GroupingChoice::Uncorrelated;
    match suite {
        "fig4" => {
            for model in MODELS {
                for n_i in SIZES {
                    b.scalar_sweep(model, uni, n_i, 1, ug.clone());
                }
            }
        }
        "fig5" => {
            for model in MODELS {
                for n_i in SIZES {
                    for n_g in [2, 4, 8].into_iter().filter(|g| *g < n_i) {
                        for g in groupings(model) {
                            b.scalar_sweep(model, uni, n_i, n_g, g);
                        }
                    }
                }
            }
        }
        "fig6" => {
            for model in MODELS {
                for n_i in SIZES {
                    b.scalar_sweep(model, uni, n_i, n_i, ug.clone());
                }
            }
        }
        "fig7" => {
            for model in MODELS {
                for n_g in [1, 2, 4, 8, 16, 32, 64] {
                    b.scalar_sweep(model, uni, 64, n_g, ug.clone());
                }
            }
        }
        "fig8" => {
            for pol in [Polarization::Uni, Polarization::Dual] {
                for n_g in [1, 2, 4, 8, 16, 32, 64] {
                    b.scalar_sweep(ChannelModel::Correlated, pol, 64, n_g, ug.clone());
                }
            }
            for c in &mut b.configs {
                c.include_pathloss = true;
            }
        }
        "fig9" => {
            for model in MODELS {
                for n_g in [1, 2, 4, 8] {
                    for bits in SCALAR_BITS {
                        b.add(model, uni, 64, n_g, ug.clone(), Discretization::Scalar(bits));
                    }
                }
            }
        }
        "fig10" => {
            // Equal total bits: B_V = B·N_G(N_G+1)/2 with N_G = 2.
            for model in MODELS {
                for n_i in SIZES {
                    for bits in [1, 2, 3] {
                        b.add(model, uni, n_i, 2, ug.clone(), Discretization::Scalar(bits));
                        b.add(model, uni, n_i, 2, ug.clone(), Discretization::Vector(3 * bits));
                    }
                    b.add(model, uni, n_i, 2, ug.clone(), Discretization::Continuous);
                }
            }
        }
        "fig11" => {
            // One bit per element: B_V = N_G.
            for model in MODELS {
                for n_i in SIZES {
                    for n_g in [2, 4, 8].into_iter().filter(|g| *g < n_i) {
                        b.add(model, uni, n_i, n_g, ug.clone(), Discretization::Vector(n_g as u32));
                        b.add(model, uni, n_i, n_g, ug.clone(), Discretization::Scalar(1));
                        b.add(model, uni, n_i, n_g, ug.clone(), Discretization::Continuous);
                    }
                }
            }
        }
        "fig12" => {
            for n_g in [1, 2, 4, 8, 16, 32, 64] {
                b.scalar_sweep(ChannelModel::IidRayleigh, uni, 64, n_g, ug.clone());
                if (2..=8).contains(&n_g) {
                    b.add(ChannelModel::IidRayleigh, uni, 64, n_g, ug.clone(), Discretization::Vector(n_g as u32));
                }
            }
        }
        _ => unreachable!("suite names are checked above"),
    }
    Ok(b.configs)
}
