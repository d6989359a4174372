//! Codebooks for discrete-value surfaces and their offline learning.
//!
//! Phase codebooks are uniform. Scalar reactance codebooks are symmetric
//! (`±ψ_i`): one bit comes from a pattern search on the optimized power,
//! more bits from k-means on the moduli of continuous solutions. Vector
//! codebooks quantize whole upper-triangular blocks.

pub mod kmeans;
pub mod pattern_search;

use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::grouping::GroupingStrategy;
use crate::netmodel::{upper_len, ChannelRealization, ReactanceAssignment};
use crate::rng::splitmix64;
use crate::{Error, Result};

pub use kmeans::{kmeans, KMeansFit, DEFAULT_MAX_ITERS};
pub use pattern_search::{pattern_search_1d, PatternSearchOptions, PatternSearchResult};

/// Uniform phases `{0, δ, …, (2^B − 1)δ}` with `δ = 2π/2^B`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCodebook {
    bits: u32,
    values: Vec<f64>,
}

impl PhaseCodebook {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn step(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the codeword nearest to `theta` on the circle.
    pub fn nearest(&self, theta: f64) -> usize {
        let n = self.values.len();
        ((theta.rem_euclid(TAU) / self.step()).round() as usize) % n
    }
}

pub fn phase_codebook(bits: u32) -> Result<PhaseCodebook> {
    if bits == 0 || bits > 16 {
        return Err(Error::invalid(format!("phase resolution must be 1..=16 bits, got {bits}")));
    }
    let n = 1usize << bits;
    let delta = TAU / n as f64;
    Ok(PhaseCodebook {
        bits,
        values: (0..n).map(|k| k as f64 * delta).collect(),
    })
}

/// How a learned codebook was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    pub training_size: usize,
    pub seed: u64,
    pub z0: f64,
}

/// Symmetric reactance codebook `{±ψ_1, …, ±ψ_{2^{B−1}}}` in ohms.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCodebook {
    bits: u32,
    n_g: usize,
    positive_half: Vec<f64>,
    provenance: Provenance,
}

impl ScalarCodebook {
    pub fn new(bits: u32, n_g: usize, mut positive_half: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if bits == 0 {
            return Err(Error::invalid("scalar codebook needs at least one bit"));
        }
        if positive_half.len() != 1usize << (bits - 1) {
            return Err(Error::DimensionMismatch {
                expected: 1usize << (bits - 1),
                found: positive_half.len(),
            });
        }
        if !positive_half.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("scalar codebook values must be positive and finite"));
        }
        positive_half.sort_by(f64::total_cmp);
        Ok(Self {
            bits,
            n_g,
            positive_half,
            provenance,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    pub fn positive_half(&self) -> &[f64] {
        &self.positive_half
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Full codebook in ascending order: `−ψ_max, …, −ψ_1, ψ_1, …, ψ_max`.
    pub fn values(&self) -> Vec<f64> {
        self.positive_half
            .iter()
            .rev()
            .map(|v| -v)
            .chain(self.positive_half.iter().copied())
            .collect()
    }
}

/// `2^{B_V}` codewords, each an upper-triangular `N_G × N_G` block in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorCodebook {
    bits: u32,
    n_g: usize,
    codewords: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl VectorCodebook {
    pub fn new(bits: u32, n_g: usize, codewords: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        if bits == 0 || bits > 24 {
            return Err(Error::invalid(format!("vector codebook needs 1..=24 bits, got {bits}")));
        }
        if codewords.len() != 1usize << bits {
            return Err(Error::DimensionMismatch {
                expected: 1usize << bits,
                found: codewords.len(),
            });
        }
        let dim = upper_len(n_g);
        if let Some(c) = codewords.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.len(),
            });
        }
        if codewords.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("vector codeword".into()));
        }
        Ok(Self {
            bits,
            n_g,
            codewords,
            provenance,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    pub fn dim(&self) -> usize {
        upper_len(self.n_g)
    }

    pub fn codewords(&self) -> &[Vec<f64>] {
        &self.codewords
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Codebook {
    Scalar(ScalarCodebook),
    Vector(VectorCodebook),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookFile {
    kind: String,
    method: String,
    bits: u32,
    n_g: usize,
    z0: f64,
    seed: u64,
    training_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    values: Vec<f64>,
}

impl Codebook {
    pub fn to_json(&self) -> Result<String> {
        let (kind, p, bits, n_g, dim, values) = match self {
            Codebook::Scalar(c) => ("scalar", &c.provenance, c.bits, c.n_g, None, c.positive_half.clone()),
            Codebook::Vector(c) => ("vector", &c.provenance, c.bits, c.n_g, Some(c.dim()), c.codewords.concat()),
        };
        let file = CodebookFile {
            kind: kind.into(),
            method: p.method.clone(),
            bits,
            n_g,
            z0: p.z0,
            seed: p.seed,
            training_size: p.training_size,
            dim,
            values,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CodebookFile = serde_json::from_str(text)?;
        let provenance = Provenance {
            method: f.method,
            training_size: f.training_size,
            seed: f.seed,
            z0: f.z0,
        };
        match f.kind.as_str() {
            "scalar" => Ok(Codebook::Scalar(ScalarCodebook::new(f.bits, f.n_g, f.values, provenance)?)),
            "vector" => {
                let dim = upper_len(f.n_g);
                if f.dim.is_some_and(|d| d != dim) || !f.values.len().is_multiple_of(dim.max(1)) {
                    return Err(Error::Parse("vector codebook values do not match its dimension".into()));
                }
                let codewords = f.values.chunks(dim).map(<[f64]>::to_vec).collect();
                Ok(Codebook::Vector(VectorCodebook::new(f.bits, f.n_g, codewords, provenance)?))
            }
            other => Err(Error::Parse(format!("unknown codebook kind {other:?}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingCodebook(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_json(&text)
    }

    pub fn provenance(&self) -> &Provenance {
        match self {
            Codebook::Scalar(c) => &c.provenance,
            Codebook::Vector(c) => &c.provenance,
        }
    }
}

/// `c = 1/(√2·erfc⁻¹(½))`: scales the MAD to a Gaussian standard deviation.
pub fn mad_scale() -> f64 {
    1.0 / (std::f64::consts::SQRT_2 * erfc_inv(0.5))
}

/// Outlier threshold in scaled MADs.
pub const OUTLIER_MADS: f64 = 4.0;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median and (unscaled) median absolute deviation.
pub fn median_mad(samples: &[f64]) -> Option<(f64, f64)> {
    if samples.is_empty() {
        return None;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let med = median(&s);
    let mut dev: Vec<f64> = s.iter().map(|x| (x - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    Some((med, median(&dev)))
}

/// Keep-mask for [`clean_outliers`]: `|x − median| ≤ 4·c·MAD`, or everything when MAD = 0.
pub fn inlier_mask(samples: &[f64]) -> Vec<bool> {
    match median_mad(samples) {
        None => Vec::new(),
        Some((_, mad)) if mad == 0.0 => vec![true; samples.len()],
        Some((med, mad)) => {
            let limit = OUTLIER_MADS * mad_scale() * mad;
            samples.iter().map(|x| (x - med).abs() <= limit).collect()
        }
    }
}

/// Drops samples more than four scaled MADs from the median, preserving order.
pub fn clean_outliers(samples: &[f64]) -> Vec<f64> {
    samples
        .iter()
        .zip(inlier_mask(samples))
        .filter_map(|(x, keep)| keep.then_some(*x))
        .collect()
}

/// Order-independent seed for one training realization.
fn content_seed(seed: u64, ch: &ChannelRealization) -> u64 {
    let mut h = splitmix64(seed);
    for z in ch.h_ri().iter().chain(ch.h_it()) {
        h = splitmix64(h ^ z.re.to_bits());
        h = splitmix64(h ^ z.im.to_bits());
    }
    h
}

/// One-bit scalar codebook: pattern search on `ψ` per training realization,
/// then the average of the outlier-cleaned per-realization maximizers.
///
/// `lower(ch, grouping, codebook, init_seed)` returns the power reached by
/// the discrete optimizer with codebook `{−ψ, +ψ}`.
#[allow(clippy::too_many_arguments)]
pub fn learn_scalar_b1<F>(
    training: &[(ChannelRealization, GroupingStrategy)],
    z0: f64,
    seed: u64,
    opts: &PatternSearchOptions,
    lower: F,
) -> Result<ScalarCodebook>
where
    F: Fn(&ChannelRealization, &GroupingStrategy, &ScalarCodebook, u64) -> Result<f64> + Sync,
{
    if training.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let n_g = training[0].1.n_g();
    if training.iter().any(|(_, g)| g.n_g() != n_g) {
        return Err(Error::invalid("training groupings differ in group size"));
    }
    let provenance = Provenance {
        method: "pattern_search".into(),
        training_size: training.len(),
        seed,
        z0,
    };
    let mut psi: Vec<f64> = training
        .par_iter()
        .map(|(ch, grouping)| {
            let init = content_seed(seed, ch);
            let objective = |x: f64| {
                let cb = ScalarCodebook::new(1, n_g, vec![x], provenance.clone())?;
                lower(ch, grouping, &cb, init)
            };
            pattern_search_1d(objective, z0, opts).map(|r| r.x)
        })
        .collect::<Result<_>>()?;
    // A realization whose power keeps creeping up toward the open circuit
    // drives its maximizer off to huge values; those are cleaned like any
    // other outlier. Summing in sorted order keeps the average independent
    // of training order.
    psi.sort_by(f64::total_cmp);
    let psi = clean_outliers(&psi);
    let mean = psi.iter().sum::<f64>() / psi.len() as f64;
    ScalarCodebook::new(1, n_g, vec![mean], provenance)
}

/// Multi-bit scalar codebook from continuous training solutions:
/// pooled moduli → outlier cleaning → k-means with `2^{B−1}` centers → `±`.
pub fn learn_scalar(training: &[ReactanceAssignment], bits: u32, z0: f64, seed: u64) -> Result<ScalarCodebook> {
    if training.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if bits == 0 || bits > 16 {
        return Err(Error::invalid(format!("scalar codebook needs 1..=16 bits, got {bits}")));
    }
    let n_g = training[0].grouping().n_g();
    let moduli: Vec<f64> = training
        .iter()
        .flat_map(|x| x.blocks().iter().flatten().map(|v| v.abs()))
        .collect();
    let points: Vec<Vec<f64>> = clean_outliers(&moduli).into_iter().map(|v| vec![v]).collect();
    let fit = kmeans(&points, 1 << (bits - 1), seed, DEFAULT_MAX_ITERS)?;
    let half: Vec<f64> = fit.centers.into_iter().map(|c| c[0]).collect();
    if half.iter().any(|v| *v <= 0.0) {
        return Err(Error::InvariantViolation("learned a non-positive reactance codeword".into()));
    }
    ScalarCodebook::new(
        bits,
        n_g,
        half,
        Provenance {
            method: "kmeans".into(),
            training_size: training.len(),
            seed,
            z0,
        },
    )
}

/// Vector codebook: every block is one training vector; a vector is dropped
/// when any coordinate is an outlier among that coordinate's pooled values.
pub fn learn_vector(training: &[ReactanceAssignment], n_g: usize, bits: u32, z0: f64, seed: u64) -> Result<VectorCodebook> {
    if training.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let dim = upper_len(n_g);
    let vectors: Vec<Vec<f64>> = training
        .iter()
        .map(|x| {
            if x.grouping().n_g() != n_g {
                return Err(Error::DimensionMismatch {
                    expected: n_g,
                    found: x.grouping().n_g(),
                });
            }
            Ok(x.blocks().to_vec())
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let mut keep = vec![true; vectors.len()];
    for d in 0..dim {
        let coord: Vec<f64> = vectors.iter().map(|v| v[d]).collect();
        for (k, ok) in keep.iter_mut().zip(inlier_mask(&coord)) {
            *k &= ok;
        }
    }
    let points: Vec<Vec<f64>> = vectors
        .into_iter()
        .zip(keep)
        .filter_map(|(v, k)| k.then_some(v))
        .collect();
    if bits == 0 || bits > 24 {
        return Err(Error::invalid(format!("vector codebook needs 1..=24 bits, got {bits}")));
    }
    let fit = kmeans(&points, 1 << bits, seed, DEFAULT_MAX_ITERS)?;
    VectorCodebook::new(
        bits,
        n_g,
        fit.centers,
        Provenance {
            method: "kmeans".into(),
            training_size: training.len(),
            seed,
            z0,
        },
    )
}
