//! Channel generators: i.i.d. Rayleigh and a correlated Rician stand-in for
//! an urban macrocell, plus a simple dual-polarized surface model.
//!
//! The correlated model uses an exponential correlation `r^{|p_i − p_k|}` at
//! the surface and a half-wavelength ULA line-of-sight term on the
//! transmitter link. Dual polarization applies a `1/√2` projection to every
//! element and decorrelates elements of opposite parity.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::netmodel::ChannelRealization;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    #[default]
    IidRayleigh,
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    #[default]
    Uni,
    Dual,
}

impl Polarization {
    /// Polarization index of element `i`; elements of different index fade independently.
    pub fn index(self, i: usize) -> usize {
        match self {
            Polarization::Uni => 0,
            Polarization::Dual => i % 2,
        }
    }

    /// Position of element `i` along the array in half-wavelength units.
    pub fn position(self, i: usize) -> f64 {
        match self {
            Polarization::Uni => i as f64,
            Polarization::Dual => (i / 2) as f64,
        }
    }

    fn amplitude(self) -> f64 {
        match self {
            Polarization::Uni => 1.0,
            Polarization::Dual => FRAC_1_SQRT_2,
        }
    }
}

fn default_r() -> f64 {
    0.7
}
fn default_k_db() -> f64 {
    10.0
}
fn default_shadowing_db() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModelConfig {
    pub n_i: usize,
    #[serde(default)]
    pub model: ChannelModel,
    /// Adjacent-element correlation at the surface (correlated model only).
    #[serde(default = "default_r")]
    pub correlation_coefficient: f64,
    /// Rician factor of the transmitter → surface link (correlated model only).
    #[serde(default = "default_k_db")]
    pub rician_k_db: f64,
    #[serde(default)]
    pub polarization: Polarization,
    #[serde(default)]
    pub seed: u64,
    /// Fixed line-of-sight angle in radians; drawn uniformly per realization when absent.
    #[serde(default)]
    pub los_angle: Option<f64>,
    /// Log-normal shadowing spread in dB per link (correlated model only).
    #[serde(default = "default_shadowing_db")]
    pub shadowing_db: f64,
}

impl ChannelModelConfig {
    pub fn new(n_i: usize, model: ChannelModel, polarization: Polarization) -> Self {
        Self {
            n_i,
            model,
            correlation_coefficient: default_r(),
            rician_k_db: default_k_db(),
            polarization,
            seed: 0,
            los_angle: None,
            shadowing_db: default_shadowing_db(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_i == 0 {
            return Err(Error::invalid("n_i must be positive"));
        }
        let r = self.correlation_coefficient;
        if !(0.0..1.0).contains(&r) {
            return Err(Error::invalid(format!("correlation_coefficient must lie in [0, 1), got {r}")));
        }
        if !self.rician_k_db.is_finite() {
            return Err(Error::NonFinite("rician_k_db".into()));
        }
        if !(self.shadowing_db.is_finite() && self.shadowing_db >= 0.0) {
            return Err(Error::invalid("shadowing_db must be a nonnegative finite value"));
        }
        if let Some(a) = self.los_angle {
            if !a.is_finite() {
                return Err(Error::NonFinite("los_angle".into()));
            }
        }
        if self.polarization == Polarization::Dual && !self.n_i.is_multiple_of(2) {
            return Err(Error::invalid("dual polarization needs an even n_i"));
        }
        Ok(())
    }
}

/// Draws realizations for one configuration; caches the correlation factor.
#[derive(Debug, Clone)]
pub struct ChannelGenerator {
    config: ChannelModelConfig,
    cholesky: Option<DMatrix<f64>>,
}

impl ChannelGenerator {
    pub fn new(config: ChannelModelConfig) -> Result<Self> {
        config.validate()?;
        let cholesky = match config.model {
            ChannelModel::IidRayleigh => None,
            ChannelModel::Correlated => Some(correlation_factor(&config)?),
        };
        Ok(Self { config, cholesky })
    }

    pub fn config(&self) -> &ChannelModelConfig {
        &self.config
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let n = self.config.n_i;
        let amp = self.config.polarization.amplitude();
        let (h_ri, h_it) = match &self.cholesky {
            None => (cn_vector(rng, n), cn_vector(rng, n)),
            Some(l) => {
                let h_ri = mul_real(l, &cn_vector(rng, n));
                let scatter = mul_real(l, &cn_vector(rng, n));
                let phi = match self.config.los_angle {
                    Some(a) => a,
                    None => rng.random_range(-PI / 2.0..PI / 2.0),
                };
                let k = 10f64.powf(self.config.rician_k_db / 10.0);
                let (w_los, w_nlos) = ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt());
                let pol = self.config.polarization;
                let h_it: Vec<Complex64> = scatter
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let steer = Complex64::from_polar(1.0, PI * pol.position(i) * phi.sin());
                        steer * w_los + s * w_nlos
                    })
                    .collect();
                let sigma = self.config.shadowing_db * std::f64::consts::LN_10 / 10.0;
                let s_ri = shadowing(rng, sigma);
                let s_it = shadowing(rng, sigma);
                (scale(h_ri, s_ri), scale(h_it, s_it))
            }
        };
        ChannelRealization::new(Complex64::new(0.0, 0.0), scale(h_ri, amp), scale(h_it, amp))
            .expect("generated channel is finite and consistent")
    }
}

/// One realization from a fresh generator.
pub fn generate<R: Rng + ?Sized>(config: &ChannelModelConfig, rng: &mut R) -> Result<ChannelRealization> {
    Ok(ChannelGenerator::new(config.clone())?.generate(rng))
}

fn correlation_factor(config: &ChannelModelConfig) -> Result<DMatrix<f64>> {
    let n = config.n_i;
    let pol = config.polarization;
    let r = config.correlation_coefficient;
    let corr = DMatrix::from_fn(n, n, |i, k| {
        if pol.index(i) != pol.index(k) {
            0.0
        } else {
            r.powf((pol.position(i) - pol.position(k)).abs())
        }
    });
    corr.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::InvariantViolation("correlation matrix is not positive definite".into()))
}

/// Unit-mean power log-normal amplitude `√L`, `L = exp(σZ − σ²/2)`.
fn shadowing<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (sigma * z - sigma * sigma / 2.0).exp().sqrt()
}

/// Circularly-symmetric complex Gaussian entries with unit variance.
fn cn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) * FRAC_1_SQRT_2
        })
        .collect()
}

fn mul_real(l: &DMatrix<f64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..l.nrows())
        .map(|i| (0..=i).map(|k| v[k] * l[(i, k)]).sum())
        .collect()
}

fn scale(v: Vec<Complex64>, s: f64) -> Vec<Complex64> {
    v.into_iter().map(|z| z * s).collect()
}

/// Scale factors removed by [`normalize`]: the original norms over `√N_I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationFactors {
    pub ri: f64,
    pub it: f64,
}

impl NormalizationFactors {
    /// Multiplier that maps normalized received power back to the raw channel.
    pub fn power_scale(&self) -> f64 {
        (self.ri * self.it).powi(2)
    }
}

/// Rescales both surface links to `‖h‖² = N_I`, leaving phases and `h_rt` alone.
pub fn normalize(ch: &ChannelRealization) -> Result<(ChannelRealization, NormalizationFactors)> {
    let n = ch.n_i() as f64;
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (a, b) = (norm(ch.h_ri()), norm(ch.h_it()));
    if a == 0.0 || b == 0.0 {
        return Err(Error::invalid("cannot normalize a zero channel vector"));
    }
    let factors = NormalizationFactors {
        ri: a / n.sqrt(),
        it: b / n.sqrt(),
    };
    let h_ri = ch.h_ri().iter().map(|z| z / factors.ri).collect();
    let h_it = ch.h_it().iter().map(|z| z / factors.it).collect();
    Ok((ChannelRealization::new(ch.h_rt(), h_ri, h_it)?, factors))
}

const DUMP_MAGIC: &[u8; 8] = b"BDRISCH1";

/// Writes the dump header. Each following record is
/// `u64 seed, u32 n_i, u8 model, u8 polarization, u16 reserved,
/// f64 r, f64 k_db, f64 shadowing_db, f64×2 h_rt, f64×2N h_RI, f64×2N h_IT`,
/// all little-endian, complex values as interleaved real/imaginary pairs.
pub fn write_dump_header<W: Write>(w: &mut W) -> Result<()> {
    w.write_all(DUMP_MAGIC)?;
    Ok(())
}

pub fn write_dump_record<W: Write>(w: &mut W, config: &ChannelModelConfig, seed: u64, ch: &ChannelRealization) -> Result<()> {
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&(ch.n_i() as u32).to_le_bytes())?;
    w.write_all(&[config.model as u8, config.polarization as u8])?;
    w.write_all(&0u16.to_le_bytes())?;
    for v in [config.correlation_coefficient, config.rician_k_db, config.shadowing_db] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut put = |z: Complex64| -> std::io::Result<()> {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())
    };
    put(ch.h_rt())?;
    for &z in ch.h_ri().iter().chain(ch.h_it()) {
        put(z)?;
    }
    Ok(())
}

/// One decoded dump record.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpRecord {
    pub seed: u64,
    pub model: ChannelModel,
    pub polarization: Polarization,
    pub correlation_coefficient: f64,
    pub rician_k_db: f64,
    pub shadowing_db: f64,
    pub channel: ChannelRealization,
}

pub fn read_dump<R: Read>(mut r: R) -> Result<Vec<DumpRecord>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 8 || &bytes[..8] != DUMP_MAGIC {
        return Err(Error::Parse("channel dump has no valid header".into()));
    }
    let mut pos = 8;
    let mut out = Vec::new();
    while pos < bytes.len() {
        if bytes.len() - pos < 16 {
            return Err(Error::Parse("truncated channel dump record".into()));
        }
        let header = &bytes[pos..pos + 16];
        let seed = u64::from_le_bytes(header[0..8].try_into().unwrap());
        let n_i = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let model = match header[12] {
            0 => ChannelModel::IidRayleigh,
            1 => ChannelModel::Correlated,
            m => return Err(Error::Parse(format!("unknown channel model tag {m}"))),
        };
        let polarization = match header[13] {
            0 => Polarization::Uni,
            1 => Polarization::Dual,
            p => return Err(Error::Parse(format!("unknown polarization tag {p}"))),
        };
        pos += 16;
        let len = 40 + 32 * n_i;
        if bytes.len() - pos < len {
            return Err(Error::Parse("truncated channel dump record".into()));
        }
        let body = &bytes[pos..pos + len];
        pos += len;
        let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().unwrap());
        let z = |k: usize| Complex64::new(f(k), f(k + 1));
        let h_ri = (0..n_i).map(|i| z(5 + 2 * i)).collect();
        let h_it = (0..n_i).map(|i| z(5 + 2 * n_i + 2 * i)).collect();
        out.push(DumpRecord {
            seed,
            model,
            polarization,
            correlation_coefficient: f(0),
            rician_k_db: f(1),
            shadowing_db: f(2),
            channel: ChannelRealization::new(z(3), h_ri, h_it)?,
        });
    }
    Ok(out)
}
