//! Received-power upper bounds and their Rayleigh-fading expectations.

use statrs::function::gamma::ln_gamma;

use crate::grouping::GroupingStrategy;
use crate::netmodel::ChannelRealization;
use crate::{Error, Result};

fn norm_sqr(v: &[num_complex::Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `(Σ|h_RI,n h_IT,n|)²`: reached by the single connected surface with continuous phases.
pub fn bound_single(ch: &ChannelRealization) -> f64 {
    let s: f64 = ch.h_ri().iter().zip(ch.h_it()).map(|(a, b)| (a * b).norm()).sum();
    s * s
}

/// `(Σ_g ‖h_RI,g‖‖h_IT,g‖)²`.
pub fn bound_group(ch: &ChannelRealization, grouping: &GroupingStrategy) -> Result<f64> {
    if grouping.n_i() != ch.n_i() {
        return Err(Error::DimensionMismatch {
            expected: ch.n_i(),
            found: grouping.n_i(),
        });
    }
    let (h_ri, h_it) = (ch.h_ri(), ch.h_it());
    let s: f64 = grouping
        .groups()
        .iter()
        .map(|m| {
            let a: f64 = m.iter().map(|&e| h_ri[e].norm_sqr()).sum();
            let b: f64 = m.iter().map(|&e| h_it[e].norm_sqr()).sum();
            (a * b).sqrt()
        })
        .sum();
    Ok(s * s)
}

/// `‖h_RI‖²‖h_IT‖²`.
pub fn bound_fully(ch: &ChannelRealization) -> f64 {
    norm_sqr(ch.h_ri()) * norm_sqr(ch.h_it())
}

/// `Γ(n + ½) / Γ(n)` via log-gamma.
pub fn gamma_half_ratio(n: f64) -> f64 {
    (ln_gamma(n + 0.5) - ln_gamma(n)).exp()
}

/// Mean of [`bound_group`] under i.i.d. unit-variance Rayleigh fading:
/// `N_I·N_G + (N_I/N_G)(N_I/N_G − 1)(Γ(N_G + ½)/Γ(N_G))⁴`.
pub fn expected_bound_rayleigh(n_i: usize, n_g: usize) -> Result<f64> {
    if n_i == 0 || n_g == 0 || !n_i.is_multiple_of(n_g) {
        return Err(Error::invalid(format!("group size {n_g} must divide {n_i}")));
    }
    let g = (n_i / n_g) as f64;
    Ok((n_i * n_g) as f64 + g * (g - 1.0) * gamma_half_ratio(n_g as f64).powi(4))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub p_single: f64,
    pub p_group: f64,
    pub p_fully: f64,
    /// `p_group / p_single`.
    pub gain_group: f64,
    /// `p_fully / p_single`.
    pub gain_fully: f64,
}

pub fn power_gains(ch: &ChannelRealization, grouping: &GroupingStrategy) -> Result<BoundReport> {
    let p_single = bound_single(ch);
    let p_group = bound_group(ch, grouping)?;
    let p_fully = bound_fully(ch);
    Ok(BoundReport {
        p_single,
        p_group,
        p_fully,
        gain_group: p_group / p_single,
        gain_fully: p_fully / p_single,
    })
}
