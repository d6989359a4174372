//! Single connected surface with a uniform phase codebook.

use num_complex::Complex64;

use super::{improves, Configuration, OptimizeResult};
use crate::codebook::PhaseCodebook;
use crate::netmodel::ChannelRealization;
use crate::{Error, Result};

/// Element-wise coordinate ascent on the phases, starting from the
/// quantized co-phasing solution `θ_n = −arg(h_RI,n h_IT,n)`.
pub fn optimize_single_discrete(ch: &ChannelRealization, codebook: &PhaseCodebook, max_sweeps: usize) -> Result<OptimizeResult> {
    if max_sweeps == 0 {
        return Err(Error::invalid("max_sweeps must be at least 1"));
    }
    let w: Vec<Complex64> = ch.h_ri().iter().zip(ch.h_it()).map(|(a, b)| a * b).collect();
    let values = codebook.values();
    let rot: Vec<Complex64> = values.iter().map(|&v| Complex64::from_polar(1.0, v)).collect();
    let mut idx: Vec<usize> = w.iter().map(|z| codebook.nearest(-z.arg())).collect();
    let total = |idx: &[usize]| -> Complex64 { w.iter().zip(idx).map(|(z, &k)| z * rot[k]).sum() };
    let mut h = total(&idx);
    let mut trace = vec![h.norm_sqr()];
    let mut evaluations = 0u64;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for n in 0..w.len() {
            let rest = h - w[n] * rot[idx[n]];
            let mut best = (idx[n], h.norm_sqr());
            for (k, r) in rot.iter().enumerate() {
                evaluations += 1;
                let p = (rest + w[n] * r).norm_sqr();
                if improves(p, best.1) {
                    best = (k, p);
                }
            }
            if best.0 != idx[n] {
                idx[n] = best.0;
                h = rest + w[n] * rot[best.0];
                changed = true;
            }
        }
        // Drop accumulated rounding from the running sum.
        h = total(&idx);
        trace.push(h.norm_sqr());
        if !changed {
            break;
        }
    }
    let phases = idx.iter().map(|&k| values[k]).collect();
    OptimizeResult::finish(ch, Configuration::Phases(phases), 1.0, sweeps, trace, evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::phase_codebook;

    #[test]
    fn coherent_all_ones() {
        let one = Complex64::new(1.0, 0.0);
        let ch = ChannelRealization::new(Complex64::new(0.0, 0.0), vec![one; 2], vec![one; 2]).unwrap();
        let r = optimize_single_discrete(&ch, &phase_codebook(1).unwrap(), 20).unwrap();
        assert!((r.power - 4.0).abs() < 1e-12);
        assert_eq!(r.search_evaluations % (2 * 2), 0);
    }
}
