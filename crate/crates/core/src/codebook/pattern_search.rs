//! Derivative-free maximization on `(0, ∞)` with a multiplicative mesh.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSearchOptions {
    /// Initial relative step; the first poll tries `x·(1 + mesh0)` and `x/(1 + mesh0)`.
    pub mesh0: f64,
    /// Stop once the relative step drops below this.
    pub tol: f64,
    pub max_evals: usize,
}

impl Default for PatternSearchOptions {
    fn default() -> Self {
        Self {
            mesh0: 1.0,
            tol: 1e-3,
            max_evals: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSearchResult {
    pub x: f64,
    pub value: f64,
    /// Step of the last failed poll; `x` beats both of its neighbours on this mesh.
    pub final_mesh: f64,
    pub evaluations: usize,
}

/// Maximizes `objective` from `x0`, expanding the step ×2 after an improving
/// poll and halving it after a failed one.
///
/// A candidate replaces the incumbent only on strict improvement.
pub fn pattern_search_1d<F>(mut objective: F, x0: f64, opts: &PatternSearchOptions) -> Result<PatternSearchResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::invalid(format!("pattern search needs a positive start, got {x0}")));
    }
    if !(opts.mesh0 > 0.0 && opts.tol > 0.0) {
        return Err(Error::invalid("pattern search mesh and tolerance must be positive"));
    }
    let mut evaluations = 0;
    let mut eval = |x: f64, evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        let v = objective(x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("pattern search objective at x = {x}")));
        }
        Ok(v)
    };
    let mut x = x0;
    let mut best = eval(x, &mut evaluations)?;
    let mut mesh = opts.mesh0;
    let mut final_mesh = mesh;
    while mesh >= opts.tol && evaluations < opts.max_evals {
        let mut moved = false;
        for cand in [x * (1.0 + mesh), x / (1.0 + mesh)] {
            if !(cand > 0.0 && cand.is_finite()) {
                continue;
            }
            let v = eval(cand, &mut evaluations)?;
            if v > best {
                best = v;
                x = cand;
                moved = true;
            }
        }
        if moved {
            mesh *= 2.0;
        } else {
            final_mesh = mesh;
            mesh *= 0.5;
        }
    }
    Ok(PatternSearchResult {
        x,
        value: best,
        final_mesh,
        evaluations,
    })
}
