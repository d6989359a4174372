//! Network math for lossless reciprocal reactance networks.
//!
//! A group connected network with reactance blocks `X_g` scatters with
//! `Θ_g = (jX_g + Z0·I)⁻¹ (jX_g − Z0·I)`. Blocks are kept per group; the
//! grouping maps block ports back to element indices at the channel boundary.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::grouping::GroupingStrategy;
use crate::{Error, Result};

/// Characteristic impedance in ohms.
pub const DEFAULT_Z0: f64 = 50.0;

const SYMMETRY_TOL: f64 = 1e-12;
const UNITARITY_TOL: f64 = 1e-10;

/// SISO channel around the surface: direct link plus the two surface links.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h_rt: Complex64,
    h_ri: Vec<Complex64>,
    h_it: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn new(h_rt: Complex64, h_ri: Vec<Complex64>, h_it: Vec<Complex64>) -> Result<Self> {
        if h_ri.is_empty() {
            return Err(Error::invalid("channel needs at least one surface element"));
        }
        if h_ri.len() != h_it.len() {
            return Err(Error::DimensionMismatch {
                expected: h_ri.len(),
                found: h_it.len(),
            });
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(&h_rt) || !h_ri.iter().all(finite) || !h_it.iter().all(finite) {
            return Err(Error::NonFinite("channel entry".into()));
        }
        Ok(Self { h_rt, h_ri, h_it })
    }

    pub fn n_i(&self) -> usize {
        self.h_ri.len()
    }

    pub fn h_rt(&self) -> Complex64 {
        self.h_rt
    }

    /// Surface → receiver link.
    pub fn h_ri(&self) -> &[Complex64] {
        &self.h_ri
    }

    /// Transmitter → surface link.
    pub fn h_it(&self) -> &[Complex64] {
        &self.h_it
    }

    /// Entries of both links that belong to group `g`, in block port order.
    pub fn group_links(&self, grouping: &GroupingStrategy, g: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let m = grouping.members(g);
        (
            m.iter().map(|&e| self.h_ri[e]).collect(),
            m.iter().map(|&e| self.h_it[e]).collect(),
        )
    }
}

/// Number of free entries of a symmetric `n × n` block.
pub fn upper_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Row-major position of `(i, j)`, `i ≤ j`, in the upper-triangle layout.
pub fn upper_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    // Rows 0..i hold n, n−1, …, n−i+1 entries.
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// `(i, j)` pairs of the upper-triangle layout, in storage order.
pub fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

/// Block-diagonal real symmetric reactance matrix, one upper triangle per group.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactanceAssignment {
    grouping: GroupingStrategy,
    blocks: Vec<Vec<f64>>,
}

impl ReactanceAssignment {
    /// All-zero reactance (every port shorted, `Θ = −I`).
    pub fn zeros(grouping: GroupingStrategy) -> Self {
        let len = upper_len(grouping.n_g());
        let blocks = vec![vec![0.0; len]; grouping.group_count()];
        Self { grouping, blocks }
    }

    /// From per-group upper triangles in row-major order.
    pub fn from_upper(grouping: GroupingStrategy, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() != grouping.group_count() {
            return Err(Error::DimensionMismatch {
                expected: grouping.group_count(),
                found: blocks.len(),
            });
        }
        let len = upper_len(grouping.n_g());
        for b in &blocks {
            if b.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    found: b.len(),
                });
            }
            if !b.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("reactance entry".into()));
            }
        }
        Ok(Self { grouping, blocks })
    }

    /// From full square blocks; each must equal its transpose exactly.
    pub fn from_blocks(grouping: GroupingStrategy, blocks: &[DMatrix<f64>]) -> Result<Self> {
        let n = grouping.n_g();
        let mut upper = Vec::with_capacity(blocks.len());
        for (g, b) in blocks.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: b.nrows().max(b.ncols()),
                });
            }
            if b != &b.transpose() {
                return Err(Error::NonSymmetric { block: g });
            }
            upper.push(upper_pairs(n).map(|(i, j)| b[(i, j)]).collect());
        }
        Self::from_upper(grouping, upper)
    }

    pub fn grouping(&self) -> &GroupingStrategy {
        &self.grouping
    }

    pub fn upper(&self, g: usize) -> &[f64] {
        &self.blocks[g]
    }

    pub fn upper_mut(&mut self, g: usize) -> &mut [f64] {
        &mut self.blocks[g]
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn get(&self, g: usize, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.blocks[g][upper_index(self.grouping.n_g(), i, j)]
    }

    pub fn set(&mut self, g: usize, i: usize, j: usize, value: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let n = self.grouping.n_g();
        self.blocks[g][upper_index(n, i, j)] = value;
    }

    /// Full symmetric block `g`.
    pub fn block(&self, g: usize) -> DMatrix<f64> {
        upper_to_matrix(self.grouping.n_g(), &self.blocks[g])
    }

    /// Dense `N_I × N_I` matrix in element order.
    pub fn dense(&self) -> DMatrix<f64> {
        let n_i = self.grouping.n_i();
        let mut out = DMatrix::zeros(n_i, n_i);
        for g in 0..self.grouping.group_count() {
            let m = self.grouping.members(g);
            let b = self.block(g);
            for (a, &ea) in m.iter().enumerate() {
                for (c, &ec) in m.iter().enumerate() {
                    out[(ea, ec)] = b[(a, c)];
                }
            }
        }
        out
    }
}

pub(crate) fn upper_to_matrix(n: usize, upper: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for ((i, j), &v) in upper_pairs(n).zip(upper) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

/// Block-diagonal scattering matrix, stored per group.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    grouping: GroupingStrategy,
    blocks: Vec<DMatrix<Complex64>>,
}

impl ScatteringMatrix {
    /// Wraps per-group blocks after checking shape, symmetry and unitarity.
    pub fn new(grouping: GroupingStrategy, blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if blocks.len() != grouping.group_count() {
            return Err(Error::DimensionMismatch {
                expected: grouping.group_count(),
                found: blocks.len(),
            });
        }
        let n = grouping.n_g();
        if let Some(b) = blocks.iter().find(|b| b.nrows() != n || b.ncols() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.nrows().max(b.ncols()),
            });
        }
        let theta = Self { grouping, blocks };
        let sym = theta.symmetry_error();
        let uni = theta.unitarity_error();
        if !(sym <= SYMMETRY_TOL && uni <= UNITARITY_TOL) {
            return Err(Error::InvariantViolation(format!(
                "scattering blocks violate symmetry ({sym:e}) or unitarity ({uni:e})"
            )));
        }
        Ok(theta)
    }

    /// Diagonal scattering matrix `diag(e^{jθ_1}, …)` of a single connected surface.
    ///
    /// `θ = 0` is the open-circuit reflection `+1`, which no finite reactance reaches.
    pub fn from_phases(phases: &[f64]) -> Result<Self> {
        let grouping = GroupingStrategy::singletons(phases.len())?;
        if !phases.iter().all(|p| p.is_finite()) {
            return Err(Error::NonFinite("phase".into()));
        }
        let blocks = phases
            .iter()
            .map(|&p| DMatrix::from_element(1, 1, Complex64::from_polar(1.0, p)))
            .collect();
        Ok(Self { grouping, blocks })
    }

    pub fn grouping(&self) -> &GroupingStrategy {
        &self.grouping
    }

    pub fn blocks(&self) -> &[DMatrix<Complex64>] {
        &self.blocks
    }

    /// `max_g max |Θ_g − Θ_gᵀ|`.
    pub fn symmetry_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// `max_g max |Θ_gᴴ Θ_g − I|`.
    pub fn unitarity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.nrows();
                let gram = b.adjoint() * b - DMatrix::<Complex64>::identity(n, n);
                gram.iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Dense `N_I × N_I` matrix in element order.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let n_i = self.grouping.n_i();
        let mut out = DMatrix::zeros(n_i, n_i);
        for (g, b) in self.blocks.iter().enumerate() {
            let m = self.grouping.members(g);
            for (a, &ea) in m.iter().enumerate() {
                for (c, &ec) in m.iter().enumerate() {
                    out[(ea, ec)] = b[(a, c)];
                }
            }
        }
        out
    }
}

fn check_z0(z0: f64) -> Result<()> {
    if !(z0 > 0.0 && z0.is_finite()) {
        return Err(Error::invalid(format!("characteristic impedance must be positive, got {z0}")));
    }
    Ok(())
}

/// `(jU + I)⁻¹` for a real symmetric normalized reactance `U = X / Z0`.
///
/// `jU + I` has eigenvalues `1 + jλ`, so it is always invertible.
pub(crate) fn normalized_inverse(u: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = u.nrows();
    let a = DMatrix::from_fn(n, n, |i, k| {
        Complex64::new(if i == k { 1.0 } else { 0.0 }, u[(i, k)])
    });
    let inv = a.lu().try_inverse().expect("jU + I is nonsingular");
    // The inverse of a complex symmetric matrix is symmetric.
    (&inv + inv.transpose()).scale(0.5)
}

/// `Θ = I − 2(jU + I)⁻¹`, which equals `(jX + Z0 I)⁻¹ (jX − Z0 I)`.
pub(crate) fn block_scattering(x: &DMatrix<f64>, z0: f64) -> DMatrix<Complex64> {
    let u = x / z0;
    let n = u.nrows();
    let m = normalized_inverse(&u);
    DMatrix::<Complex64>::identity(n, n) - m.scale(2.0)
}

/// Scattering matrix of a block-diagonal reactance network.
pub fn scattering_from_reactance(x: &ReactanceAssignment, z0: f64) -> Result<ScatteringMatrix> {
    check_z0(z0)?;
    let blocks = (0..x.grouping.group_count())
        .map(|g| block_scattering(&x.block(g), z0))
        .collect();
    Ok(ScatteringMatrix {
        grouping: x.grouping.clone(),
        blocks,
    })
}

/// Reactance `Z0·cot(θ/2)` whose reflection coefficient is `e^{jθ}`.
pub fn phase_to_reactance(theta: f64, z0: f64) -> Result<f64> {
    check_z0(z0)?;
    if !theta.is_finite() {
        return Err(Error::NonFinite("phase".into()));
    }
    let t = theta.rem_euclid(TAU);
    if t == 0.0 {
        return Err(Error::UnreachableReflection(theta));
    }
    Ok(z0 / (t / 2.0).tan())
}

/// Phase in `(0, 2π)` of the reflection coefficient `(jX − Z0)/(jX + Z0)`.
pub fn reactance_to_phase(x: f64, z0: f64) -> f64 {
    2.0 * z0.atan2(x)
}

/// `h_RT·[include_direct] + h_RI Θ h_IT`.
pub fn cascaded_channel(ch: &ChannelRealization, theta: &ScatteringMatrix, include_direct: bool) -> Result<Complex64> {
    if ch.n_i() != theta.grouping.n_i() {
        return Err(Error::DimensionMismatch {
            expected: ch.n_i(),
            found: theta.grouping.n_i(),
        });
    }
    let mut sum = if include_direct { ch.h_rt } else { Complex64::new(0.0, 0.0) };
    for (g, block) in theta.blocks.iter().enumerate() {
        let m = theta.grouping.members(g);
        for (a, &ea) in m.iter().enumerate() {
            let mut row = Complex64::new(0.0, 0.0);
            for (c, &ec) in m.iter().enumerate() {
                row += block[(a, c)] * ch.h_it[ec];
            }
            sum += ch.h_ri[ea] * row;
        }
    }
    Ok(sum)
}

/// `|cascaded_channel|²` with unit transmit power.
pub fn received_power(ch: &ChannelRealization, theta: &ScatteringMatrix, include_direct: bool) -> Result<f64> {
    Ok(cascaded_channel(ch, theta, include_direct)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::Polarization;
    use crate::grouping::{correlated_grouping, uncorrelated_grouping};
    use std::f64::consts::PI;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn upper_layout() {
        let pairs: Vec<_> = upper_pairs(3).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]);
        for (k, (i, j)) in upper_pairs(5).enumerate() {
            assert_eq!(upper_index(5, i, j), k);
        }
    }

    #[test]
    fn scalar_scattering_values() {
        let g = GroupingStrategy::singletons(1).unwrap();
        let x = ReactanceAssignment::from_upper(g.clone(), vec![vec![0.0]]).unwrap();
        let t = scattering_from_reactance(&x, 50.0).unwrap();
        assert!((t.blocks()[0][(0, 0)] - cx(-1.0, 0.0)).norm() < 1e-15);

        let x = ReactanceAssignment::from_upper(g, vec![vec![50.0]]).unwrap();
        let t = scattering_from_reactance(&x, 50.0).unwrap();
        // (j50 − 50)/(j50 + 50) evaluated directly.
        let direct = (cx(-50.0, 50.0)) / (cx(50.0, 50.0));
        assert!((t.blocks()[0][(0, 0)] - cx(0.0, 1.0)).norm() < 1e-15);
        assert!((direct - cx(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn general_block_matches_direct_solve() {
        let g = GroupingStrategy::single_group(3).unwrap();
        let upper = vec![12.0, -40.0, 7.5, 80.0, -3.0, 150.0];
        let x = ReactanceAssignment::from_upper(g, vec![upper]).unwrap();
        let t = scattering_from_reactance(&x, 50.0).unwrap();
        let xb = x.block(0);
        let j = cx(0.0, 1.0);
        let zi = DMatrix::<Complex64>::identity(3, 3).scale(50.0);
        let jx = xb.map(|v| j * v);
        let lhs = &jx + &zi;
        let rhs = &jx - &zi;
        let direct = lhs.lu().solve(&rhs).unwrap();
        assert!((&t.blocks()[0] - direct).iter().all(|z| z.norm() < 1e-13));
        assert!(t.symmetry_error() <= 1e-12);
        assert!(t.unitarity_error() <= 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = GroupingStrategy::single_group(2).unwrap();
        let x = ReactanceAssignment::zeros(g.clone());
        assert!(scattering_from_reactance(&x, 0.0).is_err());
        assert!(scattering_from_reactance(&x, -5.0).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            ReactanceAssignment::from_blocks(g.clone(), &[bad]),
            Err(Error::NonSymmetric { block: 0 })
        ));
        let good = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let x = ReactanceAssignment::from_blocks(g, &[good]).unwrap();
        assert_eq!(x.upper(0), &[1.0, 2.0, 4.0]);
        assert_eq!(x.get(0, 1, 0), 2.0);
    }

    #[test]
    fn phase_reactance_conversions() {
        assert!(phase_to_reactance(PI, 50.0).unwrap().abs() < 1e-12);
        assert!((phase_to_reactance(PI / 2.0, 50.0).unwrap() - 50.0).abs() < 1e-12);
        assert!(matches!(phase_to_reactance(0.0, 50.0), Err(Error::UnreachableReflection(_))));
        for theta in [PI / 4.0, PI, 7.0 * PI / 4.0] {
            let x = phase_to_reactance(theta, 50.0).unwrap();
            assert!((reactance_to_phase(x, 50.0) - theta).abs() < 1e-9);
            // The reactance reproduces the phase through the scattering formula.
            let refl = (cx(0.0, x) - 50.0) / (cx(0.0, x) + 50.0);
            assert!((refl - Complex64::from_polar(1.0, theta)).norm() < 1e-12);
        }
    }

    #[test]
    fn cascaded_channel_cases() {
        let ones = vec![cx(1.0, 0.0); 4];
        let ch = ChannelRealization::new(cx(0.0, 0.0), ones.clone(), ones.clone()).unwrap();
        let x = ReactanceAssignment::zeros(GroupingStrategy::singletons(4).unwrap());
        let t = scattering_from_reactance(&x, 50.0).unwrap();
        assert!((cascaded_channel(&ch, &t, false).unwrap() - cx(-4.0, 0.0)).norm() < 1e-14);
        assert!((received_power(&ch, &t, false).unwrap() - 16.0).abs() < 1e-12);

        // h_rt = 2 and h_RI·h_IT = 3 with Θ = −I gives 2 − 3.
        let h_ri = vec![cx(1.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0)];
        let ch = ChannelRealization::new(cx(2.0, 0.0), h_ri.clone(), h_ri).unwrap();
        let x = ReactanceAssignment::zeros(GroupingStrategy::single_group(3).unwrap());
        let t = scattering_from_reactance(&x, 50.0).unwrap();
        assert!((cascaded_channel(&ch, &t, true).unwrap() - cx(-1.0, 0.0)).norm() < 1e-14);

        let zeros = vec![cx(0.0, 0.0); 4];
        let ch = ChannelRealization::new(cx(0.0, 0.0), zeros.clone(), zeros).unwrap();
        let t = scattering_from_reactance(&ReactanceAssignment::zeros(GroupingStrategy::singletons(4).unwrap()), 50.0).unwrap();
        assert_eq!(received_power(&ch, &t, false).unwrap(), 0.0);
    }

    #[test]
    fn block_evaluation_matches_dense() {
        let h_ri = vec![cx(0.3, -1.2), cx(0.8, 0.1), cx(-0.5, 0.7), cx(1.1, 0.4)];
        let h_it = vec![cx(-0.2, 0.9), cx(1.4, -0.3), cx(0.05, 0.6), cx(-0.9, -0.8)];
        let ch = ChannelRealization::new(cx(0.0, 0.0), h_ri.clone(), h_it.clone()).unwrap();
        for grouping in [
            uncorrelated_grouping(4, 2, Polarization::Uni).unwrap(),
            correlated_grouping(4, 2, Polarization::Uni).unwrap(),
            "1,0,0,1".parse().unwrap(),
        ] {
            let x = ReactanceAssignment::from_upper(grouping, vec![vec![10.0, -25.0, 60.0], vec![-70.0, 5.0, 33.0]]).unwrap();
            let t = scattering_from_reactance(&x, 50.0).unwrap();
            let dense = t.dense();
            let mut expected = cx(0.0, 0.0);
            for a in 0..4 {
                for c in 0..4 {
                    expected += h_ri[a] * dense[(a, c)] * h_it[c];
                }
            }
            let got = cascaded_channel(&ch, &t, false).unwrap();
            assert!((got - expected).norm() < 1e-13);
            // Dense Θ also matches the formula applied to the dense reactance.
            let full = block_scattering(&x.dense(), 50.0);
            assert!((full - dense).iter().all(|z| z.norm() < 1e-13));
        }
    }

    #[test]
    fn from_phases_and_invariant_check() {
        let t = ScatteringMatrix::from_phases(&[0.0, PI / 3.0]).unwrap();
        assert_eq!(t.blocks()[0][(0, 0)], cx(1.0, 0.0));
        let g = GroupingStrategy::single_group(2).unwrap();
        let bad = DMatrix::from_element(2, 2, cx(1.0, 0.0));
        assert!(ScatteringMatrix::new(g, vec![bad]).is_err());
    }
}
