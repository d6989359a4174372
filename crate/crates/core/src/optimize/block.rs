//! Incremental evaluation of one block's contribution `a Θ b` under
//! single-entry reactance changes.
//!
//! With `U = X/Z0` and `M = (I + jU)⁻¹`, `Θ = I − 2M`, so the contribution is
//! `s = a·b − 2·aMb`. Changing `U_ij = U_ji` is a rank-1 (diagonal) or
//! rank-2 (off-diagonal) update of `I + jU`, so a candidate's effect on `s`
//! needs only `M_ii, M_ij, M_jj`, `p = aM` and `q = Mb`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::netmodel::{normalized_inverse, upper_index, upper_to_matrix};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Low-rank correction for one entry change.
enum Step {
    Diagonal { i: usize, r: Complex64 },
    OffDiagonal { i: usize, j: usize, r: [[Complex64; 2]; 2] },
}

#[derive(Debug, Clone)]
pub(crate) struct BlockState {
    n: usize,
    /// Normalized reactance, upper triangle.
    u: Vec<f64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    m: DMatrix<Complex64>,
    p: Vec<Complex64>,
    q: Vec<Complex64>,
    s: Complex64,
}

impl BlockState {
    pub fn new(a: Vec<Complex64>, b: Vec<Complex64>, u: Vec<f64>) -> Self {
        let n = a.len();
        let mut st = Self {
            n,
            u,
            a,
            b,
            m: DMatrix::zeros(n, n),
            p: vec![Complex64::new(0.0, 0.0); n],
            q: vec![Complex64::new(0.0, 0.0); n],
            s: Complex64::new(0.0, 0.0),
        };
        st.refresh();
        st
    }

    /// Recomputes `M`, `p`, `q`, `s` from `u` by a fresh factorization.
    pub fn refresh(&mut self) {
        self.m = normalized_inverse(&upper_to_matrix(self.n, &self.u));
        self.recompute_pq();
    }

    fn recompute_pq(&mut self) {
        let n = self.n;
        for k in 0..n {
            let mut pk = Complex64::new(0.0, 0.0);
            let mut qk = Complex64::new(0.0, 0.0);
            for l in 0..n {
                pk += self.a[l] * self.m[(l, k)];
                qk += self.m[(k, l)] * self.b[l];
            }
            self.p[k] = pk;
            self.q[k] = qk;
        }
        let ab: Complex64 = self.a.iter().zip(&self.b).map(|(x, y)| x * y).sum();
        let pb: Complex64 = self.p.iter().zip(&self.b).map(|(x, y)| x * y).sum();
        self.s = ab - pb * 2.0;
    }

    pub fn contribution(&self) -> Complex64 {
        self.s
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn u_at(&self, i: usize, j: usize) -> f64 {
        self.u[upper_index(self.n, i, j)]
    }

    fn step(&self, i: usize, j: usize, new_u: f64) -> (Step, Complex64) {
        let c = J * (new_u - self.u_at(i, j));
        let m = &self.m;
        if i == j {
            let r = c / (Complex64::new(1.0, 0.0) + c * m[(i, i)]);
            (Step::Diagonal { i, r }, r * self.p[i] * self.q[i])
        } else {
            // W = I + C·Eᵀ M E with C = c·[[0, 1], [1, 0]].
            let w00 = 1.0 + c * m[(i, j)];
            let w01 = c * m[(j, j)];
            let w10 = c * m[(i, i)];
            let w11 = 1.0 + c * m[(i, j)];
            let det = w00 * w11 - w01 * w10;
            let inv = [[w11 / det, -w01 / det], [-w10 / det, w00 / det]];
            // R = W⁻¹ C.
            let r = [[inv[0][1] * c, inv[0][0] * c], [inv[1][1] * c, inv[1][0] * c]];
            let (pi, pj, qi, qj) = (self.p[i], self.p[j], self.q[i], self.q[j]);
            let corr = pi * (r[0][0] * qi + r[0][1] * qj) + pj * (r[1][0] * qi + r[1][1] * qj);
            (Step::OffDiagonal { i, j, r }, corr)
        }
    }

    /// Change of `s` if `U_ij` were set to `new_u`.
    pub fn delta(&self, i: usize, j: usize, new_u: f64) -> Complex64 {
        // M' = M − M E R Eᵀ M, so aM'b = aMb − corr and s' = s + 2·corr.
        self.step(i, j, new_u).1 * 2.0
    }

    /// Sets `U_ij = U_ji = new_u` and updates the cached state in `O(n²)`.
    pub fn apply(&mut self, i: usize, j: usize, new_u: f64) {
        let (step, _) = self.step(i, j, new_u);
        let n = self.n;
        match step {
            Step::Diagonal { i, r } => {
                let col: Vec<Complex64> = (0..n).map(|k| self.m[(k, i)]).collect();
                for l in 0..n {
                    let f = r * col[l];
                    for k in 0..n {
                        self.m[(k, l)] -= col[k] * f;
                    }
                }
            }
            Step::OffDiagonal { i, j, r } => {
                let ci: Vec<Complex64> = (0..n).map(|k| self.m[(k, i)]).collect();
                let cj: Vec<Complex64> = (0..n).map(|k| self.m[(k, j)]).collect();
                // Rows i, j of M equal columns i, j by symmetry.
                for l in 0..n {
                    let t0 = r[0][0] * ci[l] + r[0][1] * cj[l];
                    let t1 = r[1][0] * ci[l] + r[1][1] * cj[l];
                    for k in 0..n {
                        self.m[(k, l)] -= ci[k] * t0 + cj[k] * t1;
                    }
                }
            }
        }
        let idx = upper_index(n, i, j);
        self.u[idx] = new_u;
        self.recompute_pq();
    }

    /// Replaces the whole block and refactorizes.
    pub fn set_all(&mut self, u: &[f64]) {
        self.u.copy_from_slice(u);
        self.refresh();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{block_scattering, upper_len, upper_pairs};

    fn direct(a: &[Complex64], b: &[Complex64], u: &[f64]) -> Complex64 {
        let n = a.len();
        let theta = block_scattering(&upper_to_matrix(n, u), 1.0);
        let mut s = Complex64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                s += a[r] * theta[(r, c)] * b[c];
            }
        }
        s
    }

    #[test]
    fn rank_updates_match_refactorization() {
        let n = 4;
        let a: Vec<Complex64> = (0..n).map(|k| Complex64::new(0.3 * k as f64 - 0.5, 0.7 - 0.2 * k as f64)).collect();
        let b: Vec<Complex64> = (0..n).map(|k| Complex64::new(1.0 - 0.4 * k as f64, 0.1 * k as f64 + 0.2)).collect();
        let mut u: Vec<f64> = (0..upper_len(n)).map(|k| ((k * 7 % 5) as f64 - 2.0) * 0.6).collect();
        let mut st = BlockState::new(a.clone(), b.clone(), u.clone());
        assert!((st.contribution() - direct(&a, &b, &u)).norm() < 1e-13);
        for (step, (i, j)) in upper_pairs(n).enumerate() {
            let new = 2.5 - step as f64 * 0.45;
            let predicted = st.contribution() + st.delta(i, j, new);
            u[upper_index(n, i, j)] = new;
            let exact = direct(&a, &b, &u);
            assert!((predicted - exact).norm() < 1e-12, "({i},{j})");
            st.apply(i, j, new);
            assert!((st.contribution() - exact).norm() < 1e-12);
        }
    }
}
