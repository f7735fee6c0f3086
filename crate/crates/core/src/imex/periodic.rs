//! Periodic block-tridiagonal systems
//!
//! ```text
//! L x_{j-1} + D x_j + U x_{j+1} = r_j,   j = 0..J-1 (indices mod J)
//! ```
//!
//! with constant blocks. The non-periodic part is solved with block Thomas;
//! the two corner blocks enter as a rank-2d Woodbury correction.

use crate::smallmat::{Lu, MatR};

use super::ImexError;

const REFINEMENT_SWEEPS: usize = 2;

/// Largest J accepted by the dense reference solver.
pub const DENSE_MAX_CELLS: usize = 64;

/// A factorized periodic block-tridiagonal operator.
#[derive(Debug, Clone)]
pub struct PeriodicBlockTridiag {
    cells: usize,
    dim: usize,
    diag: MatR,
    lower: MatR,
    upper: MatR,
    wrap_lower: MatR,
    wrap_upper: MatR,
    /// Factorized Schur complements D'_j of the forward sweep.
    pivots: Vec<Lu<f64>>,
    /// D'_j⁻¹ U for j < J-1.
    sweep: Vec<MatR>,
    /// T0⁻¹ V, stored as 2d columns of length J·d.
    z: Vec<Vec<f64>>,
    capacitance: Lu<f64>,
}

impl PeriodicBlockTridiag {
    /// Constant-coefficient periodic operator: the corner blocks equal the
    /// off-diagonal blocks.
    pub fn new(diag: MatR, lower: MatR, upper: MatR, cells: usize) -> Result<Self, ImexError> {
        let (wl, wu) = (lower.clone(), upper.clone());
        Self::with_wrap(diag, lower, upper, wl, wu, cells)
    }

    /// `wrap_lower` couples row 0 to `x_{J-1}`, `wrap_upper` couples row
    /// J-1 to `x_0`.
    pub fn with_wrap(
        diag: MatR,
        lower: MatR,
        upper: MatR,
        wrap_lower: MatR,
        wrap_upper: MatR,
        cells: usize,
    ) -> Result<Self, ImexError> {
        let dim = diag.dim();
        for m in [&lower, &upper, &wrap_lower, &wrap_upper] {
            if m.dim() != dim {
                return Err(ImexError::FieldShape {
                    expected: dim,
                    actual: m.dim(),
                });
            }
        }
        if cells < 3 {
            return Err(ImexError::TooFewCells(cells));
        }
        let mut pivots = Vec::with_capacity(cells);
        let mut sweep = Vec::with_capacity(cells - 1);
        pivots.push(Lu::factorize(&diag).map_err(ImexError::Singular)?);
        for j in 1..cells {
            let s = pivots[j - 1]
                .solve_mat(&upper)
                .map_err(ImexError::Singular)?;
            let schur = &diag - &(&lower * &s);
            sweep.push(s);
            pivots.push(Lu::factorize(&schur).map_err(ImexError::Singular)?);
        }
        let mut out = Self {
            cells,
            dim,
            diag,
            lower,
            upper,
            wrap_lower,
            wrap_upper,
            pivots,
            sweep,
            z: Vec::new(),
            capacitance: Lu::factorize(&MatR::identity(1)).expect("identity is regular"),
        };
        let n = cells * dim;
        let mut z = Vec::with_capacity(2 * dim);
        for col in 0..2 * dim {
            let mut e = vec![0.0; n];
            if col < dim {
                e[col] = 1.0;
            } else {
                e[(cells - 1) * dim + col - dim] = 1.0;
            }
            out.solve_open(&mut e)?;
            z.push(e);
        }
        let cap = MatR::from_fn(2 * dim, |i, j| {
            let w = out.wrap_rows(&z[j]);
            w[i] + if i == j { 1.0 } else { 0.0 }
        });
        out.capacitance = Lu::factorize(&cap).map_err(ImexError::Singular)?;
        out.z = z;
        Ok(out)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Wᵀx = (wrap_lower·x_{J-1}, wrap_upper·x_0)`.
    fn wrap_rows(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let last = &x[(self.cells - 1) * d..];
        let mut out = self.wrap_lower.mul_vec(last);
        out.extend(self.wrap_upper.mul_vec(&x[..d]));
        out
    }

    /// Solves the system without corner blocks in place.
    fn solve_open(&self, x: &mut [f64]) -> Result<(), ImexError> {
        let d = self.dim;
        self.pivots[0]
            .solve_in_place(&mut x[..d])
            .map_err(ImexError::Singular)?;
        for j in 1..self.cells {
            let (prev, rest) = x.split_at_mut(j * d);
            let cur = &mut rest[..d];
            let lp = self.lower.mul_vec(&prev[(j - 1) * d..]);
            cur.iter_mut().zip(&lp).for_each(|(c, l)| *c -= l);
            self.pivots[j]
                .solve_in_place(cur)
                .map_err(ImexError::Singular)?;
        }
        for j in (0..self.cells - 1).rev() {
            let (head, tail) = x.split_at_mut((j + 1) * d);
            let corr = self.sweep[j].mul_vec(&tail[..d]);
            head[j * d..]
                .iter_mut()
                .zip(&corr)
                .for_each(|(h, c)| *h -= c);
        }
        Ok(())
    }

    /// Solves `T x = rhs`, followed by iterative refinement: the Woodbury
    /// correction loses digits when `T0⁻¹` decays slowly (weakly damped
    /// stiff blocks), and one or two refinement sweeps recover them.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, ImexError> {
        let n = self.cells * self.dim;
        if rhs.len() != n {
            return Err(ImexError::FieldShape {
                expected: n,
                actual: rhs.len(),
            });
        }
        let mut x = self.solve_once(rhs)?;
        let mut res_norm = f64::INFINITY;
        for _ in 0..REFINEMENT_SWEEPS {
            let r: Vec<f64> = self
                .apply(&x)
                .iter()
                .zip(rhs)
                .map(|(ax, b)| b - ax)
                .collect();
            let rn = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if rn == 0.0 || rn >= res_norm {
                break;
            }
            res_norm = rn;
            let dx = self.solve_once(&r)?;
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        Ok(x)
    }

    fn solve_once(&self, rhs: &[f64]) -> Result<Vec<f64>, ImexError> {
        let mut y = rhs.to_vec();
        self.solve_open(&mut y)?;
        let mut t = self.wrap_rows(&y);
        self.capacitance
            .solve_in_place(&mut t)
            .map_err(ImexError::Singular)?;
        for (zc, tc) in self.z.iter().zip(&t) {
            y.iter_mut().zip(zc).for_each(|(yi, zi)| *yi -= tc * zi);
        }
        Ok(y)
    }

    /// The operator applied to `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (d, jn) = (self.dim, self.cells);
        let mut out = Vec::with_capacity(jn * d);
        for j in 0..jn {
            let prev = &x[((j + jn - 1) % jn) * d..][..d];
            let next = &x[((j + 1) % jn) * d..][..d];
            let lower = if j == 0 {
                &self.wrap_lower
            } else {
                &self.lower
            };
            let upper = if j == jn - 1 {
                &self.wrap_upper
            } else {
                &self.upper
            };
            let mut r = self.diag.mul_vec(&x[j * d..][..d]);
            for (ri, (a, b)) in r
                .iter_mut()
                .zip(lower.mul_vec(prev).into_iter().zip(upper.mul_vec(next)))
            {
                *ri += a + b;
            }
            out.extend(r);
        }
        out
    }

    /// `‖·‖∞` of the assembled operator.
    pub fn norm_inf(&self) -> f64 {
        let row_sum = |m: &MatR, i: usize| m.row(i).iter().map(|v| v.abs()).sum::<f64>();
        (0..self.dim)
            .map(|i| {
                let inner =
                    row_sum(&self.diag, i) + row_sum(&self.lower, i) + row_sum(&self.upper, i);
                let first =
                    row_sum(&self.diag, i) + row_sum(&self.wrap_lower, i) + row_sum(&self.upper, i);
                let last =
                    row_sum(&self.diag, i) + row_sum(&self.lower, i) + row_sum(&self.wrap_upper, i);
                inner.max(first).max(last)
            })
            .fold(0.0, f64::max)
    }

    /// Reference solve through the assembled dense matrix, for `J ≤ 64`.
    pub fn solve_dense(&self, rhs: &[f64]) -> Result<Vec<f64>, ImexError> {
        if self.cells > DENSE_MAX_CELLS {
            return Err(ImexError::DenseTooLarge(self.cells));
        }
        let n = self.cells * self.dim;
        let mut cols = Vec::with_capacity(n);
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            cols.push(self.apply(&e));
        }
        let dense = MatR::from_fn(n, |i, j| cols[j][i]);
        Lu::factorize(&dense)
            .and_then(|lu| lu.solve(rhs))
            .map_err(ImexError::Singular)
    }
}

/// One-shot solve of a periodic block-tridiagonal system.
pub fn solve_periodic_block_tridiagonal(
    diag: &MatR,
    lower: &MatR,
    upper: &MatR,
    wrap_lower: &MatR,
    wrap_upper: &MatR,
    rhs: &[f64],
) -> Result<Vec<f64>, ImexError> {
    let d = diag.dim();
    if d == 0 || !rhs.len().is_multiple_of(d) {
        return Err(ImexError::FieldShape {
            expected: d,
            actual: rhs.len(),
        });
    }
    let op = PeriodicBlockTridiag::with_wrap(
        diag.clone(),
        lower.clone(),
        upper.clone(),
        wrap_lower.clone(),
        wrap_upper.clone(),
        rhs.len() / d,
    )?;
    op.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual_ok(op: &PeriodicBlockTridiag, x: &[f64], rhs: &[f64]) -> bool {
        let ax = op.apply(x);
        let res = ax
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let rn = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        res <= 1e-12 * (op.norm_inf() * xn + rn)
    }

    #[test]
    fn identity_returns_rhs() {
        let op = PeriodicBlockTridiag::new(MatR::identity(2), MatR::zeros(2), MatR::zeros(2), 5)
            .unwrap();
        let r: Vec<f64> = (0..10).map(|i| i as f64 - 3.5).collect();
        assert_eq!(op.solve(&r).unwrap(), r);
    }

    #[test]
    fn scalar_example_matches_hand_inverse() {
        // I + tridiag(-c, 0, c), J = 4, c = 0.1; circulant inverse by hand:
        // eigenvalues 1 + 2ic·sin(2πm/4), m = 0..3
        let c = 0.1;
        let op =
            PeriodicBlockTridiag::new(MatR::diag(&[1.0]), MatR::diag(&[-c]), MatR::diag(&[c]), 4)
                .unwrap();
        let x = op.solve(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        // circulant solve via DFT
        let expected: Vec<f64> = (0..4)
            .map(|j| {
                (0..4)
                    .map(|m| {
                        let th = 2.0 * std::f64::consts::PI * m as f64 / 4.0;
                        let lam = num_complex::Complex64::new(1.0, 2.0 * c * th.sin());
                        (num_complex::Complex64::from_polar(1.0, th * j as f64) / lam).re / 4.0
                    })
                    .sum()
            })
            .collect();
        for (a, b) in x.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15, "{x:?} vs {expected:?}");
        }
        let dense = op.solve_dense(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for (a, b) in x.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn random_block_system_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let d = 3;
            let mut rand_mat = |s: f64| MatR::from_fn(d, |_, _| s * (rng.gen::<f64>() - 0.5));
            let diag = &MatR::identity(d).scale(4.0) + &rand_mat(1.0);
            let (lower, upper) = (rand_mat(1.0), rand_mat(1.0));
            let (wl, wu) = (rand_mat(1.0), rand_mat(1.0));
            let op = PeriodicBlockTridiag::with_wrap(diag, lower, upper, wl, wu, 16).unwrap();
            let rhs: Vec<f64> = (0..16 * d).map(|_| rng.gen::<f64>() - 0.5).collect();
            let x = op.solve(&rhs).unwrap();
            assert!(residual_ok(&op, &x, &rhs));
            let dense = op.solve_dense(&rhs).unwrap();
            let diff = x
                .iter()
                .zip(&dense)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-11);
        }
    }

    #[test]
    fn stiff_imex_operator_residual() {
        // I + c(½Ã·δ₀ − ½α̃·δ²) with a large stiff block
        let c = 50.0;
        let t = MatR::from_rows(&[[0.0, 1.0, 0.0], [1e6, 0.0, 1e6], [0.0, 1.0, 0.0]]);
        let alpha = 1.5e3;
        let id = MatR::identity(3);
        let diag = &id + &id.scale(c * alpha);
        let upper = &t.scale(0.5 * c) - &id.scale(0.5 * c * alpha);
        let lower = &t.scale(-0.5 * c) - &id.scale(0.5 * c * alpha);
        let op = PeriodicBlockTridiag::new(diag, lower, upper, 200).unwrap();
        let rhs: Vec<f64> = (0..600)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0)
            .collect();
        let x = op.solve(&rhs).unwrap();
        assert!(residual_ok(&op, &x, &rhs));
    }

    #[test]
    fn dense_path_is_limited() {
        let op = PeriodicBlockTridiag::new(MatR::identity(1), MatR::zeros(1), MatR::zeros(1), 65)
            .unwrap();
        assert!(matches!(
            op.solve_dense(&[0.0; 65]),
            Err(ImexError::DenseTooLarge(65))
        ));
    }
}
