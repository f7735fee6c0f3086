use num_complex::Complex64;

use super::mat::{Mat, MatC, Scalar};
use super::MatError;

/// LU factorization with partial pivoting, `P·M = L·U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factorizes `m`, failing when a pivot falls below `d·u·‖m‖∞`.
    pub fn factorize(m: &Mat<T>) -> Result<Self, MatError> {
        let n = m.dim();
        let norm = m.norm_inf();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;

        for col in 0..n {
            let (p, best) = (col..n)
                .map(|r| (r, lu[(r, col)].modulus()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            min_pivot = min_pivot.min(best);
            if best == 0.0 || best <= (n as f64) * f64::EPSILON * norm {
                let cond_estimate = if best == 0.0 {
                    f64::INFINITY
                } else {
                    norm / best
                };
                return Err(MatError::Singular { cond_estimate });
            }
            if p != col {
                perm.swap(p, col);
                for j in 0..n {
                    let tmp = lu[(p, j)];
                    lu[(p, j)] = lu[(col, j)];
                    lu[(col, j)] = tmp;
                }
            }
            let pivot = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / pivot;
                lu[(r, col)] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in col + 1..n {
                    let u = lu[(col, j)];
                    lu[(r, j)] -= factor * u;
                }
            }
        }
        debug_assert!(min_pivot > 0.0);
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>, MatError> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [T]) -> Result<(), MatError> {
        let n = self.dim();
        if x.len() != n {
            return Err(MatError::DimMismatch {
                left: n,
                right: x.len(),
            });
        }
        let mut y: Vec<T> = self.perm.iter().map(|&p| x[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let yj = y[j];
                y[i] -= l * yj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let yj = y[j];
                y[i] -= u * yj;
            }
            y[i] /= self.lu[(i, i)];
        }
        x.copy_from_slice(&y);
        Ok(())
    }

    /// Solves `M X = B` column by column.
    pub fn solve_mat(&self, b: &Mat<T>) -> Result<Mat<T>, MatError> {
        let n = self.dim();
        if b.dim() != n {
            return Err(MatError::DimMismatch {
                left: n,
                right: b.dim(),
            });
        }
        let mut out = Mat::zeros(n);
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            self.solve_in_place(&mut col)?;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Mat<T>, MatError> {
        self.solve_mat(&Mat::identity(self.dim()))
    }
}

/// Solves `m·x = rhs`.
pub fn solve_linear(m: &MatC, rhs: &[Complex64]) -> Result<Vec<Complex64>, MatError> {
    if rhs.len() != m.dim() {
        return Err(MatError::DimMismatch {
            left: m.dim(),
            right: rhs.len(),
        });
    }
    Lu::factorize(m)?.solve(rhs)
}

/// Numerical rank by Gaussian elimination with complete pivoting; pivots at
/// or below `tol` count as zero.
pub fn rank<T: Scalar>(m: &Mat<T>, tol: f64) -> usize {
    let n = m.dim();
    let mut a = m.clone();
    let mut rank = 0;
    for step in 0..n {
        let mut best = (step, step, -1.0);
        for i in step..n {
            for j in step..n {
                let v = a[(i, j)].modulus();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        rank += 1;
        let (pi, pj, _) = best;
        for j in 0..n {
            let t = a[(pi, j)];
            a[(pi, j)] = a[(step, j)];
            a[(step, j)] = t;
        }
        for i in 0..n {
            let t = a[(i, pj)];
            a[(i, pj)] = a[(i, step)];
            a[(i, step)] = t;
        }
        let pivot = a[(step, step)];
        for i in step + 1..n {
            let f = a[(i, step)] / pivot;
            for j in step..n {
                let v = a[(step, j)];
                a[(i, j)] -= f * v;
            }
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smallmat::MatR;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn residual_ok(m: &MatC, x: &[Complex64], rhs: &[Complex64]) -> bool {
        let mx = m.mul_vec(x);
        let res = mx
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let xn = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let rn = rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
        res <= 1e-12 * (m.norm_inf() * xn + rn)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let v = vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)];
        let x = solve_linear(&MatC::identity(2), &v).unwrap();
        assert_eq!(x, v);
    }

    #[test]
    fn diagonal_solve() {
        let m = MatR::diag(&[2.0, 4.0]).to_complex();
        let x = solve_linear(&m, &[c(2.0), c(8.0)]).unwrap();
        assert_eq!(x, vec![c(1.0), c(2.0)]);
    }

    #[test]
    fn hilbert_block_residual() {
        let m = MatR::from_rows(&[[1.0, 0.5], [0.5, 1.0 / 3.0]]).to_complex();
        let rhs = [c(1.0), c(0.0)];
        let x = solve_linear(&m, &rhs).unwrap();
        assert!(residual_ok(&m, &x, &rhs));
        // exact inverse of the 2x2 Hilbert matrix has first column (4, -6)
        assert!((x[0].re - 4.0).abs() < 1e-12 && (x[1].re + 6.0).abs() < 1e-12);
    }

    #[test]
    fn singular_reports_condition() {
        let m = MatR::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).to_complex();
        match solve_linear(&m, &[c(1.0), c(1.0)]) {
            Err(MatError::Singular { cond_estimate }) => assert!(cond_estimate > 1e14),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn rhs_length_mismatch() {
        assert!(matches!(
            solve_linear(&MatC::identity(3), &[c(1.0)]),
            Err(MatError::DimMismatch { .. })
        ));
    }

    #[test]
    fn rank_of_nilpotent() {
        let m = MatR::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(rank(&m, 1e-12), 1);
        assert_eq!(rank(&MatR::zeros(3), 1e-12), 0);
        assert_eq!(rank(&MatR::identity(4), 1e-12), 4);
    }
}
