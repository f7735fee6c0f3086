use std::cmp::Ordering;

use num_complex::Complex64;

use super::lu::Lu;
use super::mat::{Mat, MatC, MatR, Scalar};
use super::MatError;

/// Subdiagonal deflation threshold, relative to the neighbouring diagonal.
const DEFLATION_TOL: f64 = 1e-13;
/// QR sweeps allowed per unit of dimension.
const SWEEPS_PER_DIM: usize = 100;

/// Eigenvalues of a square matrix, sorted by real part then imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    pub max_real: f64,
}

impl Spectrum {
    fn from_unsorted(mut values: Vec<Complex64>) -> Self {
        values.sort_by(cmp_eigenvalue);
        let max_real = values
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Self { values, max_real }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

fn cmp_eigenvalue(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Result of diagonal balancing: `matrix = D⁻¹ · M · D` with `D = diag(scale)`.
#[derive(Debug, Clone)]
pub struct Balanced<T> {
    pub matrix: Mat<T>,
    pub scale: Vec<f64>,
}

/// Parlett–Reinsch balancing with power-of-two scale factors (exact in
/// floating point). Rows or columns that are zero off the diagonal are left
/// alone.
pub fn balance<T: Scalar>(m: &Mat<T>) -> Balanced<T> {
    const RADIX: f64 = 2.0;
    let n = m.dim();
    let mut a = m.clone();
    let mut scale = vec![1.0; n];
    for _pass in 0..200 {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].modulus();
                    r += a[(i, j)].modulus();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                scale[i] *= f;
                let fi = T::from_real(f);
                let gi = T::from_real(1.0 / f);
                for j in 0..n {
                    a[(i, j)] *= gi;
                    a[(j, i)] *= fi;
                }
            }
        }
        if converged {
            break;
        }
    }
    Balanced { matrix: a, scale }
}

/// All eigenvalues of `m` with algebraic multiplicity.
///
/// Balances, reduces to upper Hessenberg form with Householder reflections
/// and runs single-shift complex QR with Wilkinson shifts. 2×2 blocks are
/// finished with the closed-form quadratic.
pub fn eig(m: &MatC) -> Result<Spectrum, MatError> {
    if !m.is_finite() {
        return Err(MatError::NonFinite);
    }
    let n = m.dim();
    if n == 1 {
        return Ok(Spectrum::from_unsorted(vec![m[(0, 0)]]));
    }
    let mut h = balance(m).matrix;
    if n == 2 {
        let (l1, l2) = eig2(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
        return Ok(Spectrum::from_unsorted(vec![l1, l2]));
    }
    hessenberg(&mut h);
    let values = hessenberg_qr(&mut h)?;
    Ok(Spectrum::from_unsorted(values))
}

pub fn eig_real(m: &MatR) -> Result<Spectrum, MatError> {
    eig(&m.to_complex())
}

/// Eigenvalues of [[a, b], [c, d]].
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let mean = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    (mean + disc, mean - disc)
}

fn hessenberg(h: &mut MatC) {
    let n = h.dim();
    let zero = Complex64::new(0.0, 0.0);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2 v v^H) H
        for j in 0..n {
            let mut dot = zero;
            for (off, vi) in v.iter().enumerate() {
                dot += vi.conj() * h[(k + 1 + off, j)];
            }
            for (off, vi) in v.iter().enumerate() {
                h[(k + 1 + off, j)] -= *vi * dot * 2.0;
            }
        }
        // H <- H (I - 2 v v^H)
        for i in 0..n {
            let mut dot = zero;
            for (off, vi) in v.iter().enumerate() {
                dot += h[(i, k + 1 + off)] * *vi;
            }
            for (off, vi) in v.iter().enumerate() {
                h[(i, k + 1 + off)] -= dot * vi.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = zero;
        }
    }
}

fn hessenberg_qr(h: &mut MatC) -> Result<Vec<Complex64>, MatError> {
    let n = h.dim();
    let cap = SWEEPS_PER_DIM * n;
    let zero = Complex64::new(0.0, 0.0);
    let mut values = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut total = 0usize;
    let mut since_deflation = 0usize;

    loop {
        if hi == 0 {
            values.push(h[(0, 0)]);
            break;
        }
        // Locate the start of the active unreduced block.
        let mut lo = 0;
        let window_norm = window_norm(h, hi);
        for l in (1..=hi).rev() {
            let neighbours = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            let reference = if neighbours == 0.0 {
                window_norm
            } else {
                neighbours
            };
            if h[(l, l - 1)].norm() <= DEFLATION_TOL * reference {
                h[(l, l - 1)] = zero;
                lo = l;
                break;
            }
        }
        if lo == hi {
            values.push(h[(hi, hi)]);
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if lo + 1 == hi {
            let (l1, l2) = eig2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            values.push(l1);
            values.push(l2);
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            since_deflation = 0;
            continue;
        }
        if total >= cap {
            let residual = (lo + 1..=hi)
                .map(|i| h[(i, i - 1)].norm())
                .fold(0.0, f64::max);
            return Err(MatError::NoConvergence {
                iterations: total,
                residual,
            });
        }

        let shift = if since_deflation > 0 && since_deflation.is_multiple_of(10) {
            // exceptional shift breaks symmetric cycling
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let (l1, l2) = eig2(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            if (l1 - h[(hi, hi)]).norm() <= (l2 - h[(hi, hi)]).norm() {
                l1
            } else {
                l2
            }
        };
        qr_step(h, lo, hi, shift);
        total += 1;
        since_deflation += 1;
    }
    Ok(values)
}

fn window_norm(h: &MatC, hi: usize) -> f64 {
    (0..=hi)
        .map(|i| (0..=hi).map(|j| h[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// One explicitly shifted QR step `H - σI = QR`, `H <- RQ + σI` on the
/// window `lo..=hi`, using Givens rotations.
fn qr_step(h: &mut MatC, lo: usize, hi: usize, shift: Complex64) {
    for i in lo..=hi {
        h[(i, i)] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (a / r, b / r)
        };
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c.conj() * x + s.conj() * y;
            h[(k + 1, j)] = -s * x + c * y;
        }
        rotations.push((c, s));
    }
    for (offset, (c, s)) in rotations.into_iter().enumerate() {
        let k = lo + offset;
        for i in lo..=(k + 1).min(hi) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s;
            h[(i, k + 1)] = -x * s.conj() + y * c.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] += shift;
    }
}

/// Eigenvectors of a real matrix for the given real eigenvalues, by inverse
/// iteration. Columns have unit Euclidean norm and their first nonzero
/// component positive.
///
/// Works in the coordinates `m` is given in; callers wanting accuracy on
/// badly scaled matrices should pass a balanced matrix.
pub fn real_eigenvectors(m: &MatR, eigenvalues: &[f64]) -> Result<MatR, MatError> {
    let n = m.dim();
    if eigenvalues.len() != n {
        return Err(MatError::DimMismatch {
            left: n,
            right: eigenvalues.len(),
        });
    }
    let norm = m.norm_inf();
    if norm == 0.0 {
        return Ok(MatR::identity(n));
    }
    let delta = 1e-10 * norm;
    let mut q = MatR::zeros(n);
    for (col, &lambda) in eigenvalues.iter().enumerate() {
        let shifted = MatR::from_fn(n, |i, j| {
            m[(i, j)] - if i == j { lambda + delta } else { 0.0 }
        });
        let lu = Lu::factorize(&shifted)?;
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        for _ in 0..3 {
            lu.solve_in_place(&mut v)?;
            let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !vn.is_finite() || vn == 0.0 {
                return Err(MatError::Singular {
                    cond_estimate: f64::INFINITY,
                });
            }
            v.iter_mut().for_each(|x| *x /= vn);
        }
        normalize_sign(&mut v);
        for i in 0..n {
            q[(i, col)] = v[i];
        }
    }
    Ok(q)
}

/// Flips `v` so its first component that is nonzero (relative to the
/// largest) is positive.
pub(crate) fn normalize_sign(v: &mut [f64]) {
    let vmax = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * vmax) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(got: &[Complex64], want: &[Complex64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!(
                (g - w).norm() <= tol * (1.0 + w.norm()),
                "{got:?} vs {want:?}"
            );
        }
    }

    #[test]
    fn diagonal_matrix() {
        let s = eig_real(&MatR::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_close(
            &s.values,
            &[cx(1.0, 0.0), cx(2.0, 0.0), cx(3.0, 0.0)],
            1e-14,
        );
        assert_eq!(s.max_real, 3.0);
    }

    #[test]
    fn rotation_generator() {
        let s = eig_real(&MatR::from_rows(&[[0.0, 1.0], [-1.0, 0.0]])).unwrap();
        assert_close(&s.values, &[cx(0.0, -1.0), cx(0.0, 1.0)], 1e-14);
    }

    #[test]
    fn prototype_matrix_eigenvalues() {
        let (a, e) = (2.0, 0.5);
        let m = MatR::from_rows(&[
            [a, 1.0, 0.0],
            [1.0 / (e * e), a, 1.0 / (e * e)],
            [0.0, 1.0, a],
        ]);
        let r = 2f64.sqrt() / e;
        let s = eig_real(&m).unwrap();
        assert_close(
            &s.values,
            &[cx(a - r, 0.0), cx(a, 0.0), cx(a + r, 0.0)],
            1e-12,
        );
    }

    #[test]
    fn permutation_cycle_converges() {
        // 3-cycle: eigenvalues are the cube roots of unity
        let m = MatR::from_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let s = eig_real(&m).unwrap();
        let h = 3f64.sqrt() / 2.0;
        assert_close(&s.values, &[cx(-0.5, -h), cx(-0.5, h), cx(1.0, 0.0)], 1e-12);
    }

    #[test]
    fn real_input_gives_conjugate_pairs() {
        let m = MatR::from_rows(&[
            [1.0, -2.0, 0.5, 0.0],
            [3.0, 0.2, -1.0, 2.0],
            [0.0, 4.0, -0.3, 1.0],
            [1.5, 0.0, 2.0, 0.7],
        ]);
        let s = eig_real(&m).unwrap();
        let scale = s.max_abs();
        for z in &s.values {
            if z.im.abs() > 1e-8 * scale {
                assert!(
                    s.values
                        .iter()
                        .any(|w| (w - z.conj()).norm() <= 1e-10 * scale),
                    "{z} has no conjugate partner in {:?}",
                    s.values
                );
            }
        }
    }

    #[test]
    fn remark_example_is_stable() {
        // A = I, B = [[5, 1], [-2, 0]]: eigenvalues of -i2πk - 4π²k²B are
        // 2πk((±√17 - 5)πk - i); both real parts negative.
        use std::f64::consts::PI;
        let k = 1.0;
        let b = MatR::from_rows(&[[5.0, 1.0], [-2.0, 0.0]]);
        let ak = MatC::from_fn(2, |i, j| {
            let diag = if i == j {
                cx(0.0, -2.0 * PI * k)
            } else {
                cx(0.0, 0.0)
            };
            diag - cx(4.0 * PI * PI * k * k * b[(i, j)], 0.0)
        });
        let s = eig(&ak).unwrap();
        let want = [
            cx(
                2.0 * PI * k * (-(17f64.sqrt()) - 5.0) * PI * k,
                -2.0 * PI * k,
            ),
            cx(2.0 * PI * k * (17f64.sqrt() - 5.0) * PI * k, -2.0 * PI * k),
        ];
        assert_close(&s.values, &want, 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = MatC::identity(3);
        m[(1, 2)] = cx(f64::INFINITY, 0.0);
        assert_eq!(eig(&m), Err(MatError::NonFinite));
    }

    #[test]
    fn balancing_is_a_similarity() {
        let e = 1e-4;
        let m = MatR::from_rows(&[
            [2.0, 1.0, 0.0],
            [1.0 / (e * e), 2.0, 1.0 / (e * e)],
            [0.0, 1.0, 2.0],
        ]);
        let b = balance(&m);
        assert_eq!(m.similarity_diag(&b.scale), b.matrix);
        assert!(b.matrix.norm_inf() < 1e-2 * m.norm_inf());
    }

    #[test]
    fn eigenvectors_of_prototype() {
        let e = 0.25;
        let m = MatR::from_rows(&[
            [2.0, 1.0, 0.0],
            [1.0 / (e * e), 2.0, 1.0 / (e * e)],
            [0.0, 1.0, 2.0],
        ]);
        let vals = eig_real(&m).unwrap().real_parts();
        let q = real_eigenvectors(&m, &vals).unwrap();
        for (c, &l) in vals.iter().enumerate() {
            let v: Vec<f64> = (0..3).map(|i| q[(i, c)]).collect();
            let mv = m.mul_vec(&v);
            for i in 0..3 {
                assert!((mv[i] - l * v[i]).abs() < 1e-10 * m.norm_inf());
            }
            assert!(v.iter().find(|x| x.abs() > 1e-12).unwrap() > &0.0);
        }
    }

    fn well_conditioned_case() -> impl Strategy<Value = (MatR, Vec<f64>)> {
        (2usize..=5).prop_flat_map(|d| {
            (
                proptest::collection::vec(-0.3f64..0.3, d * d),
                proptest::collection::vec(0.0f64..1.0, d),
                -5.0f64..5.0,
            )
                .prop_map(move |(perturb, gaps, start)| {
                    let q = MatR::from_fn(d, |i, j| {
                        perturb[i * d + j] + if i == j { 1.0 } else { 0.0 }
                    });
                    let mut lambda = Vec::with_capacity(d);
                    let mut cur = start;
                    for g in gaps {
                        cur += 0.5 + g;
                        lambda.push(cur);
                    }
                    let qinv = Lu::factorize(&q).unwrap().inverse().unwrap();
                    let m = &(&q * &MatR::diag(&lambda)) * &qinv;
                    (m, lambda)
                })
        })
    }

    proptest! {
        #[test]
        fn reproduces_similarity_spectrum((m, lambda) in well_conditioned_case()) {
            let s = eig_real(&m).unwrap();
            prop_assert_eq!(s.len(), lambda.len());
            for (z, l) in s.values.iter().zip(&lambda) {
                prop_assert!((z - Complex64::new(*l, 0.0)).norm() <= 1e-9 * l.abs().max(1.0),
                    "{} vs {}", z, l);
            }
        }

        #[test]
        fn trace_equals_eigenvalue_sum(entries in proptest::collection::vec(-10.0f64..10.0, 1..=64)) {
            let d = (entries.len() as f64).sqrt().floor() as usize;
            let m = MatR::new(d, entries[..d * d].to_vec()).unwrap();
            let s = eig_real(&m).unwrap();
            let sum: Complex64 = s.values.iter().sum();
            let tr = m.trace();
            prop_assert!((sum.re - tr).abs() <= 1e-10 * m.norm_inf().max(1.0));
            prop_assert!(sum.im.abs() <= 1e-10 * m.norm_inf().max(1.0));
            let max_re = s.values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(max_re, s.max_real);
        }
    }
}
