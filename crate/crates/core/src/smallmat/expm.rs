use num_complex::Complex64;

use super::mat::MatC;

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(m: &MatC) -> MatC {
    let n = m.dim();
    let norm = m.norm_inf();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m.scale(Complex64::new(0.5f64.powi(squarings), 0.0));

    let mut result = MatC::identity(n);
    let mut term = MatC::identity(n);
    for k in 1..=20 {
        term = (&term * &scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        result = &result + &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
