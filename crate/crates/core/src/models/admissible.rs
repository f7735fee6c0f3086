use crate::smallmat::{balance, eig_real, rank, MatR};

use super::FluxSplitting;

/// Nonstiff eigenvalues count as ε-uniformly bounded when their sup over
/// the sample grid is at most this multiple of the value at the largest ε.
pub(crate) const HAT_GROWTH_LIMIT: f64 = 10.0;

const IMAG_TOL: f64 = 1e-9;
const CLUSTER_TOL: f64 = 1e-6;
const RANK_TOL: f64 = 1e-5;

pub(crate) fn validation_grid() -> Vec<f64> {
    (0..=8).map(|k| 10f64.powi(-k)).collect()
}

pub(crate) fn hat_is_bounded(sup: f64, reference: f64) -> bool {
    sup.is_finite() && sup <= HAT_GROWTH_LIMIT * reference
}

/// Outcome of checking a splitting for admissibility on a finite ε grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub eps_samples: Vec<f64>,
    pub hyperbolic_hat: Vec<bool>,
    pub hyperbolic_tilde: Vec<bool>,
    /// `max |λ̂|` per sample (NaN where evaluation failed).
    pub hat_eig_max: Vec<f64>,
    pub hat_eig_sup: f64,
    pub hat_bounded: bool,
    pub verdict: bool,
}

/// Real spectrum and a complete set of eigenvectors.
///
/// Works on the balanced matrix. Eigenvalues closer than `1e-6·‖M‖` are
/// grouped; a group of size m must satisfy `rank(M − λI) = d − m`.
pub fn is_hyperbolic(m: &MatR) -> bool {
    let bal = balance(m).matrix;
    let scale = bal.norm_inf();
    if scale == 0.0 {
        return true;
    }
    if !scale.is_finite() {
        return false;
    }
    let spectrum = match eig_real(&bal) {
        Ok(s) => s,
        Err(_) => return false,
    };
    if spectrum.max_abs_imag() > IMAG_TOL * scale {
        return false;
    }
    let lambda = spectrum.real_parts();
    let d = lambda.len();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && lambda[end] - lambda[end - 1] <= CLUSTER_TOL * scale {
            end += 1;
        }
        let size = end - start;
        if size > 1 {
            let mean = lambda[start..end].iter().sum::<f64>() / size as f64;
            let shifted = MatR::from_fn(d, |i, j| bal[(i, j)] - if i == j { mean } else { 0.0 });
            if rank(&shifted, RANK_TOL * scale) != d - size {
                return false;
            }
        }
        start = end;
    }
    true
}

/// Checks that `Â(ε)` and `Ã(ε)` are hyperbolic on every sample and that the
/// nonstiff eigenvalues stay bounded. Samples outside the splitting's own
/// domain are evaluated anyway so that failures show up in the report.
pub fn check_admissible(sp: &FluxSplitting, eps_grid: &[f64]) -> AdmissibilityReport {
    let n = eps_grid.len();
    let mut hyperbolic_hat = Vec::with_capacity(n);
    let mut hyperbolic_tilde = Vec::with_capacity(n);
    let mut hat_eig_max = Vec::with_capacity(n);
    for &eps in eps_grid {
        match sp.at_unchecked(eps) {
            Ok(m) => {
                hyperbolic_hat.push(is_hyperbolic(&m.hat));
                hyperbolic_tilde.push(is_hyperbolic(&m.tilde));
                hat_eig_max.push(eig_real(&m.hat).map(|s| s.max_abs()).unwrap_or(f64::NAN));
            }
            Err(_) => {
                hyperbolic_hat.push(false);
                hyperbolic_tilde.push(false);
                hat_eig_max.push(f64::NAN);
            }
        }
    }
    let hat_eig_sup =
        hat_eig_max.iter().copied().fold(
            0.0,
            |acc: f64, x| {
                if x.is_nan() {
                    f64::NAN
                } else {
                    acc.max(x)
                }
            },
        );
    let reference = eps_grid
        .iter()
        .zip(&hat_eig_max)
        .max_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, &v)| v)
        .unwrap_or(f64::NAN);
    let hat_bounded = n > 0 && hat_is_bounded(hat_eig_sup, reference);
    let verdict =
        hat_bounded && hyperbolic_hat.iter().all(|&b| b) && hyperbolic_tilde.iter().all(|&b| b);
    AdmissibilityReport {
        eps_samples: eps_grid.to_vec(),
        hyperbolic_hat,
        hyperbolic_tilde,
        hat_eig_max,
        hat_eig_sup,
        hat_bounded,
        verdict,
    }
}
