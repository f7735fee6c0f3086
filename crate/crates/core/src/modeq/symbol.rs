use num_complex::Complex64;

use crate::models::{FluxSplitting, SplitMatrices};
use crate::smallmat::{balance, Lu, MatC, MatError};

use super::{ModeqError, SchemeParams};

/// One-step amplification matrix of the IMEX update for the Fourier mode
/// with phase `θ = 2πkΔx`:
/// `G(θ) = (I + cS̃(θ))⁻¹ (I − cŜ(θ))`, `c = Δt/Δx`, where
/// `S(θ) = i·sin θ·M + (1 − cos θ)·α·I`.
pub fn discrete_symbol(
    sp: &FluxSplitting,
    eps: f64,
    p: &SchemeParams,
    theta: f64,
) -> Result<MatC, ModeqError> {
    p.validate()?;
    symbol_from_matrices(&sp.at(eps)?, p, theta)
}

pub fn symbol_from_matrices(
    m: &SplitMatrices,
    p: &SchemeParams,
    theta: f64,
) -> Result<MatC, ModeqError> {
    // work with D⁻¹ÂD, D⁻¹ÃD (exact power-of-two scaling) to keep the
    // implicit factor well conditioned for stiff Ã
    let scale = balance(&m.a).scale;
    let hat = m.hat.similarity_diag(&scale);
    let tilde = m.tilde.similarity_diag(&scale);
    let c = p.ratio();
    let (s, co) = theta.sin_cos();
    let d = m.a.dim();
    let part = |mat: &crate::smallmat::MatR, alpha: f64, sign: f64| {
        MatC::from_fn(d, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            Complex64::new(
                id + sign * c * (1.0 - co) * alpha * id,
                sign * c * s * mat[(i, j)],
            )
        })
    };
    let explicit = part(&hat, p.alpha_hat, -1.0);
    let implicit = part(&tilde, p.alpha_tilde, 1.0);
    let lu = Lu::factorize(&implicit).map_err(|e| match e {
        MatError::Singular { .. } => ModeqError::SingularImplicit { theta },
        other => ModeqError::Mat(other),
    })?;
    let inv_scale: Vec<f64> = scale.iter().map(|v| 1.0 / v).collect();
    Ok(lu.solve_mat(&explicit)?.similarity_diag(&inv_scale))
}
