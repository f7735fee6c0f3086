use num_complex::Complex64;

use crate::models::FluxSplitting;
use crate::modeq::SchemeParams;
use crate::smallmat::{expm, MatC};

use super::grid::{init_fourier, Grid};
use super::stepper::ImexStepper;
use super::ImexError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub dx: f64,
    pub error: f64,
}

/// Refinement study against the exact solution of `u_t + A u_x = 0` for
/// single-mode data `Re(c·e^{i2πkx})`, whose coefficients evolve as
/// `exp(−i2πkA t)·c`.
///
/// Level `l` uses `Δx = base.dx/2^l` with `Δt/Δx`, `α̂`, `α̃` fixed. Each level
/// takes `round(T/Δt)` steps and is compared with the exact solution at the
/// time actually reached, in the discrete L2 norm at cell centers.
pub fn convergence_study(
    sp: &FluxSplitting,
    eps: f64,
    base: SchemeParams,
    levels: usize,
    t_final: f64,
    mode: (i64, &[Complex64]),
) -> Result<Vec<ConvergencePoint>, ImexError> {
    let m = sp.at(eps)?;
    let (k, coeff) = mode;
    let ratio = base.ratio();
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let grid = Grid::with_dx(base.dx / 2f64.powi(level as i32))?;
        let dx = grid.dx();
        let params = SchemeParams::new(dx, ratio * dx, base.alpha_hat, base.alpha_tilde)?;
        let stepper = ImexStepper::from_matrices(m.clone(), params, grid)?;
        let u0 = init_fourier(grid, sp.dim(), &[(k, coeff.to_vec())])?;
        let steps = (t_final / params.dt).round() as usize;
        let mut u = u0;
        for _ in 0..steps {
            u = stepper.step(&u)?;
        }
        let t = steps as f64 * params.dt;
        let gen = MatC::from_fn(sp.dim(), |i, j| {
            Complex64::new(
                0.0,
                -2.0 * std::f64::consts::PI * k as f64 * t * m.a[(i, j)],
            )
        });
        let ct = expm(&gen).mul_vec(coeff);
        let exact = init_fourier(grid, sp.dim(), &[(k, ct)])?;
        out.push(ConvergencePoint {
            dx,
            error: u.lin_comb(1.0, &exact, -1.0)?.l2_norm(),
        });
    }
    Ok(out)
}

/// `log2(e_l / e_{l+1})` for successive halvings.
pub fn observed_orders(points: &[ConvergencePoint]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[0].error / w[1].error).ln() / (w[0].dx / w[1].dx).ln())
        .collect()
}
