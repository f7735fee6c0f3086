//! First-order IMEX finite-volume solver on a periodic grid.

mod grid;
mod periodic;
mod stepper;
mod study;

use num_complex::Complex64;
use thiserror::Error;

use crate::models::{FluxSplitting, ModelError};
use crate::modeq::{resolve_alpha, AlphaRule, ModeqError, SchemeParams};
use crate::smallmat::{MatError, MatR};

pub use grid::{fourier_coefficient, init_fourier, Grid, GridField};
pub use periodic::{solve_periodic_block_tridiagonal, PeriodicBlockTridiag, DENSE_MAX_CELLS};
pub use stepper::{run, step, ImexStepper, RunResult, DEFAULT_BLOWUP};
pub use study::{convergence_study, observed_orders, ConvergencePoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImexError {
    #[error("grid needs at least 4 cells, got {0}")]
    TooFewCells(usize),
    #[error("Δx = {0} does not divide the unit interval")]
    IncommensurateDx(f64),
    #[error("mode k = {k} is not resolved on {cells} cells (need |k| < J/2)")]
    UnresolvedMode { k: i64, cells: usize },
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    FieldShape { expected: usize, actual: usize },
    #[error("non-finite value in field")]
    NonFinite,
    #[error("scheme Δx = {params_dx} does not match grid Δx = {grid_dx}")]
    GridMismatch { params_dx: f64, grid_dx: f64 },
    #[error("final time must be positive, got {0}")]
    InvalidTime(f64),
    #[error("implicit operator is singular: {0}")]
    Singular(MatError),
    #[error("dense reference solve is limited to J ≤ 64, got {0}")]
    DenseTooLarge(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Modeq(#[from] ModeqError),
}

/// Characteristic variables `w = P Q⁻¹ u`, ordered with the slow field
/// first and the remaining fields by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct CharacteristicBasis {
    /// Columns are eigenvectors of `A(ε)` in `w` order.
    pub q: MatR,
    pub q_inv: MatR,
    pub lambda: Vec<f64>,
}

impl CharacteristicBasis {
    pub fn new(sp: &FluxSplitting, eps: f64) -> Result<Self, ImexError> {
        let system = sp.system();
        let dec = system.decompose(eps)?;
        let (q, q_inv) = dec.q_pair();
        let slow = system.slow_index(&dec.lambda);
        let order: Vec<usize> = std::iter::once(slow)
            .chain((0..dec.lambda.len()).filter(|&i| i != slow))
            .collect();
        let d = order.len();
        Ok(Self {
            q: MatR::from_fn(d, |i, j| q[(i, order[j])]),
            q_inv: MatR::from_fn(d, |i, j| q_inv[(order[i], j)]),
            lambda: order.iter().map(|&i| dec.lambda[i]).collect(),
        })
    }

    pub fn to_conserved(&self, w: &GridField) -> GridField {
        w.map_cells(w.dim(), |c| self.q.mul_vec(c))
    }

    pub fn to_characteristic(&self, u: &GridField) -> GridField {
        u.map_cells(u.dim(), |c| self.q_inv.mul_vec(c))
    }
}

/// Initial data given as Fourier modes of the characteristic variables.
pub fn characteristic_initial_data(
    basis: &CharacteristicBasis,
    grid: Grid,
    modes: &[(i64, Vec<Complex64>)],
) -> Result<GridField, ImexError> {
    let w = init_fourier(grid, basis.q.dim(), modes)?;
    Ok(basis.to_conserved(&w))
}

/// The reference experiment: `Δx = 1/200`, `Δt = Δx/10`, `T = 0.1`,
/// `α̂ = max|eig Â|`, `α̃ = 0`, and `w(x,0) = (cos 4πx, 0, …)`.
#[derive(Debug, Clone)]
pub struct ReferenceSetup {
    pub grid: Grid,
    pub params: SchemeParams,
    pub t_final: f64,
    pub basis: CharacteristicBasis,
    pub initial: GridField,
}

pub const REFERENCE_CELLS: usize = 200;
pub const REFERENCE_COURANT: f64 = 0.1;
pub const REFERENCE_T: f64 = 0.1;
pub const REFERENCE_MODE: i64 = 2;

pub fn reference_setup(sp: &FluxSplitting, eps: f64) -> Result<ReferenceSetup, ImexError> {
    let grid = Grid::new(REFERENCE_CELLS)?;
    let m = sp.at(eps)?;
    let (alpha_hat, alpha_tilde) = resolve_alpha(&AlphaRule::default(), &m)?;
    let params = SchemeParams::new(
        grid.dx(),
        REFERENCE_COURANT * grid.dx(),
        alpha_hat,
        alpha_tilde,
    )?;
    let basis = CharacteristicBasis::new(sp, eps)?;
    let d = sp.dim();
    let mut coeff = vec![Complex64::new(0.0, 0.0); d];
    coeff[0] = Complex64::new(1.0, 0.0);
    let initial = characteristic_initial_data(&basis, grid, &[(REFERENCE_MODE, coeff)])?;
    Ok(ReferenceSetup {
        grid,
        params,
        t_final: REFERENCE_T,
        basis,
        initial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{euler_characteristic_splitting, euler_paper_splitting};

    #[test]
    fn basis_puts_slow_field_first() {
        let sp = euler_paper_splitting();
        let b = CharacteristicBasis::new(&sp, 1e-3).unwrap();
        assert!((b.lambda[0] - 1.0).abs() < 1e-9);
        assert!(b.lambda[1] < b.lambda[2]);
        let prod = &b.q_inv * &b.q;
        assert!((&prod - &MatR::identity(3)).max_abs() < 1e-10);
    }

    #[test]
    fn reference_initial_data_roundtrip() {
        let sp = euler_characteristic_splitting().unwrap();
        let setup = reference_setup(&sp, 1e-3).unwrap();
        assert_eq!(setup.grid.cells(), 200);
        assert!((setup.params.dt - 5e-4).abs() < 1e-18);
        let w = setup.basis.to_characteristic(&setup.initial);
        for (j, x) in setup.grid.centers().enumerate() {
            let c = w.cell(j);
            assert!((c[0] - (4.0 * std::f64::consts::PI * x).cos()).abs() < 1e-12);
            assert!(c[1].abs() < 1e-12 && c[2].abs() < 1e-12);
        }
    }
}
