use crate::models::{FluxSplitting, SplitMatrices};
use crate::modeq::SchemeParams;
use crate::smallmat::{balance, MatR};

use super::grid::{Grid, GridField};
use super::periodic::PeriodicBlockTridiag;
use super::ImexError;

/// Default blow-up threshold on `L2(t)/L2(0)`.
pub const DEFAULT_BLOWUP: f64 = 1e3;

/// First-order IMEX update
///
/// ```text
/// u_j^{n+1} + c (H̃_{j+½} − H̃_{j−½})^{n+1} = u_j^n − c (Ĥ_{j+½} − Ĥ_{j−½})^n
/// H_{j+½} = ½M(u_{j+1} + u_j) − ½α(u_{j+1} − u_j)
/// ```
///
/// with `c = Δt/Δx`, `(M, α) = (Â, α̂)` explicit and `(Ã, α̃)` implicit.
/// The implicit operator is factorized once at construction.
#[derive(Debug, Clone)]
pub struct ImexStepper {
    grid: Grid,
    params: SchemeParams,
    matrices: SplitMatrices,
    /// `None` when the implicit part vanishes (Ã = 0, α̃ = 0). Built for
    /// the scaled unknowns `D⁻¹x`, with `D` the power-of-two balancing of A.
    implicit: Option<PeriodicBlockTridiag>,
    scale: Vec<f64>,
}

impl ImexStepper {
    pub fn new(
        sp: &FluxSplitting,
        eps: f64,
        params: SchemeParams,
        grid: Grid,
    ) -> Result<Self, ImexError> {
        Self::from_matrices(sp.at(eps)?, params, grid)
    }

    pub fn from_matrices(
        matrices: SplitMatrices,
        params: SchemeParams,
        grid: Grid,
    ) -> Result<Self, ImexError> {
        params.validate()?;
        if (params.dx - grid.dx()).abs() > 1e-12 * grid.dx() {
            return Err(ImexError::GridMismatch {
                params_dx: params.dx,
                grid_dx: grid.dx(),
            });
        }
        let scale = balance(&matrices.a).scale;
        let implicit = if matrices.tilde.max_abs() == 0.0 && params.alpha_tilde == 0.0 {
            None
        } else {
            let tilde = matrices.tilde.similarity_diag(&scale);
            let (diag, lower, upper) = implicit_blocks(&tilde, &params);
            Some(PeriodicBlockTridiag::new(diag, lower, upper, grid.cells())?)
        };
        Ok(Self {
            grid,
            params,
            matrices,
            implicit,
            scale,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn matrices(&self) -> &SplitMatrices {
        &self.matrices
    }

    pub fn dim(&self) -> usize {
        self.matrices.a.dim()
    }

    /// The implicit operator acting on scaled unknowns `D⁻¹x`; see
    /// [`ImexStepper::solve_implicit`] for the unscaled solve.
    pub fn implicit_operator(&self) -> Option<&PeriodicBlockTridiag> {
        self.implicit.as_ref()
    }

    /// Diagonal scaling `D` used by the implicit solve.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Solves the implicit system for unscaled `rhs`.
    ///
    /// The operator maps constants to themselves, so the per-component mean
    /// is carried over exactly and only the fluctuation is solved for; the
    /// mean of the fluctuation solution is projected out. This keeps the
    /// update conservative to rounding even when stiff blocks amplify
    /// rounding errors between components.
    pub fn solve_implicit(&self, rhs: Vec<f64>) -> Result<Vec<f64>, ImexError> {
        let Some(op) = &self.implicit else {
            return Ok(rhs);
        };
        let d = self.dim();
        let means = component_means(&rhs, d);
        let mut y = rhs;
        for (i, v) in y.iter_mut().enumerate() {
            *v = (*v - means[i % d]) / self.scale[i % d];
        }
        let mut x = op.solve(&y)?;
        for (i, v) in x.iter_mut().enumerate() {
            *v *= self.scale[i % d];
        }
        let drift = component_means(&x, d);
        for (i, v) in x.iter_mut().enumerate() {
            *v = (*v - drift[i % d]) + means[i % d];
        }
        Ok(x)
    }

    /// `u^n − c(Ĥ_{j+½} − Ĥ_{j−½})`.
    pub fn explicit_rhs(&self, u: &GridField) -> Result<Vec<f64>, ImexError> {
        self.check_field(u)?;
        let d = self.dim();
        let jn = self.grid.cells();
        let c = self.params.ratio();
        let ah = 0.5 * self.params.alpha_hat;
        let x = u.values();
        // flux[j] = Ĥ_{j+½}
        let mut flux = vec![0.0; jn * d];
        let mut sum = vec![0.0; d];
        let mut diff = vec![0.0; d];
        for j in 0..jn {
            let l = &x[j * d..][..d];
            let r = &x[((j + 1) % jn) * d..][..d];
            for i in 0..d {
                sum[i] = 0.5 * (r[i] + l[i]);
                diff[i] = r[i] - l[i];
            }
            let f = self.matrices.hat.mul_vec(&sum);
            for i in 0..d {
                flux[j * d + i] = f[i] - ah * diff[i];
            }
        }
        let mut out = x.to_vec();
        for j in 0..jn {
            let jm = (j + jn - 1) % jn;
            for i in 0..d {
                out[j * d + i] -= c * (flux[j * d + i] - flux[jm * d + i]);
            }
        }
        Ok(out)
    }

    pub fn step(&self, u: &GridField) -> Result<GridField, ImexError> {
        let rhs = self.explicit_rhs(u)?;
        let next = self.solve_implicit(rhs)?;
        Ok(GridField::from_raw(self.grid, self.dim(), next))
    }

    /// `N = round(T/Δt)` steps, stopping early once `L2(t)/L2(0)` exceeds
    /// `blowup_threshold` or a non-finite value appears.
    pub fn run(
        &self,
        u0: &GridField,
        t_final: f64,
        blowup_threshold: f64,
    ) -> Result<RunResult, ImexError> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(ImexError::InvalidTime(t_final));
        }
        self.check_field(u0)?;
        let steps = (t_final / self.params.dt).round() as usize;
        let l0 = u0.l2_norm();
        let mut history = Vec::with_capacity(steps + 1);
        history.push(l0);
        let mut u = u0.clone();
        let mut blew_up = false;
        for _ in 0..steps {
            let next = self.step(&u)?;
            let l2 = next.l2_norm();
            history.push(l2);
            u = next;
            let growth = if l0 > 0.0 { l2 / l0 } else { 1.0 };
            if !l2.is_finite() || !u.is_finite() || growth > blowup_threshold {
                blew_up = true;
                break;
            }
        }
        let last = *history.last().expect("history holds the initial norm");
        let growth = if l0 > 0.0 { last / l0 } else { 1.0 };
        Ok(RunResult {
            steps_taken: history.len() - 1,
            steps_planned: steps,
            final_field: u,
            l2_history: history,
            growth,
            blew_up,
        })
    }

    fn check_field(&self, u: &GridField) -> Result<(), ImexError> {
        if *u.grid() != self.grid || u.dim() != self.dim() {
            return Err(ImexError::FieldShape {
                expected: self.grid.cells() * self.dim(),
                actual: u.values().len(),
            });
        }
        Ok(())
    }
}

fn component_means(x: &[f64], d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d];
    for cell in x.chunks(d) {
        m.iter_mut().zip(cell).for_each(|(a, v)| *a += v);
    }
    let n = (x.len() / d) as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// `(D, L, U)` of `I + c(½Ã(x_{j+1} − x_{j−1}) − ½α̃(x_{j+1} − 2x_j + x_{j−1}))`.
fn implicit_blocks(tilde: &MatR, p: &SchemeParams) -> (MatR, MatR, MatR) {
    let d = tilde.dim();
    let c = p.ratio();
    let at = p.alpha_tilde;
    let id = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let diag = MatR::from_fn(d, |i, j| id(i, j) * (1.0 + c * at));
    let upper = MatR::from_fn(d, |i, j| 0.5 * c * (tilde[(i, j)] - at * id(i, j)));
    let lower = MatR::from_fn(d, |i, j| 0.5 * c * (-tilde[(i, j)] - at * id(i, j)));
    (diag, lower, upper)
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_field: GridField,
    /// L2 norm after each step, starting with the initial one.
    pub l2_history: Vec<f64>,
    /// `L2(end)/L2(0)`, or 1 for zero initial data.
    pub growth: f64,
    pub blew_up: bool,
    pub steps_taken: usize,
    pub steps_planned: usize,
}

/// One step with a freshly factorized operator.
pub fn step(
    u: &GridField,
    sp: &FluxSplitting,
    eps: f64,
    p: &SchemeParams,
) -> Result<GridField, ImexError> {
    ImexStepper::new(sp, eps, *p, *u.grid())?.step(u)
}

pub fn run(
    u0: &GridField,
    sp: &FluxSplitting,
    eps: f64,
    p: &SchemeParams,
    t_final: f64,
    blowup_threshold: f64,
) -> Result<RunResult, ImexError> {
    ImexStepper::new(sp, eps, *p, *u0.grid())?.run(u0, t_final, blowup_threshold)
}
