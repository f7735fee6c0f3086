//! Modified-equation stability analysis of the IMEX scheme.
//!
//! The scheme is consistent to second order with `w_t + A w_x = B w_xx`.
//! Fourier mode `k` then evolves under `𝒜ₖ = −i2πkA − 4π²k²B`, and the
//! scheme is stable when every eigenvalue of every `𝒜ₖ` (k ≠ 0) has negative
//! real part.

mod cfl;
mod symbol;

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::models::{CharData, FluxSplitting, ModelError, SplitMatrices, SplittingKind};
use crate::smallmat::{eig, MatC, MatError, MatR, Spectrum};

pub use cfl::{
    cfl_bounds, char_real_parts, commuting_real_parts, max_stable_ratio, phi, resolve_alpha,
    AlphaHat, AlphaRule, AlphaTilde, CflBounds,
};
pub use symbol::{discrete_symbol, symbol_from_matrices};

/// Wave numbers used to confirm that the stability sign of a characteristic
/// splitting does not depend on k.
pub const K_INDEPENDENCE_PROBES: [i64; 3] = [1, 2, 7];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModeqError {
    #[error("invalid scheme parameter {name} = {value}: {reason}")]
    InvalidParams {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("k_max must be at least 1")]
    EmptyScan,
    #[error("implicit factor I + cS̃(θ) is singular at θ = {theta}")]
    SingularImplicit { theta: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Mesh width, time step and the two numerical viscosities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub dx: f64,
    pub dt: f64,
    pub alpha_hat: f64,
    pub alpha_tilde: f64,
}

impl SchemeParams {
    pub fn new(dx: f64, dt: f64, alpha_hat: f64, alpha_tilde: f64) -> Result<Self, ModeqError> {
        let p = Self {
            dx,
            dt,
            alpha_hat,
            alpha_tilde,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModeqError> {
        let positive = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ModeqError::InvalidParams {
                    name,
                    value,
                    reason: "must be positive and finite",
                })
            }
        };
        let nonneg = |name, value: f64| {
            if value >= 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ModeqError::InvalidParams {
                    name,
                    value,
                    reason: "must be non-negative and finite",
                })
            }
        };
        positive("dx", self.dx)?;
        positive("dt", self.dt)?;
        nonneg("alpha_hat", self.alpha_hat)?;
        nonneg("alpha_tilde", self.alpha_tilde)
    }

    /// `Δt/Δx`.
    pub fn ratio(&self) -> f64 {
        self.dt / self.dx
    }

    /// Advective CFL number `a·Δt/Δx`.
    pub fn nu_hat(&self, a: f64) -> f64 {
        a * self.dt / self.dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl Verdict {
    /// Strictly negative real parts are required; a band of
    /// `1e-12·(1 + |max Re|)` around zero is reported as marginal.
    pub fn classify(max_real: f64) -> Verdict {
        let tol = 1e-12 * (1.0 + max_real.abs());
        if max_real < -tol {
            Verdict::Stable
        } else if max_real.abs() <= tol {
            Verdict::Marginal
        } else {
            Verdict::Unstable
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub k_list: Vec<i64>,
    pub spectra: Vec<Spectrum>,
    pub max_real_overall: f64,
    pub verdict: Verdict,
    pub witness_k: i64,
    /// For characteristic splittings: whether the verdict on k = 1, 2, 7
    /// agrees. `None` for general splittings.
    pub k_independent: Option<bool>,
}

/// `B = (Δt/2)·[((α̂+α̃)Δx/Δt)·I − (Â−Ã)·A]`.
pub fn viscosity_matrix(
    sp: &FluxSplitting,
    eps: f64,
    p: &SchemeParams,
) -> Result<MatR, ModeqError> {
    p.validate()?;
    Ok(viscosity_from(&sp.at(eps)?, p))
}

pub fn viscosity_from(m: &SplitMatrices, p: &SchemeParams) -> MatR {
    let d = m.a.dim();
    let diff = &m.hat - &m.tilde;
    let prod = &diff * &m.a;
    let c = (p.alpha_hat + p.alpha_tilde) * p.dx / p.dt;
    MatR::from_fn(d, |i, j| {
        let id = if i == j { c } else { 0.0 };
        0.5 * p.dt * (id - prod[(i, j)])
    })
}

/// `𝒜ₖ = −i2πk·A − 4π²k²·B`.
pub fn frequency_matrix(a: &MatR, b: &MatR, k: i64) -> MatC {
    let kf = k as f64;
    let im = -2.0 * PI * kf;
    let re = -4.0 * PI * PI * kf * kf;
    MatC::from_fn(a.dim(), |i, j| {
        Complex64::new(re * b[(i, j)], im * a[(i, j)])
    })
}

/// Spectra of `𝒜ₖ` for `k = 1..=k_max`.
pub fn stability_scan(
    sp: &FluxSplitting,
    eps: f64,
    p: &SchemeParams,
    k_max: i64,
) -> Result<StabilityReport, ModeqError> {
    if k_max < 1 {
        return Err(ModeqError::EmptyScan);
    }
    p.validate()?;
    let m = sp.at(eps)?;
    let b = viscosity_from(&m, p);
    scan_matrices(&m.a, &b, k_max, sp.kind())
}

pub(crate) fn scan_matrices(
    a: &MatR,
    b: &MatR,
    k_max: i64,
    kind: SplittingKind,
) -> Result<StabilityReport, ModeqError> {
    let k_list: Vec<i64> = (1..=k_max).collect();
    let spectra = k_list
        .iter()
        .map(|&k| eig(&frequency_matrix(a, b, k)))
        .collect::<Result<Vec<_>, _>>()?;
    let (witness_k, max_real_overall) = k_list
        .iter()
        .zip(&spectra)
        .map(|(&k, s)| (k, s.max_real))
        .fold((k_list[0], f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    let k_independent = match kind {
        SplittingKind::Characteristic => {
            let verdicts = K_INDEPENDENCE_PROBES
                .iter()
                .map(|&k| {
                    let s = if k <= k_max {
                        spectra[(k - 1) as usize].clone()
                    } else {
                        eig(&frequency_matrix(a, b, k))?
                    };
                    Ok(Verdict::classify(s.max_real))
                })
                .collect::<Result<Vec<_>, ModeqError>>()?;
            Some(verdicts.windows(2).all(|w| w[0] == w[1]))
        }
        SplittingKind::General => None,
    };
    Ok(StabilityReport {
        k_list,
        spectra,
        max_real_overall,
        verdict: Verdict::classify(max_real_overall),
        witness_k,
        k_independent,
    })
}

/// Closed-form real parts for any characteristic splitting, in the order of
/// `data.lambda`.
pub fn closed_form_real_parts(data: &CharData, p: &SchemeParams, k: i64) -> Vec<f64> {
    commuting_real_parts(&data.lambda_hat, &data.lambda_tilde, p, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        euler_paper_splitting, prototype_characteristic_splitting,
        prototype_noncommuting_splitting, EpsDomain, SystemSpec,
    };
    use std::f64::consts::SQRT_2;

    fn scalar_upwind(a: f64) -> FluxSplitting {
        let sys = SystemSpec::new("scalar", 1, vec![("a", a)], a, move |_| MatR::diag(&[a]));
        FluxSplitting::from_fns(
            "upwind",
            sys,
            EpsDomain::UNIT,
            move |_| MatR::diag(&[a]),
            |_| MatR::zeros(1),
        )
    }

    #[test]
    fn scalar_viscosity_is_upwind() {
        let a = 1.5;
        let p = SchemeParams::new(0.1, 0.03, a, 0.0).unwrap();
        let b = viscosity_matrix(&scalar_upwind(a), 1.0, &p).unwrap();
        let expected = 0.5 * a * (p.dx - a * p.dt);
        assert!((b[(0, 0)] - expected).abs() < 1e-15);
    }

    #[test]
    fn equal_parts_without_viscosity_give_zero_b() {
        let sys = SystemSpec::new("s", 2, vec![], 1.0, |_| {
            MatR::from_rows(&[[2.0, 1.0], [1.0, 2.0]])
        });
        let half = |_| MatR::from_rows(&[[1.0, 0.5], [0.5, 1.0]]);
        let sp = FluxSplitting::from_fns("half", sys, EpsDomain::UNIT, half, half);
        let p = SchemeParams::new(0.1, 0.01, 0.0, 0.0).unwrap();
        assert_eq!(viscosity_matrix(&sp, 1.0, &p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn commuting_viscosity_is_diagonal_in_characteristic_basis() {
        let sp = prototype_characteristic_splitting(2.0).unwrap();
        let p = SchemeParams::new(1e-2, 4e-3, 2.0 + SQRT_2, 0.3).unwrap();
        for eps in [1.0, 0.3, 0.05] {
            let m = sp.at(eps).unwrap();
            let b = viscosity_from(&m, &p);
            let data = m.char_data.as_ref().unwrap();
            let diag = &(&data.q_inv * &b) * &data.q;
            for i in 0..3 {
                let expected = 0.5
                    * p.dt
                    * ((p.alpha_hat + p.alpha_tilde) * p.dx / p.dt - data.lambda_hat[i].powi(2)
                        + data.lambda_tilde[i].powi(2));
                assert!((diag[(i, i)] - expected).abs() <= 1e-10 * expected.abs().max(1e-3));
                for j in 0..3 {
                    if i != j {
                        assert!(diag[(i, j)].abs() <= 1e-10 * b.norm_inf());
                    }
                }
            }
        }
    }

    #[test]
    fn frequency_matrix_examples() {
        let a = MatR::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let b = MatR::from_rows(&[[0.5, 0.0], [0.1, 0.2]]);
        assert_eq!(frequency_matrix(&a, &b, 0).max_abs(), 0.0);
        let fp = frequency_matrix(&a, &b, 3);
        let fm = frequency_matrix(&a, &b, -3);
        assert_eq!(fp.map(|z| z.conj()), fm);
        let s = frequency_matrix(&MatR::diag(&[2.0]), &MatR::diag(&[0.25]), 1);
        let expected = Complex64::new(-4.0 * PI * PI * 0.25, -2.0 * PI * 2.0);
        assert!((s[(0, 0)] - expected).norm() < 1e-14);
    }

    #[test]
    fn prototype_scan_examples() {
        let a = 2.0;
        let sp = prototype_characteristic_splitting(a).unwrap();
        let dx = 1e-2;
        let alpha = a + SQRT_2;
        let stable = SchemeParams::new(dx, 1.0 * dx / a, alpha, 0.0).unwrap();
        let r = stability_scan(&sp, 0.05, &stable, 16).unwrap();
        assert_eq!(r.verdict, Verdict::Stable);
        assert_eq!(r.k_independent, Some(true));

        let unstable = SchemeParams::new(dx, 2.0 * dx / a, alpha, 0.0).unwrap();
        let r = stability_scan(&sp, 0.05, &unstable, 16).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        assert_eq!(r.k_independent, Some(true));
        // the unstable branch is the slow one, μ₀, whose eigenvalue has
        // imaginary part −2πk·a
        let s = &r.spectra[(r.witness_k - 1) as usize];
        let top = s
            .values
            .iter()
            .max_by(|x, y| x.re.total_cmp(&y.re))
            .unwrap();
        let k = r.witness_k as f64;
        assert!((top.im + 2.0 * PI * k * a).abs() < 1e-8 * (2.0 * PI * k * a));
        let (mu0, _, _) = char_real_parts(a, 0.05, &unstable, r.witness_k);
        assert!(mu0 > 0.0);
    }

    #[test]
    fn noncommuting_scan_is_unstable_at_small_eps() {
        let sp = prototype_noncommuting_splitting(2.0).unwrap();
        let m = sp.at(1e-3).unwrap();
        let alpha = crate::smallmat::eig_real(&m.hat).unwrap().max_abs();
        let p = SchemeParams::new(5e-4, 1e-3, alpha, 0.0).unwrap();
        let r = stability_scan(&sp, 1e-3, &p, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        assert_eq!(r.k_independent, None);
    }

    #[test]
    fn k_zero_never_scanned_and_conjugacy() {
        let sp = euler_paper_splitting();
        let p = SchemeParams::new(5e-3, 5e-4, 1.6, 0.0).unwrap();
        let r = stability_scan(&sp, 1e-2, &p, 5).unwrap();
        assert!(!r.k_list.contains(&0));
        let m = sp.at(1e-2).unwrap();
        let b = viscosity_from(&m, &p);
        for k in 1..=5 {
            let sp_pos = eig(&frequency_matrix(&m.a, &b, k)).unwrap();
            let sp_neg = eig(&frequency_matrix(&m.a, &b, -k)).unwrap();
            let mut conj: Vec<Complex64> = sp_pos.values.iter().map(|z| z.conj()).collect();
            conj.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
            for (x, y) in conj.iter().zip(&sp_neg.values) {
                assert!((x - y).norm() <= 1e-9 * sp_pos.max_abs());
            }
        }
    }

    #[test]
    fn params_are_validated() {
        assert!(SchemeParams::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(SchemeParams::new(1.0, f64::NAN, 1.0, 0.0).is_err());
        assert!(SchemeParams::new(1.0, 1.0, -1.0, 0.0).is_err());
        let sp = prototype_characteristic_splitting(1.0).unwrap();
        let p = SchemeParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            stability_scan(&sp, 0.5, &p, 0),
            Err(ModeqError::EmptyScan)
        ));
    }

    #[test]
    fn verdict_bands() {
        assert_eq!(Verdict::classify(-1e-3), Verdict::Stable);
        assert_eq!(Verdict::classify(0.0), Verdict::Marginal);
        assert_eq!(Verdict::classify(5e-13), Verdict::Marginal);
        assert_eq!(Verdict::classify(1e-6), Verdict::Unstable);
    }
}
