use std::f64::consts::{PI, SQRT_2};

use crate::models::{FluxSplitting, SplitMatrices};
use crate::smallmat::eig_real;

use super::{scan_matrices, viscosity_from, ModeqError, SchemeParams, Verdict};

const BISECTION_RTOL: f64 = 1e-3;
const MAX_HALVINGS: usize = 60;

/// Closed-form sufficient CFL bounds for the prototype characteristic
/// splitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflBounds {
    /// `(α̂+α̃)/a`: stability of the slow wave.
    pub nu1: f64,
    /// Below this ε the fast waves are stable for any time step.
    pub phi: f64,
    pub psi: f64,
    /// `ν₁·ψ`.
    pub nu2: f64,
}

/// `φ(a) = √2 / (a + 2√2)`.
pub fn phi(a: f64) -> f64 {
    SQRT_2 / (a + 2.0 * SQRT_2)
}

pub fn cfl_bounds(
    a: f64,
    eps: f64,
    alpha_hat: f64,
    alpha_tilde: f64,
) -> Result<CflBounds, ModeqError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(ModeqError::InvalidParams {
            name: "a",
            value: a,
            reason: "advection speed must be positive",
        });
    }
    let nu1 = (alpha_hat + alpha_tilde) / a;
    let phi = phi(a);
    let psi = if eps <= phi {
        1.0
    } else {
        (a / (a + SQRT_2)).powi(2)
    };
    Ok(CflBounds {
        nu1,
        phi,
        psi,
        nu2: nu1 * psi,
    })
}

/// Closed-form real parts `(Re μ₀, Re μ₊, Re μ₋)` of the eigenvalues of
/// `𝒜ₖ` for the prototype characteristic splitting.
pub fn char_real_parts(a: f64, eps: f64, p: &SchemeParams, k: i64) -> (f64, f64, f64) {
    let c = 2.0 * PI * PI * (k as f64).powi(2);
    let visc = -c * p.dx * (p.alpha_hat + p.alpha_tilde);
    let mu0 = visc + c * p.dt * a * a;
    let common = -2.0 * c * p.dt / (eps * eps) + 4.0 * c * p.dt / eps + c * a * a * p.dt + visc;
    let split = 2.0 * SQRT_2 * a * c * p.dt;
    (mu0, common + split, common - split)
}

/// Real parts `2π²k²Δt(−(α̂+α̃)Δx/Δt + λ̂ᵢ² − λ̃ᵢ²)` for a commuting splitting.
pub fn commuting_real_parts(
    lambda_hat: &[f64],
    lambda_tilde: &[f64],
    p: &SchemeParams,
    k: i64,
) -> Vec<f64> {
    let c = 2.0 * PI * PI * (k as f64).powi(2) * p.dt;
    let visc = (p.alpha_hat + p.alpha_tilde) * p.dx / p.dt;
    lambda_hat
        .iter()
        .zip(lambda_tilde)
        .map(|(h, t)| c * (-visc + h * h - t * t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaHat {
    /// `max |eig Â(ε)|`.
    MaxEig,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaTilde {
    Zero,
    /// `√2(1−ε)/ε`, the stiff wave speed of the prototype.
    PrototypeStiff,
    /// `max |eig Ã(ε)|`.
    StiffEig,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRule {
    pub hat: AlphaHat,
    pub tilde: AlphaTilde,
}

impl Default for AlphaRule {
    fn default() -> Self {
        Self {
            hat: AlphaHat::MaxEig,
            tilde: AlphaTilde::Zero,
        }
    }
}

/// `(α̂, α̃)` for a splitting evaluated at one ε.
pub fn resolve_alpha(rule: &AlphaRule, m: &SplitMatrices) -> Result<(f64, f64), ModeqError> {
    let hat = match rule.hat {
        AlphaHat::MaxEig => eig_real(&m.hat)?.max_abs(),
        AlphaHat::Fixed(v) => v,
    };
    let tilde = match rule.tilde {
        AlphaTilde::Zero => 0.0,
        AlphaTilde::PrototypeStiff => SQRT_2 * (1.0 - m.eps) / m.eps,
        AlphaTilde::StiffEig => eig_real(&m.tilde)?.max_abs(),
        AlphaTilde::Fixed(v) => v,
    };
    Ok((hat, tilde))
}

/// Largest advective CFL number `ν̂ = aΔt/Δx` in `(0, nu_hi]` for which the
/// scan over `k = 1..=k_max` is stable, to relative accuracy 1e-3.
///
/// `nu_hi` defaults to `4ν₁`. Returns `nu_hi` if that is already stable and
/// 0 if no probe down to `nu_hi·2⁻⁶⁰` is.
pub fn max_stable_ratio(
    sp: &FluxSplitting,
    eps: f64,
    dx: f64,
    rule: &AlphaRule,
    nu_hi: Option<f64>,
    k_max: i64,
) -> Result<f64, ModeqError> {
    if k_max < 1 {
        return Err(ModeqError::EmptyScan);
    }
    let m = sp.at(eps)?;
    let (alpha_hat, alpha_tilde) = resolve_alpha(rule, &m)?;
    let a = sp.system().advective_speed();
    let nu_hi = nu_hi.unwrap_or(4.0 * (alpha_hat + alpha_tilde) / a);
    if !(nu_hi > 0.0 && nu_hi.is_finite()) {
        return Err(ModeqError::InvalidParams {
            name: "nu_hi",
            value: nu_hi,
            reason: "upper bracket must be positive",
        });
    }
    let stable = |nu: f64| -> Result<bool, ModeqError> {
        let p = SchemeParams::new(dx, nu * dx / a, alpha_hat, alpha_tilde)?;
        let b = viscosity_from(&m, &p);
        Ok(scan_matrices(&m.a, &b, k_max, sp.kind())?.verdict == Verdict::Stable)
    };
    if stable(nu_hi)? {
        return Ok(nu_hi);
    }
    let mut lo = nu_hi;
    let mut found = false;
    for _ in 0..MAX_HALVINGS {
        lo *= 0.5;
        if stable(lo)? {
            found = true;
            break;
        }
    }
    if !found {
        return Ok(0.0);
    }
    let mut hi = 2.0 * lo;
    while hi - lo > BISECTION_RTOL * lo {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{prototype_characteristic_splitting, prototype_noncommuting_splitting};
    use crate::modeq::frequency_matrix;
    use crate::smallmat::eig;
    use proptest::prelude::*;

    #[test]
    fn bound_examples() {
        let b = cfl_bounds(2.0, 0.9, 2.0 + SQRT_2, 0.0).unwrap();
        assert!((b.phi - 0.292_893_218_813_452_5).abs() < 1e-12);
        assert!((b.nu1 - 1.707_106_781_186_547_5).abs() < 1e-12);
        assert!((b.psi - 0.343_145_750_507_619_8).abs() < 1e-12);
        assert!((b.nu2 - 0.585_786_437_626_905).abs() < 1e-12);
        assert_eq!(cfl_bounds(2.0, 0.1, 1.0, 0.0).unwrap().psi, 1.0);
        assert!(cfl_bounds(0.0, 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn fast_bracket_vanishes_at_phi() {
        for a in [0.5, 1.0, 2.0, 4.0] {
            let e = phi(a);
            let bracket = -2.0 / (e * e) + 4.0 / e + a * a + 2.0 * SQRT_2 * a;
            assert!(bracket.abs() < 1e-12 * (2.0 / (e * e)), "a={a}: {bracket}");
        }
    }

    #[test]
    fn slow_part_vanishes_at_nu1() {
        let a = 2.0;
        let alpha = a + SQRT_2;
        let dx = 1e-2;
        let p = SchemeParams::new(dx, (alpha / a) * dx / a, alpha, 0.0).unwrap();
        let (mu0, _, _) = char_real_parts(a, 0.1, &p, 3);
        assert!(mu0.abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_numeric_example() {
        let (a, eps) = (2.0, 0.1);
        let sp = prototype_characteristic_splitting(a).unwrap();
        let p = SchemeParams::new(1e-2, 7.5e-4, 2.0 + SQRT_2, 0.0).unwrap();
        let m = sp.at(eps).unwrap();
        let b = viscosity_from(&m, &p);
        let s = eig(&frequency_matrix(&m.a, &b, 1)).unwrap();
        let (m0, mp, mm) = char_real_parts(a, eps, &p, 1);
        let mut closed = [m0, mp, mm];
        closed.sort_by(f64::total_cmp);
        for (x, y) in s.real_parts().iter().zip(closed) {
            assert!((x - y).abs() <= 1e-9 * y.abs(), "{x} vs {y}");
        }
        let generic = commuting_real_parts(
            &m.char_data.as_ref().unwrap().lambda_hat,
            &m.char_data.as_ref().unwrap().lambda_tilde,
            &p,
            1,
        );
        let mut generic = generic;
        generic.sort_by(f64::total_cmp);
        for (x, y) in generic.iter().zip(closed) {
            assert!((x - y).abs() <= 1e-9 * y.abs());
        }
    }

    #[test]
    fn bisection_meets_a_priori_bounds() {
        let a = 2.0;
        let sp = prototype_characteristic_splitting(a).unwrap();
        let rule = AlphaRule {
            hat: AlphaHat::Fixed(a + SQRT_2),
            tilde: AlphaTilde::Zero,
        };
        for eps in [0.05, 0.9] {
            let nu = max_stable_ratio(&sp, eps, 1e-2, &rule, None, 64).unwrap();
            let b = cfl_bounds(a, eps, a + SQRT_2, 0.0).unwrap();
            assert!(nu >= b.nu2 * (1.0 - 1e-3), "eps={eps}: {nu} < {}", b.nu2);
            assert!(nu.is_finite() && nu < 4.0 * b.nu1);
        }
    }

    #[test]
    fn noncommuting_ratio_roughly_halves_with_eps() {
        let sp = prototype_noncommuting_splitting(2.0).unwrap();
        let rule = AlphaRule::default();
        let n1 = max_stable_ratio(&sp, 1e-2, 5e-3, &rule, None, 8).unwrap();
        let n2 = max_stable_ratio(&sp, 5e-3, 5e-3, &rule, None, 8).unwrap();
        let r = n1 / n2;
        assert!((1.5..=2.6).contains(&r), "ratio {r}");
    }

    #[test]
    fn alpha_rules() {
        let sp = prototype_characteristic_splitting(2.0).unwrap();
        let m = sp.at(0.1).unwrap();
        let (h, t) = resolve_alpha(&AlphaRule::default(), &m).unwrap();
        assert!((h - (2.0 + SQRT_2)).abs() < 1e-9);
        assert_eq!(t, 0.0);
        let stiff = AlphaRule {
            hat: AlphaHat::MaxEig,
            tilde: AlphaTilde::StiffEig,
        };
        let proto = AlphaRule {
            hat: AlphaHat::MaxEig,
            tilde: AlphaTilde::PrototypeStiff,
        };
        let (_, t1) = resolve_alpha(&stiff, &m).unwrap();
        let (_, t2) = resolve_alpha(&proto, &m).unwrap();
        assert!((t1 - t2).abs() < 1e-9 * t2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// ν̂ below ν₂ is always stable for the prototype characteristic splitting.
        #[test]
        fn below_nu2_is_stable(
            a in 0.3f64..5.0,
            log_eps in -6.0f64..0.0,
            frac in 0.05f64..0.98,
            tilde_on in any::<bool>(),
        ) {
            let eps = 10f64.powf(log_eps);
            let sp = prototype_characteristic_splitting(a).unwrap();
            let at = if tilde_on { SQRT_2 * (1.0 - eps) / eps } else { 0.0 };
            let b = cfl_bounds(a, eps, a + SQRT_2, at).unwrap();
            let dx = 1e-2;
            let p = SchemeParams::new(dx, frac * b.nu2 * dx / a, a + SQRT_2, at).unwrap();
            let r = crate::modeq::stability_scan(&sp, eps, &p, 8).unwrap();
            prop_assert_eq!(r.verdict, Verdict::Stable);
        }

        /// Δt/Δx < (α̂+α̃)/max λ̂² is sufficient for any characteristic splitting.
        #[test]
        fn explicit_part_condition_is_sufficient(
            a in 0.3f64..5.0,
            log_eps in -6.0f64..0.0,
            frac in 0.05f64..0.98,
        ) {
            let eps = 10f64.powf(log_eps);
            let sp = prototype_characteristic_splitting(a).unwrap();
            let alpha = a + SQRT_2;
            let lam2 = (a + SQRT_2).powi(2);
            let dx = 1e-2;
            let p = SchemeParams::new(dx, frac * alpha / lam2 * dx, alpha, 0.0).unwrap();
            let r = crate::modeq::stability_scan(&sp, eps, &p, 8).unwrap();
            prop_assert_eq!(r.verdict, Verdict::Stable);
        }
    }
}
