use std::f64::consts::SQRT_2;
use std::sync::Arc;

use crate::smallmat::MatR;

use super::characteristic::ResolvedRule;
use super::{
    generic_characteristic_splitting, Construction, EpsDomain, FluxSplitting, HatRule, ModelError,
    SplittingKind, SystemSpec,
};

/// Ratio of specific heats for the linearized Euler system.
pub const EULER_GAMMA: f64 = 1.4;
/// Constant pressure used to split the linearized Euler flux.
pub const EULER_REFERENCE_PRESSURE: f64 = 0.2;

const NAMES: [&str; 4] = [
    "prototype",
    "prototype-noncommuting",
    "euler-paper",
    "euler-characteristic",
];

pub fn catalog_names() -> &'static [&'static str] {
    &NAMES
}

/// Looks up a cataloged splitting. `a` is the advection speed of the
/// prototype family and is ignored for the Euler splittings.
pub fn splitting_by_name(name: &str, a: f64) -> Result<FluxSplitting, ModelError> {
    match name {
        "prototype" => prototype_characteristic_splitting(a),
        "prototype-noncommuting" => prototype_noncommuting_splitting(a),
        "euler-paper" => Ok(euler_paper_splitting()),
        "euler-characteristic" => euler_characteristic_splitting(),
        other => Err(ModelError::UnknownSplitting(other.to_string())),
    }
}

/// `A(ε) = [[a,1,0],[1/ε²,a,1/ε²],[0,1,a]]` with eigenvalues `a`, `a ± √2/ε`.
pub fn prototype_system(a: f64) -> Result<SystemSpec, ModelError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(ModelError::InvalidParameter {
            name: "a",
            value: a,
            reason: "advection speed must be positive",
        });
    }
    Ok(SystemSpec::new(
        "prototype",
        3,
        vec![("a", a)],
        a,
        move |eps| {
            let e2 = 1.0 / (eps * eps);
            MatR::from_rows(&[[a, 1.0, 0.0], [e2, a, e2], [0.0, 1.0, a]])
        },
    ))
}

/// Characteristic splitting with `Λ̂ = Λ(1) = diag(a−√2, a, a+√2)`.
pub fn prototype_characteristic_splitting(a: f64) -> Result<FluxSplitting, ModelError> {
    let system = prototype_system(a)?;
    let hat =
        move |eps: f64| MatR::from_rows(&[[a, eps, 0.0], [1.0 / eps, a, 1.0 / eps], [0.0, eps, a]]);
    let tilde = |eps: f64| {
        let s = 1.0 - eps;
        let t = s / (eps * eps);
        MatR::from_rows(&[[0.0, s, 0.0], [t, 0.0, t], [0.0, s, 0.0]])
    };
    Ok(FluxSplitting::new(
        "prototype",
        system,
        SplittingKind::Characteristic,
        EpsDomain::UNIT,
        Construction::ClosedForm {
            hat: Arc::new(hat),
            tilde: Arc::new(tilde),
            char_rule: Some(ResolvedRule::Fixed(vec![a - SQRT_2, a, a + SQRT_2])),
        },
    ))
}

/// A splitting of the prototype whose parts do not commute. `Ã` is only
/// hyperbolic for ε < 1.
pub fn prototype_noncommuting_splitting(a: f64) -> Result<FluxSplitting, ModelError> {
    let system = prototype_system(a)?;
    let domain = EpsDomain {
        upper: 1.0,
        upper_inclusive: false,
    };
    Ok(FluxSplitting::from_fns(
        "prototype-noncommuting",
        system,
        domain,
        move |eps| {
            let s = 1.0 - eps;
            MatR::from_rows(&[[a, s, 0.0], [1.0, a, 1.0], [0.0, s, a]])
        },
        |eps| {
            let t = (1.0 - eps * eps) / (eps * eps);
            MatR::from_rows(&[[0.0, eps, 0.0], [t, 0.0, t], [0.0, eps, 0.0]])
        },
    ))
}

/// Low-Mach scaled Euler equations linearized with
/// γ = 1.4; eigenvalues `1` and `1 ± √(0.56(1−ε²/2))/ε`.
pub fn euler_linearized_system() -> SystemSpec {
    let g = EULER_GAMMA;
    SystemSpec::new("euler", 3, vec![("gamma", g)], 1.0, move |eps| {
        let e2 = eps * eps;
        MatR::from_rows(&[
            [0.0, 1.0, 0.0],
            [-1.5 + 0.5 * g, 3.0 - g, (g - 1.0) / e2],
            [g * e2 - e2 - g, g - 1.5 * g * e2 + 1.5 * e2, g],
        ])
    })
}

/// Splitting obtained by freezing the pressure at its reference value in
/// the nonstiff part.
pub fn euler_paper_splitting() -> FluxSplitting {
    FluxSplitting::from_fns(
        "euler-paper",
        euler_linearized_system(),
        EpsDomain::UNIT,
        |eps| {
            let e2 = eps * eps;
            let e4 = e2 * e2;
            MatR::from_rows(&[
                [0.0, 5.0, 0.0],
                [-5.0 + e2, 10.0 - 2.0 * e2, 2.0],
                [-6.0 - e2 + 2.0 * e4, 6.0 + e2 - 3.0 * e4, 5.0 + 2.0 * e2],
            ])
            .scale(0.2)
        },
        |eps| {
            let e2 = eps * eps;
            let e4 = e2 * e2;
            MatR::from_rows(&[
                [0.0, 0.0, 0.0],
                [1.0 - e2, -2.0 + 2.0 * e2, -2.0 * (e2 - 1.0) / e2],
                [
                    -1.0 + 3.0 * e2 - 2.0 * e4,
                    1.0 - 4.0 * e2 + 3.0 * e4,
                    2.0 - 2.0 * e2,
                ],
            ])
            .scale(0.2)
        },
    )
}

/// Characteristic splitting of the Euler system with `Λ̂ = Λ(1)`.
pub fn euler_characteristic_splitting() -> Result<FluxSplitting, ModelError> {
    let sp = generic_characteristic_splitting(&euler_linearized_system(), HatRule::FrozenAt(1.0))?;
    Ok(sp.renamed("euler-characteristic"))
}
