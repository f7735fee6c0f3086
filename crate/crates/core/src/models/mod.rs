//! Linear hyperbolic systems `u_t + A(ε) u_x = 0` and their flux splittings
//! `A = Â + Ã` into a nonstiff (explicit) and a stiff (implicit) part.

mod admissible;
mod catalog;
mod characteristic;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::smallmat::{MatError, MatR};

pub use admissible::{check_admissible, is_hyperbolic, AdmissibilityReport};
pub use catalog::{
    catalog_names, euler_characteristic_splitting, euler_linearized_system, euler_paper_splitting,
    prototype_characteristic_splitting, prototype_noncommuting_splitting, prototype_system,
    splitting_by_name, EULER_GAMMA, EULER_REFERENCE_PRESSURE,
};
pub use characteristic::{generic_characteristic_splitting, CharDecomposition, HatFn, HatRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("ε = {eps} is outside the domain of splitting `{splitting}`")]
    EpsOutOfDomain { eps: f64, splitting: String },
    #[error("A(ε) is not diagonalizable with real eigenvalues at ε = {eps}")]
    NotDiagonalizable { eps: f64 },
    #[error("nonstiff eigenvalues grow without bound: sup {sup} vs reference {reference}")]
    UnboundedHat { sup: f64, reference: f64 },
    #[error("hat rule returned {got} eigenvalues for a system of dimension {dim}")]
    HatRuleDimension { got: usize, dim: usize },
    #[error("unknown splitting `{0}`; available: prototype, prototype-noncommuting, euler-paper, euler-characteristic")]
    UnknownSplitting(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}

pub(crate) type MatFn = Arc<dyn Fn(f64) -> MatR + Send + Sync>;

/// A parametrized family ε ↦ A(ε) of d×d flux matrices.
#[derive(Clone)]
pub struct SystemSpec {
    name: String,
    dim: usize,
    params: Vec<(&'static str, f64)>,
    advective_speed: f64,
    build: MatFn,
}

impl SystemSpec {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        params: Vec<(&'static str, f64)>,
        advective_speed: f64,
        build: impl Fn(f64) -> MatR + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            params,
            advective_speed,
            build: Arc::new(build),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[(&'static str, f64)] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, v)| v)
    }

    /// Speed of the slow wave; the advective CFL number is
    /// `advective_speed · Δt / Δx`.
    pub fn advective_speed(&self) -> f64 {
        self.advective_speed
    }

    pub fn matrix(&self, eps: f64) -> Result<MatR, ModelError> {
        check_eps_positive(eps)?;
        Ok((self.build)(eps))
    }

    pub fn decompose(&self, eps: f64) -> Result<CharDecomposition, ModelError> {
        CharDecomposition::new(&self.matrix(eps)?, eps)
    }

    /// Index (in ascending eigenvalue order) of the slow characteristic field.
    pub fn slow_index(&self, lambda: &[f64]) -> usize {
        lambda
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - self.advective_speed)
                    .abs()
                    .total_cmp(&(b.1 - self.advective_speed).abs())
            })
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplittingKind {
    /// `Â = QΛ̂Q⁻¹`, `Ã = QΛ̃Q⁻¹`; the two parts commute.
    Characteristic,
    General,
}

/// Upper end of the admissible ε range; the lower end is always 0 (open).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsDomain {
    pub upper: f64,
    pub upper_inclusive: bool,
}

impl EpsDomain {
    pub const UNIT: EpsDomain = EpsDomain {
        upper: 1.0,
        upper_inclusive: true,
    };

    pub fn contains(&self, eps: f64) -> bool {
        eps > 0.0
            && eps.is_finite()
            && if self.upper_inclusive {
                eps <= self.upper
            } else {
                eps < self.upper
            }
    }
}

#[derive(Clone)]
pub(crate) enum Construction {
    ClosedForm {
        hat: MatFn,
        tilde: MatFn,
        /// Present for closed-form splittings that are characteristic.
        char_rule: Option<characteristic::ResolvedRule>,
    },
    Characteristic(characteristic::ResolvedRule),
}

/// Eigen-data of a characteristic splitting at one ε.
#[derive(Debug, Clone)]
pub struct CharData {
    pub q: MatR,
    pub q_inv: MatR,
    pub lambda: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    pub lambda_tilde: Vec<f64>,
}

/// A splitting evaluated at one ε.
#[derive(Debug, Clone)]
pub struct SplitMatrices {
    pub eps: f64,
    pub a: MatR,
    pub hat: MatR,
    pub tilde: MatR,
    pub char_data: Option<CharData>,
}

/// The pair (Â, Ã) with Â + Ã = A, as functions of ε.
#[derive(Clone)]
pub struct FluxSplitting {
    name: String,
    system: SystemSpec,
    kind: SplittingKind,
    domain: EpsDomain,
    construction: Construction,
}

impl FluxSplitting {
    pub(crate) fn new(
        name: impl Into<String>,
        system: SystemSpec,
        kind: SplittingKind,
        domain: EpsDomain,
        construction: Construction,
    ) -> Self {
        Self {
            name: name.into(),
            system,
            kind,
            domain,
            construction,
        }
    }

    /// A general (non-characteristic) splitting from explicit matrix
    /// builders.
    pub fn from_fns(
        name: impl Into<String>,
        system: SystemSpec,
        domain: EpsDomain,
        hat: impl Fn(f64) -> MatR + Send + Sync + 'static,
        tilde: impl Fn(f64) -> MatR + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            name,
            system,
            SplittingKind::General,
            domain,
            Construction::ClosedForm {
                hat: Arc::new(hat),
                tilde: Arc::new(tilde),
                char_rule: None,
            },
        )
    }

    pub(crate) fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn kind(&self) -> SplittingKind {
        self.kind
    }

    pub fn domain(&self) -> EpsDomain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// Evaluates the splitting, rejecting ε outside its domain.
    pub fn at(&self, eps: f64) -> Result<SplitMatrices, ModelError> {
        if !self.domain.contains(eps) {
            return Err(ModelError::EpsOutOfDomain {
                eps,
                splitting: self.name.clone(),
            });
        }
        self.at_unchecked(eps)
    }

    /// Evaluates the splitting at any ε > 0, even outside the admissible
    /// domain (used by the admissibility checker).
    pub fn at_unchecked(&self, eps: f64) -> Result<SplitMatrices, ModelError> {
        let a = self.system.matrix(eps)?;
        match &self.construction {
            Construction::ClosedForm {
                hat,
                tilde,
                char_rule,
            } => {
                let char_data = match char_rule {
                    Some(rule) => {
                        let dec = CharDecomposition::new(&a, eps)?;
                        Some(dec.char_data(rule)?)
                    }
                    None => None,
                };
                Ok(SplitMatrices {
                    eps,
                    hat: hat(eps),
                    tilde: tilde(eps),
                    a,
                    char_data,
                })
            }
            Construction::Characteristic(rule) => {
                let dec = CharDecomposition::new(&a, eps)?;
                let data = dec.char_data(rule)?;
                let hat = dec.compose(&data.lambda_hat);
                let tilde = dec.compose(&data.lambda_tilde);
                Ok(SplitMatrices {
                    eps,
                    a,
                    hat,
                    tilde,
                    char_data: Some(data),
                })
            }
        }
    }
}

impl fmt::Debug for FluxSplitting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FluxSplitting")
            .field("name", &self.name)
            .field("system", &self.system)
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .finish()
    }
}

fn check_eps_positive(eps: f64) -> Result<(), ModelError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name: "eps",
            value: eps,
            reason: "must be positive and finite",
        })
    }
}
