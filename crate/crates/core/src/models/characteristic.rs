use std::fmt;
use std::sync::Arc;

use crate::smallmat::{balance, eig_real, real_eigenvectors, Lu, MatR};

use super::admissible::{hat_is_bounded, validation_grid};
use super::{
    CharData, Construction, EpsDomain, FluxSplitting, ModelError, SplittingKind, SystemSpec,
};

/// Eigenvalues closer than this (relative to the balanced norm) are treated
/// as repeated, so `A` is rejected as not diagonalizable.
const DISTINCT_TOL: f64 = 1e-8;
const REAL_TOL: f64 = 1e-9;

/// `(ε, Λ) ↦ Λ̂` for [`HatRule::Custom`].
pub type HatFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// How the nonstiff eigenvalues Λ̂ are chosen from Λ(ε).
#[derive(Clone)]
pub enum HatRule {
    /// Λ̂ = Λ (fully explicit).
    Identity,
    /// Λ̂ = 0 (fully implicit).
    Zero,
    /// Λ̂ = Λ evaluated at a fixed ε₀; with ε₀ = 1 the scheme is fully
    /// explicit at ε = 1.
    FrozenAt(f64),
    /// Arbitrary rule `(ε, Λ(ε)) ↦ Λ̂(ε)` on ascending eigenvalues.
    Custom(HatFn),
}

impl fmt::Debug for HatRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HatRule::Identity => write!(f, "Identity"),
            HatRule::Zero => write!(f, "Zero"),
            HatRule::FrozenAt(e) => write!(f, "FrozenAt({e})"),
            HatRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Clone)]
pub(crate) enum ResolvedRule {
    Identity,
    Zero,
    Fixed(Vec<f64>),
    Custom(HatFn),
}

impl ResolvedRule {
    pub(crate) fn resolve(rule: &HatRule, system: &SystemSpec) -> Result<Self, ModelError> {
        Ok(match rule {
            HatRule::Identity => ResolvedRule::Identity,
            HatRule::Zero => ResolvedRule::Zero,
            HatRule::FrozenAt(eps0) => ResolvedRule::Fixed(system.decompose(*eps0)?.lambda),
            HatRule::Custom(f) => ResolvedRule::Custom(Arc::clone(f)),
        })
    }

    fn apply(&self, eps: f64, lambda: &[f64]) -> Result<Vec<f64>, ModelError> {
        let out = match self {
            ResolvedRule::Identity => lambda.to_vec(),
            ResolvedRule::Zero => vec![0.0; lambda.len()],
            ResolvedRule::Fixed(v) => v.clone(),
            ResolvedRule::Custom(f) => f(eps, lambda),
        };
        if out.len() != lambda.len() {
            return Err(ModelError::HatRuleDimension {
                got: out.len(),
                dim: lambda.len(),
            });
        }
        Ok(out)
    }
}

/// `A = QΛQ⁻¹`, computed on the balanced matrix `D⁻¹AD` and carried in
/// balanced coordinates so that stiff (ε ≪ 1) systems keep full accuracy.
#[derive(Debug, Clone)]
pub struct CharDecomposition {
    pub eps: f64,
    /// Eigenvalues in ascending order.
    pub lambda: Vec<f64>,
    balanced_q: MatR,
    balanced_q_inv: MatR,
    scale: Vec<f64>,
}

impl CharDecomposition {
    pub fn new(a: &MatR, eps: f64) -> Result<Self, ModelError> {
        let bal = balance(a);
        let norm = bal.matrix.norm_inf();
        let n = a.dim();
        if norm == 0.0 {
            return Ok(Self {
                eps,
                lambda: vec![0.0; n],
                balanced_q: MatR::identity(n),
                balanced_q_inv: MatR::identity(n),
                scale: bal.scale,
            });
        }
        let spectrum = eig_real(&bal.matrix)?;
        if spectrum.max_abs_imag() > REAL_TOL * norm {
            return Err(ModelError::NotDiagonalizable { eps });
        }
        let lambda = spectrum.real_parts();
        if lambda
            .windows(2)
            .any(|w| w[1] - w[0] <= DISTINCT_TOL * norm)
        {
            return Err(ModelError::NotDiagonalizable { eps });
        }
        let balanced_q = real_eigenvectors(&bal.matrix, &lambda)
            .map_err(|_| ModelError::NotDiagonalizable { eps })?;
        let balanced_q_inv = Lu::factorize(&balanced_q)
            .and_then(|lu| lu.inverse())
            .map_err(|_| ModelError::NotDiagonalizable { eps })?;
        Ok(Self {
            eps,
            lambda,
            balanced_q,
            balanced_q_inv,
            scale: bal.scale,
        })
    }

    /// `Q · diag(values) · Q⁻¹` in the original coordinates.
    pub fn compose(&self, values: &[f64]) -> MatR {
        let inner = &(&self.balanced_q * &MatR::diag(values)) * &self.balanced_q_inv;
        let inv_scale: Vec<f64> = self.scale.iter().map(|s| 1.0 / s).collect();
        inner.similarity_diag(&inv_scale)
    }

    /// Eigenvector matrix in original coordinates: unit columns, first
    /// nonzero component positive. Returns `(Q, Q⁻¹)`.
    pub fn q_pair(&self) -> (MatR, MatR) {
        let n = self.lambda.len();
        let raw = MatR::from_fn(n, |i, j| self.scale[i] * self.balanced_q[(i, j)]);
        let factor: Vec<f64> = (0..n)
            .map(|j| {
                let col: Vec<f64> = (0..n).map(|i| raw[(i, j)]).collect();
                let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                let cmax = col.iter().map(|x| x.abs()).fold(0.0, f64::max);
                let lead = col
                    .iter()
                    .find(|x| x.abs() > 1e-12 * cmax)
                    .copied()
                    .unwrap_or(1.0);
                lead.signum() / norm
            })
            .collect();
        // Q = D Q' F, so Q⁻¹ = F⁻¹ Q'⁻¹ D⁻¹
        let q = MatR::from_fn(n, |i, j| raw[(i, j)] * factor[j]);
        let q_inv = MatR::from_fn(n, |i, j| {
            self.balanced_q_inv[(i, j)] / (factor[i] * self.scale[j])
        });
        (q, q_inv)
    }

    pub(crate) fn char_data(&self, rule: &ResolvedRule) -> Result<CharData, ModelError> {
        let lambda_hat = rule.apply(self.eps, &self.lambda)?;
        let lambda_tilde: Vec<f64> = self
            .lambda
            .iter()
            .zip(&lambda_hat)
            .map(|(l, h)| l - h)
            .collect();
        let (q, q_inv) = self.q_pair();
        Ok(CharData {
            q,
            q_inv,
            lambda: self.lambda.clone(),
            lambda_hat,
            lambda_tilde,
        })
    }
}

/// Builds `Â = QΛ̂Q⁻¹`, `Ã = Q(Λ − Λ̂)Q⁻¹` for an arbitrary system.
///
/// The construction is validated on ε ∈ {1, 1e-1, …, 1e-8}: `A(ε)` must be
/// diagonalizable with distinct real eigenvalues there and Λ̂ must stay
/// bounded.
pub fn generic_characteristic_splitting(
    system: &SystemSpec,
    rule: HatRule,
) -> Result<FluxSplitting, ModelError> {
    let resolved = ResolvedRule::resolve(&rule, system)?;
    let mut hat_max = Vec::new();
    for eps in validation_grid() {
        let dec = system.decompose(eps)?;
        let hat = resolved.apply(eps, &dec.lambda)?;
        hat_max.push(hat.iter().map(|x| x.abs()).fold(0.0, f64::max));
    }
    let sup = hat_max.iter().copied().fold(0.0, f64::max);
    let reference = hat_max[0];
    if !hat_is_bounded(sup, reference) {
        return Err(ModelError::UnboundedHat { sup, reference });
    }
    Ok(FluxSplitting::new(
        format!("{}-characteristic", system.name()),
        system.clone(),
        SplittingKind::Characteristic,
        EpsDomain::UNIT,
        Construction::Characteristic(resolved),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{prototype_characteristic_splitting, prototype_system};

    fn rel_diff(a: &MatR, b: &MatR) -> f64 {
        (a - b).norm_inf() / b.norm_inf().max(a.norm_inf()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn identity_rule_gives_zero_stiff_part() {
        let sys = prototype_system(2.0).unwrap();
        let sp = generic_characteristic_splitting(&sys, HatRule::Identity);
        // Λ̂ = Λ is unbounded as ε → 0, so the construction is rejected...
        assert!(matches!(sp, Err(ModelError::UnboundedHat { .. })));
        // ...but a system that does not depend on ε is fine.
        let fixed = SystemSpec::new("fixed", 3, vec![], 2.0, |_| {
            MatR::from_rows(&[[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]])
        });
        let sp = generic_characteristic_splitting(&fixed, HatRule::Identity).unwrap();
        let m = sp.at(1.0).unwrap();
        assert!(m.tilde.max_abs() < 1e-14);
        assert!(rel_diff(&m.hat, &m.a) < 1e-13);
    }

    #[test]
    fn zero_rule_is_fully_implicit() {
        let sys = prototype_system(2.0).unwrap();
        let sp = generic_characteristic_splitting(&sys, HatRule::Zero).unwrap();
        for eps in [1.0, 0.1, 1e-4] {
            let m = sp.at(eps).unwrap();
            assert_eq!(m.hat.max_abs(), 0.0);
            assert!(rel_diff(&m.tilde, &m.a) < 1e-12);
        }
    }

    #[test]
    fn frozen_rule_reproduces_closed_form_prototype() {
        for a in [0.5, 2.0, 4.0] {
            let sys = prototype_system(a).unwrap();
            let generic = generic_characteristic_splitting(&sys, HatRule::FrozenAt(1.0)).unwrap();
            let closed = prototype_characteristic_splitting(a).unwrap();
            for eps in [1.0, 0.5, 0.1, 1e-2, 1e-4, 1e-6] {
                let g = generic.at(eps).unwrap();
                let c = closed.at(eps).unwrap();
                for (gm, cm) in [(&g.hat, &c.hat), (&g.tilde, &c.tilde)] {
                    for i in 0..3 {
                        for j in 0..3 {
                            let (x, y) = (gm[(i, j)], cm[(i, j)]);
                            // zero entries are measured against their row/column magnitude
                            let row = (0..3).map(|k| cm[(i, k)].abs()).fold(0.0, f64::max);
                            let col = (0..3).map(|k| cm[(k, j)].abs()).fold(0.0, f64::max);
                            let scale = y.abs().max((row * col).sqrt());
                            assert!(
                                (x - y).abs() <= 1e-10 * scale,
                                "a={a} eps={eps} ({i},{j}): {x} vs {y}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn q_pair_is_inverse_pair() {
        let sys = prototype_system(2.0).unwrap();
        for eps in [1.0, 1e-3, 1e-7] {
            let dec = sys.decompose(eps).unwrap();
            let (q, qi) = dec.q_pair();
            let prod = &qi * &q;
            assert!((&prod - &MatR::identity(3)).max_abs() < 1e-12, "{prod:?}");
            for j in 0..3 {
                let norm: f64 = (0..3).map(|i| q[(i, j)].powi(2)).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_non_diagonalizable_system() {
        let jordan = SystemSpec::new("jordan", 2, vec![], 1.0, |_| {
            MatR::from_rows(&[[1.0, 1.0], [0.0, 1.0]])
        });
        assert!(matches!(
            generic_characteristic_splitting(&jordan, HatRule::Zero),
            Err(ModelError::NotDiagonalizable { .. })
        ));
    }

    #[test]
    fn rule_dimension_is_checked() {
        let sys = prototype_system(1.0).unwrap();
        let bad = HatRule::Custom(Arc::new(|_, _| vec![1.0]));
        assert!(matches!(
            generic_characteristic_splitting(&sys, bad),
            Err(ModelError::HatRuleDimension { got: 1, dim: 3 })
        ));
    }
}
