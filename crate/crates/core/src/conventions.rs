//! Sign and direction conventions, collected in one table so that runs can
//! record them and tests can tamper with them.

use crate::genfun::HJ_SIGN;
use crate::hamflow::AlgebraVariant;

/// Every sign or direction choice the numerical pipeline depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conventions {
    /// `s` in `ι_{X_H} ω = s·dH`, used whenever a Hamiltonian is recovered
    /// from a velocity field. Flows always use `X_H = (∂H/∂p, −∂H/∂q)`,
    /// which corresponds to `s = +1`.
    pub hamiltonian_sign: f64,
    /// `σ` in `H(t, w) = σ·∂S_t/∂t(x, η)`.
    pub hj_sign: f64,
    /// Argument maps of the inverse and composition generators.
    pub algebra: AlgebraVariant,
    /// `true` when `e^δ·H∘μ_δ^{-1}` is bound to `μ_δ∘φ∘μ_δ^{-1}`, `false`
    /// when it is bound to `μ_δ^{-1}∘φ∘μ_δ`.
    pub conjugation_forward: bool,
}

impl Conventions {
    /// The conventions confirmed by the flow oracles.
    pub const fn validated() -> Self {
        Self {
            hamiltonian_sign: 1.0,
            hj_sign: HJ_SIGN,
            algebra: AlgebraVariant::Validated,
            conjugation_forward: true,
        }
    }

    /// Variants read directly off the printed formulas, kept for comparison.
    pub const fn literal() -> Self {
        Self {
            hamiltonian_sign: 1.0,
            hj_sign: HJ_SIGN,
            algebra: AlgebraVariant::Literal,
            conjugation_forward: false,
        }
    }

    /// `(name, value)` pairs for manifests and reports.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("hamiltonian_sign", format!("{:+}", self.hamiltonian_sign)),
            ("hj_sign", format!("{:+}", self.hj_sign)),
            ("algebra", self.algebra.name().to_string()),
            (
                "liouville_conjugation",
                if self.conjugation_forward {
                    "mu.phi.mu^-1".to_string()
                } else {
                    "mu^-1.phi.mu".to_string()
                },
            ),
        ]
    }
}

impl Default for Conventions {
    fn default() -> Self {
        Self::validated()
    }
}
