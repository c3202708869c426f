use std::sync::Arc;

use super::{calabi_eq1, CalabiOptions, CalabiResult};
use crate::error::{check_dim, Error, Result};
use crate::geom::{LiouvilleFlow, SupportBox};
use crate::hamflow::{
    c0_distance, compose_hamiltonian, inverse_hamiltonian, AlgebraVariant, FnSourceFallible, HamiltonianField,
    SymplecticMapRep,
};

/// `e^δ·H(t, μ_δ^{-1} x)`, the generator of `t ↦ μ_δ ∘ φ_H^t ∘ μ_δ^{-1}`.
///
/// Its support is the support of `h` scaled by `e^{δ/2}` about the flow
/// centre, and its Calabi invariant is `e^{(n+1)δ}` times that of `h`.
pub fn liouville_conjugated_hamiltonian(h: &HamiltonianField, delta: f64, flow: &LiouvilleFlow) -> Result<HamiltonianField> {
    check_dim(h.dim(), flow.dim())?;
    if delta == 0.0 {
        return Ok(h.clone());
    }
    let scale = delta.exp();
    let slope = LiouvilleFlow::factor(delta);
    let (hv, hg) = (h.clone(), h.clone());
    let (fv, fg) = (flow.clone(), flow.clone());
    let src = FnSourceFallible {
        value: move |t: f64, x: &[f64]| Ok(scale * hv.value(t, &fv.inverse(delta, x))?),
        gradient: move |t: f64, x: &[f64], out: &mut [f64]| {
            hg.gradient_into(t, &fg.inverse(delta, x), out)?;
            out.iter_mut().for_each(|v| *v *= slope);
            Ok(())
        },
    };
    let support = h.support().scaled_about(&flow.center, slope);
    let label = format!("mu_{delta}[{}]", h.label());
    HamiltonianField::from_source(Arc::new(src), h.n(), support).map(|k| {
        k.with_time_interval(h.time_interval().0, h.time_interval().1)
            .autonomous(h.is_autonomous())
            .with_fd_step(h.fd_step())
            .with_label(label)
    })
}

/// Sup distance between the time-one flow of the conjugated generator and
/// the conjugated map itself, `μ_δ∘φ∘μ_δ^{-1}` when `forward` and
/// `μ_δ^{-1}∘φ∘μ_δ` otherwise.
pub fn conjugation_flow_residual(
    h: &HamiltonianField,
    delta: f64,
    flow: &LiouvilleFlow,
    forward: bool,
    samples: usize,
    seed: u64,
    steps: usize,
) -> Result<f64> {
    let k = liouville_conjugated_hamiltonian(h, delta, flow)?;
    let phi = SymplecticMapRep::time_one(h.clone(), steps);
    let s = if forward { delta } else { -delta };
    let target = SymplecticMapRep::chain(vec![
        SymplecticMapRep::liouville(flow.clone(), -s),
        phi,
        SymplecticMapRep::liouville(flow.clone(), s),
    ])?;
    let region = k.support().union(h.support());
    c0_distance(&SymplecticMapRep::time_one(k, steps), &target, &region, samples, seed)
}

/// [`liouville_conjugated_hamiltonian`] guarded by its flow oracle.
pub fn liouville_conjugated_checked(
    h: &HamiltonianField,
    delta: f64,
    flow: &LiouvilleFlow,
    tolerance: f64,
    samples: usize,
    seed: u64,
    steps: usize,
) -> Result<HamiltonianField> {
    let residual = conjugation_flow_residual(h, delta, flow, true, samples, seed, steps)?;
    if residual > tolerance {
        return Err(Error::FlowMismatch {
            residual,
            tolerance,
            context: format!("Liouville conjugation of {} by δ = {delta}", h.label()),
        });
    }
    liouville_conjugated_hamiltonian(h, delta, flow)
}

/// `Cal([μ_δ, φ_H])` computed directly and from the scaling law.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorCalabiReport {
    pub delta: f64,
    pub cal_phi: CalabiResult,
    /// Space-time integral of the generator of `μ_δ φ μ_δ^{-1} ∘ φ^{-1}`.
    pub direct: CalabiResult,
    /// `(e^{(n+1)δ} − 1)·Cal(φ)`.
    pub law: f64,
}

impl CommutatorCalabiReport {
    pub fn gap(&self) -> f64 {
        (self.direct.value - self.law).abs()
    }

    /// Gap relative to the law value; zero when both vanish.
    pub fn relative_gap(&self) -> f64 {
        if self.law == 0.0 {
            self.gap()
        } else {
            self.gap() / self.law.abs()
        }
    }
}

/// Support box that contains the supports of `h` and of its conjugate by
/// `μ_δ`.
pub fn commutator_working_box(h: &HamiltonianField, delta: f64, flow: &LiouvilleFlow) -> SupportBox {
    h.support()
        .union(&h.support().scaled_about(&flow.center, LiouvilleFlow::factor(delta)))
}

pub fn commutator_calabi(
    h: &HamiltonianField,
    delta: f64,
    flow: &LiouvilleFlow,
    variant: AlgebraVariant,
    opts: &CalabiOptions,
) -> Result<CommutatorCalabiReport> {
    commutator_calabi_directed(h, delta, flow, variant, true, opts)
}

/// [`commutator_calabi`] with the conjugated generator bound to
/// `μ_δ∘φ∘μ_δ^{-1}` when `forward` and to `μ_δ^{-1}∘φ∘μ_δ` otherwise.
pub fn commutator_calabi_directed(
    h: &HamiltonianField,
    delta: f64,
    flow: &LiouvilleFlow,
    variant: AlgebraVariant,
    forward: bool,
    opts: &CalabiOptions,
) -> Result<CommutatorCalabiReport> {
    let cal_phi = calabi_eq1(h, opts)?;
    let k = liouville_conjugated_hamiltonian(h, if forward { delta } else { -delta }, flow)?;
    let inv = inverse_hamiltonian(h, variant, opts.steps_per_unit);
    let generator = compose_hamiltonian(&k, &inv, variant, opts.steps_per_unit)?;
    let direct = calabi_eq1(&generator, opts)?;
    let law = (((h.n() + 1) as f64 * delta).exp() - 1.0) * cal_phi.value;
    Ok(CommutatorCalabiReport {
        delta,
        cal_phi,
        direct,
        law,
    })
}
