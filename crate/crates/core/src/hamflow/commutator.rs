use super::{IsotopyTrace, SymplecticMapRep};
use crate::error::{check_dim, Error, Result};
use crate::geom::{LiouvilleFlow, SupportBox};

/// Support bound for `[μ_t, φ]`: the union of `supp φ` and `μ_t(supp φ)`.
pub fn commutator_support(phi_support: &SupportBox, flow: &LiouvilleFlow, t: f64) -> SupportBox {
    let scaled = phi_support.scaled_about(&flow.center, LiouvilleFlow::factor(t));
    phi_support.union(&scaled)
}

/// `[μ_t, φ] = μ_t ∘ φ ∘ μ_t^{-1} ∘ φ^{-1}`.
pub fn commutator_map(phi: &SymplecticMapRep, flow: &LiouvilleFlow, t: f64) -> Result<SymplecticMapRep> {
    check_dim(phi.dim(), flow.dim())?;
    let support = phi
        .support()
        .ok_or_else(|| Error::Support("commutator needs a compactly supported map".into()))?;
    let chain = SymplecticMapRep::chain(vec![
        phi.inverse(),
        SymplecticMapRep::liouville(flow.clone(), -t),
        phi.clone(),
        SymplecticMapRep::liouville(flow.clone(), t),
    ])?;
    Ok(chain
        .with_support(Some(commutator_support(support, flow, t)))
        .with_label(format!("[mu_{t}, {}]", phi.label())))
}

/// Trace of `t ↦ [μ_t, φ]` at `steps + 1` uniform times on `[0, δ]`.
///
/// `working`, if given, must contain the support of every commutator.
pub fn commutator_isotopy(
    phi: &SymplecticMapRep,
    delta: f64,
    flow: &LiouvilleFlow,
    steps: usize,
    working: Option<&SupportBox>,
) -> Result<IsotopyTrace> {
    if delta <= 0.0 || steps == 0 {
        return Err(Error::InvalidArgument("commutator isotopy needs δ > 0 and at least one step".into()));
    }
    let support = phi
        .support()
        .ok_or_else(|| Error::Support("commutator needs a compactly supported map".into()))?;
    let outer = commutator_support(support, flow, delta);
    if let Some(w) = working {
        if !outer.fits_inside(w) {
            return Err(Error::Support(format!(
                "commutator support (radius {:.4}) escapes the working box (radius {:.4})",
                outer.radius, w.radius
            )));
        }
    }
    IsotopyTrace::sample(0.0, delta, steps, outer, |t| commutator_map(phi, flow, t))
}
