use rayon::prelude::*;

use super::GeneratingFunction;
use crate::error::{check_dim, Error, Result};
use crate::geom::{SupportBox, UniformGrid};
use crate::hamflow::{PotentialSlice, SymplecticMapRep};

const SLICE_TOLERANCE: f64 = 1e-13;
const SLICE_BUDGET: usize = 200;

/// Generating function read off a map, with the loop-integral test of the
/// section it was integrated from.
#[derive(Debug, Clone)]
pub struct SectionResult {
    pub function: GeneratingFunction,
    pub grid: UniformGrid,
    /// Largest loop integral of the section around a grid plaquette.
    pub exactness_residual: f64,
}

/// For the base point `(x, η)`, solves for `y` with `η` the momentum half of
/// `φ(x, y)` and returns the fiber `(y − η, ξ − x)`.
pub fn section_at(phi: &SymplecticMapRep, base: &[f64]) -> Result<Vec<f64>> {
    let d = base.len();
    let n = d / 2;
    let (x, eta) = base.split_at(n);
    let mut point: Vec<f64> = base.to_vec();
    for _ in 0..SLICE_BUDGET {
        let image = phi.apply(&point)?;
        let mut step = 0.0f64;
        for i in 0..n {
            let delta = eta[i] - image[n + i];
            point[n + i] += delta;
            step = step.max(delta.abs());
        }
        if !step.is_finite() {
            break;
        }
        if step <= SLICE_TOLERANCE {
            let image = phi.apply(&point)?;
            let mut fiber = vec![0.0; d];
            for i in 0..n {
                fiber[i] = point[n + i] - eta[i];
                fiber[n + i] = image[i] - x[i];
            }
            return Ok(fiber);
        }
    }
    Err(Error::NonConvergence(format!(
        "slice solve at base {base:?} diverged; the map is too far from the identity"
    )))
}

/// Builds `S` with `Ψ(S) = φ` from the section `(x, η) ↦ (y − η, ξ − x)`.
pub fn genfun_from_map(phi: &SymplecticMapRep, cells: usize) -> Result<SectionResult> {
    let support = phi
        .support()
        .ok_or_else(|| Error::Support("generating function needs a compactly supported map".into()))?;
    check_dim(phi.dim(), support.dim())?;
    let grid = UniformGrid::over_box(support, cells)?;
    let fibers: Vec<Result<Vec<f64>>> = (0..grid.len()).into_par_iter().map(|f| section_at(phi, &grid.node(f))).collect();
    let mut form = Vec::with_capacity(grid.len() * grid.dim());
    for f in fibers {
        form.extend(f?);
    }
    let slice = PotentialSlice::from_one_form(grid.clone(), &form);
    let outer = SupportBox {
        center: support.center.clone(),
        radius: support.outer_radius(),
        padding: 0.0,
    };
    let function = GeneratingFunction::from_grid(grid.clone(), slice.values, slice.slopes, outer)?
        .with_label(format!("S[{}]", phi.label()));
    Ok(SectionResult {
        function,
        grid,
        exactness_residual: slice.closedness_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_zero() {
        let id = SymplecticMapRep::identity(2).with_support(Some(SupportBox::centered(2, 1.0)));
        let r = genfun_from_map(&id, 16).unwrap();
        assert_eq!(r.exactness_residual, 0.0);
        assert_eq!(r.function.value(&[0.3, 0.2]).unwrap(), 0.0);
    }
}
