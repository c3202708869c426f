use std::sync::Arc;

use super::{base_of_image, DerivativeBounds, GeneratingFunction};
use crate::error::{check_dim, Result};
use crate::geom::SupportBox;
use crate::hamflow::{c0_distance, HamiltonianField, SymplecticMapRep, ValueOnly};

/// Sign `σ` in `H(t, w) = σ·∂S_t/∂t(x, η)`, fixed by requiring the flow of
/// `H` to reproduce `t ↦ Ψ(S_t)`.
pub const HJ_SIGN: f64 = 1.0;

type Family = Arc<dyn Fn(f64) -> GeneratingFunction + Send + Sync>;

/// A `C¹` path `t ↦ S_t` of generating functions on `[t0, t1]`.
#[derive(Clone)]
pub struct GenFunPath {
    family: Family,
    n: usize,
    support: SupportBox,
    time: (f64, f64),
    dt: f64,
    bounds: DerivativeBounds,
}

impl std::fmt::Debug for GenFunPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GenFunPath")
            .field("n", &self.n)
            .field("support", &self.support)
            .field("time", &self.time)
            .field("dt", &self.dt)
            .finish()
    }
}

impl GenFunPath {
    /// `dt` is the native time step used for `∂S/∂t`. `support` must contain
    /// the support of every `S_t`.
    pub fn new<F>(n: usize, support: SupportBox, time: (f64, f64), dt: f64, family: F) -> Result<Self>
    where
        F: Fn(f64) -> GeneratingFunction + Send + Sync + 'static,
    {
        check_dim(2 * n, support.dim())?;
        let samples = [time.0, 0.5 * (time.0 + time.1), time.1];
        let mut bounds = DerivativeBounds {
            gradient: 0.0,
            mixed_hessian: 0.0,
        };
        for t in samples {
            let b = family(t).derivative_bounds();
            bounds.gradient = bounds.gradient.max(b.gradient);
            bounds.mixed_hessian = bounds.mixed_hessian.max(b.mixed_hessian);
        }
        Ok(Self {
            family: Arc::new(family),
            n,
            support,
            time,
            dt,
            bounds,
        })
    }

    /// `S_t = t·S`.
    pub fn linear(s: GeneratingFunction, time: (f64, f64), dt: f64) -> Result<Self> {
        let support = s.support().clone();
        let n = s.n();
        Self::new(n, support, time, dt, move |t| s.scaled(t))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &SupportBox {
        &self.support
    }

    pub fn time_interval(&self) -> (f64, f64) {
        self.time
    }

    pub fn at(&self, t: f64) -> GeneratingFunction {
        (self.family)(t).with_bounds(self.bounds)
    }

    /// Central difference `∂S_t/∂t` at base point `z`.
    pub fn time_derivative(&self, t: f64, z: &[f64]) -> Result<f64> {
        let h = self.dt;
        Ok((self.at(t + h).value(z)? - self.at(t - h).value(z)?) / (2.0 * h))
    }

    /// `Ψ(S_t) ∘ Ψ(S_{t0})^{-1}`.
    pub fn relative_map(&self, t: f64) -> Result<SymplecticMapRep> {
        let start = SymplecticMapRep::genfun(Arc::new(self.at(self.time.0)));
        let now = SymplecticMapRep::genfun(Arc::new(self.at(t)));
        start.inverse().then(&now)
    }
}

/// `σ·∂S_t/∂t(x, η)` where `(x, η)` is the base point over the image point
/// `w = (ξ, η)` of `Ψ(S_t)`.
pub fn hamilton_jacobi_value(path: &GenFunPath, sign: f64, t: f64, w: &[f64]) -> Result<f64> {
    let z = base_of_image(&path.at(t), w)?;
    Ok(sign * path.time_derivative(t, &z)?)
}

/// The Hamilton–Jacobi generator of `path` with sign `sign`.
pub fn hamilton_jacobi_field(path: &GenFunPath, sign: f64) -> Result<HamiltonianField> {
    let p = path.clone();
    let src = ValueOnly(move |t: f64, w: &[f64]| hamilton_jacobi_value(&p, sign, t, w));
    Ok(HamiltonianField::from_source(Arc::new(src), path.n, path.support.clone())?
        .with_time_interval(path.time.0, path.time.1)
        .with_label(format!("hj[{sign:+}]")))
}

/// Flow-match residual of both signs over `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignResolution {
    pub sign: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
}

/// Sup distance between the flow of the HJ field and `Ψ(S_t)∘Ψ(S_{t0})^{-1}`
/// at `checkpoints` uniform times.
pub fn hj_flow_residual(path: &GenFunPath, sign: f64, samples: usize, seed: u64, steps: usize, checkpoints: usize) -> Result<f64> {
    let h = hamilton_jacobi_field(path, sign)?;
    let (t0, t1) = path.time;
    let mut worst = 0.0f64;
    for c in 1..=checkpoints {
        let t = t0 + (t1 - t0) * c as f64 / checkpoints as f64;
        let steps_here = ((steps * c) as f64 / checkpoints as f64).ceil() as usize;
        let flow = SymplecticMapRep::flow(h.clone(), t0, t, steps_here.max(1));
        let target = path.relative_map(t)?;
        worst = worst.max(c0_distance(&flow, &target, &path.support, samples, seed)?);
    }
    Ok(worst)
}

/// Chooses `σ` by comparing the flow residuals of both signs.
pub fn resolve_hj_sign(path: &GenFunPath, samples: usize, seed: u64, steps: usize) -> Result<SignResolution> {
    let plus = hj_flow_residual(path, 1.0, samples, seed, steps, 1)?;
    let minus = hj_flow_residual(path, -1.0, samples, seed, steps, 1)?;
    Ok(SignResolution {
        sign: if plus <= minus { 1.0 } else { -1.0 },
        residual_plus: plus,
        residual_minus: minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Expression;

    fn path() -> GenFunPath {
        let e = Expression::parse("0.15*bump(sqrt(x1^2+eta1^2))*(1+0.4*x1)").unwrap();
        let s = GeneratingFunction::from_expression(&e, 1, SupportBox::centered(2, 1.0)).unwrap();
        GenFunPath::linear(s, (0.0, 0.3), 1e-3).unwrap()
    }

    #[test]
    fn constant_path_has_zero_field() {
        let e = Expression::parse("0.15*bump(sqrt(x1^2+eta1^2))").unwrap();
        let s = GeneratingFunction::from_expression(&e, 1, SupportBox::centered(2, 1.0)).unwrap();
        let p = GenFunPath::new(1, s.support().clone(), (0.0, 0.3), 1e-3, move |_| s.clone()).unwrap();
        assert_eq!(hamilton_jacobi_value(&p, HJ_SIGN, 0.1, &[0.2, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn sign_is_resolved_to_plus() {
        let r = resolve_hj_sign(&path(), 64, 3, 30).unwrap();
        assert_eq!(r.sign, HJ_SIGN);
        assert!(r.residual_plus < 1e-4, "{r:?}");
        assert!(r.residual_minus > 100.0 * r.residual_plus);
    }
}
