use std::f64::consts::TAU;
use std::sync::Arc;

use super::field::ValueOnly;
use super::{flow, steps_for, HamiltonianField, SymplecticMapRep};
use crate::error::{check_dim, Error, Result};
use crate::geom::SupportBox;

/// Which argument maps the inverse and composition generators use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgebraVariant {
    /// `−F(t, φ_F^t x)` and `F(t,x) + G(t, (φ_F^t)^{-1} x)`: the formulas
    /// whose flows reproduce `(φ_F^t)^{-1}` and `φ_F^t ∘ φ_G^t` under
    /// `ι_{X_H} ω = dH`.
    Validated,
    /// `−F(t, (φ_F^t)^{-1} x)` and `F(t,x) + G(t, φ_F^t x)`.
    Literal,
}

impl AlgebraVariant {
    pub fn name(self) -> &'static str {
        match self {
            AlgebraVariant::Validated => "validated",
            AlgebraVariant::Literal => "literal",
        }
    }
}

fn forward_to(f: &HamiltonianField, t: f64, x: &[f64], steps_per_unit: usize) -> Result<Vec<f64>> {
    let t0 = f.time_interval().0;
    flow(f, t0, t, x, steps_for(t0, t, steps_per_unit))
}

fn backward_from(f: &HamiltonianField, t: f64, x: &[f64], steps_per_unit: usize) -> Result<Vec<f64>> {
    let t0 = f.time_interval().0;
    flow(f, t, t0, x, steps_for(t0, t, steps_per_unit))
}

/// Generator of `t ↦ (φ_F^t)^{-1}`.
///
/// An autonomous `F` is constant along its own flow, so both variants reduce
/// to `−F`.
pub fn inverse_hamiltonian(f: &HamiltonianField, variant: AlgebraVariant, steps_per_unit: usize) -> HamiltonianField {
    let label = format!("inv[{}]", f.label());
    if f.is_autonomous() {
        return f.scaled(-1.0).with_label(label);
    }
    let inner = f.clone();
    let src = ValueOnly(move |t: f64, x: &[f64]| {
        let y = match variant {
            AlgebraVariant::Validated => forward_to(&inner, t, x, steps_per_unit)?,
            AlgebraVariant::Literal => backward_from(&inner, t, x, steps_per_unit)?,
        };
        Ok(-inner.value(t, &y)?)
    });
    f.derived(Arc::new(src), f.support().clone(), label)
}

/// Generator of `t ↦ φ_F^t ∘ φ_G^t`.
pub fn compose_hamiltonian(
    f: &HamiltonianField,
    g: &HamiltonianField,
    variant: AlgebraVariant,
    steps_per_unit: usize,
) -> Result<HamiltonianField> {
    check_dim(f.dim(), g.dim())?;
    if f.time_interval() != g.time_interval() {
        return Err(Error::InvalidArgument("composed generators need a shared time interval".into()));
    }
    let (fi, gi) = (f.clone(), g.clone());
    let src = ValueOnly(move |t: f64, x: &[f64]| {
        let a = fi.value(t, x)?;
        let y = if !fi.support().contains_padded(x) {
            x.to_vec()
        } else {
            match variant {
                AlgebraVariant::Validated => backward_from(&fi, t, x, steps_per_unit)?,
                AlgebraVariant::Literal => forward_to(&fi, t, x, steps_per_unit)?,
            }
        };
        Ok(a + gi.value(t, &y)?)
    });
    let support = f.support().union(g.support());
    let mut h = f.derived(Arc::new(src), support, format!("{}#{}", f.label(), g.label()));
    h = h.autonomous(false);
    Ok(h)
}

/// Generator `F(t, φ(x))` of `t ↦ φ^{-1} ∘ φ_F^t ∘ φ`.
pub fn conjugate_hamiltonian(f: &HamiltonianField, phi: &SymplecticMapRep) -> Result<HamiltonianField> {
    check_dim(f.dim(), phi.dim())?;
    if phi.is_identity() {
        return Ok(f.clone());
    }
    let support = match phi.support() {
        Some(s) => f.support().union(s),
        None => {
            return Err(Error::Support(
                "conjugating map is not compactly supported; use a dedicated conjugation".into(),
            ))
        }
    };
    let (fi, map) = (f.clone(), phi.clone());
    let src = ValueOnly(move |t: f64, x: &[f64]| fi.value(t, &map.apply(x)?));
    Ok(f.derived(Arc::new(src), support, format!("{}∘{}", f.label(), phi.label())))
}

/// Generator of the `k`-th iterate of the time-one map of `h`. The path
/// runs `h` `k` times faster; each lap is reparametrized by
/// `τ(u) = u − sin(2πu)/2π`, so the generator
/// `G(t,x) = k·τ'(u)·H(t0 + τ(u)·L, x)`, `u = frac(k(t − t0)/L)`, vanishes at
/// the lap boundaries and stays continuous in time. Autonomous fields are
/// simply scaled by `k`.
pub fn iterated_hamiltonian(h: &HamiltonianField, k: u64) -> HamiltonianField {
    let kf = k as f64;
    let label = format!("{k}x[{}]", h.label());
    if h.is_autonomous() {
        return h.scaled(kf).with_label(label);
    }
    let (t0, t1) = h.time_interval();
    let len = t1 - t0;
    let inner = h.clone();
    let src = ValueOnly(move |t: f64, x: &[f64]| {
        let s = (kf * (t - t0) / len).fract();
        let slow = s - (TAU * s).sin() / TAU;
        let speed = 1.0 - (TAU * s).cos();
        Ok(kf * speed * inner.value(t0 + slow * len, x)?)
    });
    h.derived(Arc::new(src), h.support().clone(), label)
}

/// Sup distance between the time-one flow of `h` and `target` over a
/// quasi-random sample of `region`.
pub fn flow_match_residual(
    h: &HamiltonianField,
    target: &SymplecticMapRep,
    region: &SupportBox,
    samples: usize,
    seed: u64,
    steps: usize,
) -> Result<f64> {
    let phi = SymplecticMapRep::time_one(h.clone(), steps);
    super::c0_distance(&phi, target, region, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Expression;
    use crate::geom::distance;

    fn field(src: &str, c: [f64; 2], r: f64) -> HamiltonianField {
        HamiltonianField::from_expression(&Expression::parse(src).unwrap(), 1, SupportBox::new(c.to_vec(), r)).unwrap()
    }

    fn time_dependent() -> HamiltonianField {
        field("0.5*bump(sqrt(q1^2+p1^2))*(1+t*q1)", [0.0, 0.0], 1.0)
    }

    fn shifted() -> HamiltonianField {
        field("0.4*bump(sqrt((q1-0.3)^2+(p1+0.2)^2))*(1+0.5*t*p1)", [0.3, -0.2], 1.0)
    }

    /// `φ_F ∘ φ_G` from separately integrated flows.
    fn composed_flows(f: &HamiltonianField, g: &HamiltonianField) -> SymplecticMapRep {
        let phi_f = SymplecticMapRep::time_one(f.clone(), 200);
        SymplecticMapRep::time_one(g.clone(), 200).then(&phi_f).unwrap()
    }

    fn samples() -> Vec<[f64; 2]> {
        (0..12)
            .map(|i| {
                let a = 0.53 * i as f64;
                let r = 0.08 * i as f64;
                [r * a.cos(), r * a.sin()]
            })
            .collect()
    }

    #[test]
    fn zero_is_neutral() {
        let z = HamiltonianField::zero(1);
        let inv = inverse_hamiltonian(&z, AlgebraVariant::Validated, 50);
        assert_eq!(inv.value(0.3, &[0.1, 0.2]).unwrap(), 0.0);
        let g = time_dependent();
        let c = compose_hamiltonian(&z, &g, AlgebraVariant::Validated, 50).unwrap();
        for x in samples() {
            assert_eq!(c.value(0.4, &x).unwrap(), g.value(0.4, &x).unwrap());
        }
    }

    #[test]
    fn validated_inverse_generates_inverse_path() {
        let f = time_dependent();
        let phi = SymplecticMapRep::time_one(f.clone(), 100);
        let inv = inverse_hamiltonian(&f, AlgebraVariant::Validated, 100);
        let psi = SymplecticMapRep::time_one(inv, 100);
        for x in samples() {
            let target = phi.inverse_apply(&x).unwrap();
            let d = distance(&psi.apply(&x).unwrap(), &target);
            assert!(d < 1e-6, "{d:e}");
        }
    }

    #[test]
    fn validated_compose_generates_composition() {
        let (f, g) = (time_dependent(), shifted());
        let target = composed_flows(&f, &g);
        let c = compose_hamiltonian(&f, &g, AlgebraVariant::Validated, 200).unwrap();
        let psi = SymplecticMapRep::time_one(c, 200);
        for x in samples() {
            let d = distance(&psi.apply(&x).unwrap(), &target.apply(&x).unwrap());
            assert!(d < 1e-6, "{d:e}");
        }
    }

    #[test]
    fn literal_variants_miss_the_target() {
        let (f, g) = (time_dependent(), shifted());
        let target = composed_flows(&f, &g);
        let c = compose_hamiltonian(&f, &g, AlgebraVariant::Literal, 100).unwrap();
        let psi = SymplecticMapRep::time_one(c, 100);
        let worst = samples()
            .iter()
            .map(|x| distance(&psi.apply(x).unwrap(), &target.apply(x).unwrap()))
            .fold(0.0, f64::max);
        assert!(worst > 1e-3, "{worst}");
    }

    #[test]
    fn conjugation_generates_conjugate() {
        let f = time_dependent();
        // Fibered twist (r, θ) ↦ (r, θ + a(r)) supported in the unit disc.
        let twist = |sign: f64| {
            move |x: &[f64]| -> Result<Vec<f64>> {
                let r = x[0].hypot(x[1]);
                let a = if r < 1.0 { sign * 0.7 * (1.0 - 1.0 / (1.0 - r * r)).exp() } else { 0.0 };
                let (s, c) = a.sin_cos();
                Ok(vec![c * x[0] - s * x[1], s * x[0] + c * x[1]])
            }
        };
        let psi = SymplecticMapRep::closed_form(2, Some(SupportBox::centered(2, 1.0)), "twist", twist(1.0), twist(-1.0));
        let conj = conjugate_hamiltonian(&f, &psi).unwrap();
        let flow_c = SymplecticMapRep::time_one(conj, 200);
        let phi = SymplecticMapRep::time_one(f, 200);
        let target = SymplecticMapRep::chain(vec![psi.clone(), phi, psi.inverse()]).unwrap();
        for x in samples() {
            let d = distance(&flow_c.apply(&x).unwrap(), &target.apply(&x).unwrap());
            assert!(d < 1e-6, "{d:e}");
        }
        let same = conjugate_hamiltonian(&time_dependent(), &SymplecticMapRep::identity(2)).unwrap();
        assert_eq!(same.value(0.2, &[0.1, 0.1]).unwrap(), time_dependent().value(0.2, &[0.1, 0.1]).unwrap());
    }

    #[test]
    fn iterate_generator_matches_power() {
        let f = time_dependent();
        let phi = SymplecticMapRep::time_one(f.clone(), 200);
        let cube = phi.power(3, 10).unwrap();
        let it = SymplecticMapRep::time_one(iterated_hamiltonian(&f, 3), 600);
        for x in samples() {
            let d = distance(&it.apply(&x).unwrap(), &cube.apply(&x).unwrap());
            assert!(d < 1e-7, "{d:e}");
        }
    }
}
