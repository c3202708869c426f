use rayon::prelude::*;

use super::AngularProfile;
use crate::error::{check_dim, Error, Result};
use crate::geom::{cartesian_to_polar, polar_to_cartesian, HaltonSampler, LiouvilleFlow, SupportBox};
use crate::hamflow::{jacobian, SymplecticMapRep};

/// The map `(r, θ) ↦ (r, θ + ρ(r))`.
#[derive(Debug, Clone)]
pub struct FiberedRotation {
    profile: AngularProfile,
}

fn turn(x: &[f64], angle: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    check_dim(2, x.len())?;
    let (r, th) = cartesian_to_polar(x);
    if r == 0.0 {
        return Ok(x.to_vec());
    }
    Ok(polar_to_cartesian(r, th + angle(r)?).to_vec())
}

impl FiberedRotation {
    pub fn new(profile: AngularProfile) -> Self {
        Self { profile }
    }

    pub fn profile(&self) -> &AngularProfile {
        &self.profile
    }

    pub fn support(&self) -> SupportBox {
        SupportBox::centered(2, self.profile.support_radius())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        turn(x, |r| self.profile.value(r))
    }

    pub fn inverse_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        turn(x, |r| Ok(-self.profile.value(r)?))
    }

    pub fn to_map(&self) -> SymplecticMapRep {
        let (f, g) = (self.clone(), self.clone());
        SymplecticMapRep::closed_form(
            2,
            Some(self.support()),
            format!("rot[{}]", self.profile.label()),
            move |x| f.apply(x),
            move |x| g.inverse_apply(x),
        )
    }
}

pub fn rotation_apply(rotation: &FiberedRotation, point: &[f64]) -> Result<Vec<f64>> {
    rotation.apply(point)
}

/// Angle added by `[μ_t, φ]` at radius `r`: `ρ(e^{−t/2} r) − ρ(r)`.
pub fn commutator_angle(profile: &AngularProfile, t: f64, r: f64) -> Result<f64> {
    Ok(profile.value((-0.5 * t).exp() * r)? - profile.value(r)?)
}

/// Closed form of `[μ_t, φ] = μ_t∘φ∘μ_t^{-1}∘φ^{-1}` for the rotation with
/// profile `ρ`: `(r, θ) ↦ (r, θ − ρ(r) + ρ(e^{−t/2} r))`.
pub fn rotation_commutator_map(profile: &AngularProfile, t: f64) -> Result<SymplecticMapRep> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("commutator time must be non-negative, got {t}")));
    }
    let (f, g) = (profile.clone(), profile.clone());
    let radius = profile.support_radius() * LiouvilleFlow::factor(t);
    Ok(SymplecticMapRep::closed_form(
        2,
        Some(SupportBox::centered(2, radius)),
        format!("[mu_{t}, rot[{}]]", profile.label()),
        move |x| turn(x, |r| commutator_angle(&f, t, r)),
        move |x| turn(x, |r| Ok(-commutator_angle(&g, t, r)?)),
    ))
}

/// Largest `|det J − 1|` of `map` over quasi-random points of `region`
/// outside the disc of radius `exclusion` about the origin.
pub fn max_area_defect(map: &SymplecticMapRep, region: &SupportBox, count: usize, seed: u64, exclusion: f64) -> Result<f64> {
    let points = HaltonSampler::new(2, seed).points_in_box(&region.lower(), &region.upper(), count);
    let defects: Vec<Result<f64>> = points
        .par_iter()
        .filter(|x| x[0].hypot(x[1]) > exclusion)
        .map(|x| {
            let j = jacobian(map, x, 1e-5)?;
            Ok((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs())
        })
        .collect();
    let mut worst = 0.0f64;
    for d in defects {
        worst = worst.max(d?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Expression;
    use crate::geom::distance;
    use crate::hamflow::commutator_map;
    use crate::rotations::ProfileFlags;

    fn bump_profile() -> AngularProfile {
        let e = Expression::parse("2*bump(r)").unwrap();
        AngularProfile::from_expression(&e, 1.0, ProfileFlags::SMOOTH).unwrap()
    }

    #[test]
    fn zero_profile_is_identity() {
        let rot = FiberedRotation::new(AngularProfile::zero(1.0));
        assert_eq!(rotation_apply(&rot, &[0.3, 0.4]).unwrap(), vec![0.3, 0.4]);
    }

    #[test]
    fn unit_angle_at_half_radius() {
        let p = AngularProfile::from_fn(|r: f64| if r < 1.0 { 2.0 * r } else { 0.0 }, 1.0, ProfileFlags::SMOOTH, "2r").unwrap();
        let y = FiberedRotation::new(p).apply(&[0.5, 0.0]).unwrap();
        let (r, th) = cartesian_to_polar(&y);
        assert!((r - 0.5).abs() < 1e-15 && (th - 1.0).abs() < 1e-15);
    }

    #[test]
    fn area_and_radius_preserved() {
        let map = FiberedRotation::new(bump_profile()).to_map();
        let region = SupportBox::centered(2, 1.0);
        assert!(max_area_defect(&map, &region, 100, 3, 1e-3).unwrap() < 1e-6);
        for x in [[0.2, 0.1], [-0.5, 0.6], [0.0, -0.9]] {
            let y = map.apply(&x).unwrap();
            assert!((x[0].hypot(x[1]) - y[0].hypot(y[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_commutator_matches_composition() {
        let p = bump_profile();
        let rot = FiberedRotation::new(p.clone()).to_map();
        let flow = LiouvilleFlow::standard(2);
        for t in [0.0, 0.05, 0.1, 0.2] {
            let closed = rotation_commutator_map(&p, t).unwrap();
            let composed = commutator_map(&rot, &flow, t).unwrap();
            for x in [[0.1, 0.2], [0.6, -0.3], [-0.8, 0.5], [0.0, 1.05]] {
                let d = distance(&closed.apply(&x).unwrap(), &composed.apply(&x).unwrap());
                assert!(d < 1e-10, "t={t}: {d}");
            }
        }
    }

    #[test]
    fn constant_band_is_fixed() {
        let p = AngularProfile::from_fn(
            |r: f64| if r < 1.0 { 0.7 * crate::rotations::smooth_step((0.9 - r) / 0.3) } else { 0.0 },
            1.0,
            ProfileFlags::SMOOTH,
            "plateau",
        )
        .unwrap();
        let c = rotation_commutator_map(&p, 0.1).unwrap();
        let x = [0.4, 0.2];
        assert!(distance(&c.apply(&x).unwrap(), &x) < 1e-15);
    }
}
