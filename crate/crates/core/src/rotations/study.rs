use std::f64::consts::PI;

use super::{commutator_hamiltonian_recovered, AngularProfile, RadialRecoveryOptions};
use crate::calabi::CalabiResult;
use crate::error::{Error, Result};
use crate::hamflow::SymplecticMapRep;

/// One smoothing level of [`singular_profile_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingRow {
    pub eps: f64,
    /// Sup distance between the smoothed and the singular rotation.
    pub map_distance: f64,
    /// Sup over `[0, δ]` of the gap to the previous level's commutator
    /// Hamiltonian (`None` at the first level).
    pub hamiltonian_gap: Option<f64>,
    pub extended_calabi: CalabiResult,
    /// Relative gap to the previous level's extended Calabi value.
    pub calabi_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularStudy {
    pub rows: Vec<SmoothingRow>,
}

impl SingularStudy {
    /// Relative extended-Calabi gap between the last two levels.
    pub fn final_calabi_gap(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.calabi_gap)
    }

    pub fn map_distances_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].map_distance < w[0].map_distance)
    }

    pub fn hamiltonian_gaps_decrease(&self) -> bool {
        let gaps: Vec<f64> = self.rows.iter().filter_map(|r| r.hamiltonian_gap).collect();
        gaps.windows(2).all(|w| w[1] < w[0])
    }
}

/// Sup over `r` of `2r·|sin((ρ₁(r) − ρ₂(r))/2)|`, the distance between two
/// fibered rotations, on `count` radii in `(0, r_max]`.
pub fn rotation_distance(a: &AngularProfile, b: &AngularProfile, r_max: f64, count: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 1..=count {
        let r = r_max * i as f64 / count as f64;
        let d = a.value(r)? - b.value(r)?;
        worst = worst.max(2.0 * r * (0.5 * d).sin().abs());
    }
    Ok(worst)
}

/// Smooths `profile` at each cutoff in `cutoffs` (decreasing) and measures
/// convergence of the rotations, their commutator Hamiltonians and their
/// extended Calabi values.
pub fn singular_profile_study(profile: &AngularProfile, cutoffs: &[f64], opts: &RadialRecoveryOptions) -> Result<SingularStudy> {
    let flags = profile.flags();
    if !(flags.integrable_near_zero && flags.r_rho_to_zero) {
        return Err(Error::InvalidArgument(format!(
            "profile {} must be integrable near 0 with r·ρ(r) → 0",
            profile.label()
        )));
    }
    if cutoffs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("smoothing cutoffs must decrease".into()));
    }
    let mut rows: Vec<SmoothingRow> = Vec::with_capacity(cutoffs.len());
    let mut previous = None;
    for &eps in cutoffs {
        let smooth = profile.smoothed(eps)?;
        let map_distance = rotation_distance(&smooth, profile, 2.0 * eps, 4000)?;
        let rec = commutator_hamiltonian_recovered(&smooth, opts)?;
        let extended_calabi = rec.extended_calabi();
        let (hamiltonian_gap, calabi_gap) = match (&previous, rows.last()) {
            (Some(prev), Some(last)) => (
                Some(rec.sup_gap(prev)?),
                Some((extended_calabi.value - last.extended_calabi.value).abs() / extended_calabi.value.abs()),
            ),
            _ => (None, None),
        };
        rows.push(SmoothingRow {
            eps,
            map_distance,
            hamiltonian_gap,
            extended_calabi,
            calabi_gap,
        });
        previous = Some(rec);
    }
    Ok(SingularStudy { rows })
}

/// Winding estimates of a map at shrinking inner radii.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleBoundReport {
    pub inner_radii: Vec<f64>,
    /// Sup of the unwrapped angular displacement on `[inner_radius, R]`.
    pub estimates: Vec<f64>,
    /// The estimate exceeds `π` and still grows at the finest level.
    pub obstructed: bool,
}

impl AngleBoundReport {
    pub fn final_estimate(&self) -> f64 {
        self.estimates.last().copied().unwrap_or(0.0)
    }
}

/// Ratio between consecutive radii along each ray.
const RAY_RATIO: f64 = 0.98;
const RAYS: usize = 8;

/// Estimates how far `map` turns points around the origin. Along each of a
/// few rays the angular displacement is unwrapped continuously inwards from
/// `outer_radius`, where the map is the identity; level `j` reports the sup
/// over radii down to `outer_radius·2^{−j}`.
pub fn angle_bound_diagnostic(map: &SymplecticMapRep, outer_radius: f64, levels: usize) -> Result<AngleBoundReport> {
    let wrap = |d: f64| (d + PI).rem_euclid(2.0 * PI) - PI;
    let inner_radii: Vec<f64> = (1..=levels).map(|j| outer_radius * 0.5f64.powi(j as i32)).collect();
    let mut estimates = vec![0.0f64; levels];
    for k in 0..RAYS {
        let th = 2.0 * PI * (k as f64 + 0.25) / RAYS as f64;
        let (c, s) = (th.cos(), th.sin());
        let mut lifted = 0.0f64;
        let mut last = 0.0f64;
        let mut r = outer_radius;
        let mut level = 0;
        while level < levels {
            let y = map.apply(&[r * c, r * s])?;
            let disp = wrap(y[1].atan2(y[0]) - th);
            lifted += wrap(disp - last);
            last = disp;
            while level < levels && r < inner_radii[level] {
                level += 1;
            }
            for e in estimates.iter_mut().skip(level) {
                *e = e.max(lifted.abs());
            }
            r *= RAY_RATIO;
        }
    }
    let obstructed = match estimates.as_slice() {
        [.., prev, last] => *last > PI && *last > *prev,
        [only] => *only > PI,
        [] => false,
    };
    Ok(AngleBoundReport {
        inner_radii,
        estimates,
        obstructed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Expression;
    use crate::rotations::{FiberedRotation, ProfileFlags};

    fn log_profile() -> AngularProfile {
        let flags = ProfileFlags {
            integrable_near_zero: true,
            r_rho_to_zero: true,
            bounded: false,
        };
        AngularProfile::from_expression(&Expression::parse("-log(r)*bump(r)").unwrap(), 1.0, flags).unwrap()
    }

    #[test]
    fn identity_has_zero_angle() {
        let rep = angle_bound_diagnostic(&SymplecticMapRep::identity(2), 1.0, 6).unwrap();
        assert_eq!(rep.final_estimate(), 0.0);
        assert!(!rep.obstructed);
    }

    #[test]
    fn bounded_profile_clears_and_log_profile_flags() {
        let bounded = AngularProfile::from_expression(&Expression::parse("bump(r)").unwrap(), 1.0, ProfileFlags::SMOOTH).unwrap();
        let rep = angle_bound_diagnostic(&FiberedRotation::new(bounded).to_map(), 1.0, 12).unwrap();
        assert!(!rep.obstructed && (rep.final_estimate() - 1.0).abs() < 1e-3, "{rep:?}");
        let rep = angle_bound_diagnostic(&FiberedRotation::new(log_profile()).to_map(), 1.0, 12).unwrap();
        assert!(rep.obstructed, "{rep:?}");
    }

    #[test]
    fn flags_are_enforced() {
        let p = AngularProfile::from_fn(
            |r: f64| if r < 1.0 { 1.0 / r } else { 0.0 },
            1.0,
            ProfileFlags {
                integrable_near_zero: false,
                r_rho_to_zero: false,
                bounded: false,
            },
            "1/r",
        )
        .unwrap();
        assert!(singular_profile_study(&p, &[0.1, 0.05], &RadialRecoveryOptions::default()).is_err());
    }

    #[test]
    fn log_profile_smoothings_converge() {
        let opts = RadialRecoveryOptions {
            time_steps: 4,
            ..Default::default()
        };
        let study = singular_profile_study(&log_profile(), &[0.08, 0.04, 0.02, 0.01], &opts).unwrap();
        assert!(study.map_distances_decrease(), "{study:?}");
        assert!(study.hamiltonian_gaps_decrease(), "{study:?}");
        assert!(study.final_calabi_gap().unwrap() < 2e-2, "{study:?}");
    }
}
