use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use super::{rotation_commutator_map, AngularProfile, FiberedRotation};
use crate::calabi::{CalabiMethod, CalabiResult};
use crate::error::{Error, Result};
use crate::geom::{lagrange_weights, LiouvilleFlow, SupportBox};
use crate::hamflow::{c0_distance, flow_match_residual, FnSourceFallible, HamiltonianField, SymplecticMapRep};

/// Absolute tolerance of the tanh–sinh quadratures.
const RADIAL_TOLERANCE: f64 = 1e-11;

fn integrate_radial(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let out = quadrature::double_exponential::integrate(f, a, b, RADIAL_TOLERANCE);
    if !out.integral.is_finite() || !(out.error_estimate <= 1e-6 * out.integral.abs().max(1.0)) {
        return Err(Error::NonConvergence(format!(
            "radial quadrature on [{a}, {b}] did not converge (estimate {:.3e})",
            out.error_estimate
        )));
    }
    Ok(out.integral)
}

/// The printed commutator Hamiltonian
/// `r·ρ(e^{−t/2} r) − ½∫₀^r ρ(e^{−t/2} s) ds`.
///
/// The integral uses tanh–sinh quadrature, which tolerates an integrable
/// singularity at the origin; profiles not flagged integrable are refused.
pub fn commutator_hamiltonian_literal(profile: &AngularProfile, t: f64, r: f64) -> Result<f64> {
    if !profile.flags().integrable_near_zero {
        return Err(Error::InvalidArgument(format!(
            "profile {} is not integrable near the origin",
            profile.label()
        )));
    }
    if r <= 0.0 {
        return Ok(0.0);
    }
    let shrink = (-0.5 * t).exp();
    let upper = r.min(profile.support_radius() / shrink);
    // Evaluation errors inside the integrand surface as NaN and fail the
    // convergence check.
    let integral = integrate_radial(|s| profile.value(shrink * s).unwrap_or(f64::NAN), 0.0, upper)?;
    Ok(r * profile.value(shrink * r)? - 0.5 * integral)
}

fn check_sign(sign: f64) -> Result<()> {
    if sign.abs() != 1.0 {
        return Err(Error::InvalidArgument(format!("convention sign must be ±1, got {sign}")));
    }
    Ok(())
}

/// Tabulated radial function with linear interpolation.
#[derive(Debug, Clone)]
struct RadialTable {
    outer: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl RadialTable {
    /// `values[j] = −∫_{r_j}^{outer} slope` on `cells + 1` uniform nodes.
    fn from_slopes(outer: f64, slopes: Vec<f64>) -> Self {
        let cells = slopes.len() - 1;
        let h = outer / cells as f64;
        let mut values = vec![0.0; cells + 1];
        for j in (0..cells).rev() {
            values[j] = values[j + 1] - 0.5 * h * (slopes[j] + slopes[j + 1]);
        }
        Self { outer, values, slopes }
    }

    fn locate(&self, r: f64) -> Option<(usize, f64)> {
        if r >= self.outer {
            return None;
        }
        let cells = self.values.len() - 1;
        let s = r / self.outer * cells as f64;
        let j = (s.floor() as usize).min(cells - 1);
        Some((j, s - j as f64))
    }

    fn value(&self, r: f64) -> f64 {
        self.locate(r)
            .map_or(0.0, |(j, u)| (1.0 - u) * self.values[j] + u * self.values[j + 1])
    }

    fn slope(&self, r: f64) -> f64 {
        self.locate(r)
            .map_or(0.0, |(j, u)| (1.0 - u) * self.slopes[j] + u * self.slopes[j + 1])
    }

    /// `2π∫₀^outer h(r) r dr` by composite Simpson on every `stride`-th node.
    fn area_integral(&self, stride: usize) -> f64 {
        let cells = (self.values.len() - 1) / stride;
        let h = self.outer / cells as f64;
        let f = |i: usize| self.values[i * stride] * (i as f64 * h);
        let mut sum = f(0) + f(cells);
        for i in 1..cells {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
        }
        2.0 * PI * sum * h / 3.0
    }
}

fn radial_field(n_label: String, support: SupportBox, value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, slope: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<HamiltonianField> {
    let src = FnSourceFallible {
        value: move |t: f64, x: &[f64]| Ok(value(t, x[0].hypot(x[1]))),
        gradient: move |t: f64, x: &[f64], out: &mut [f64]| {
            let r = x[0].hypot(x[1]);
            if r == 0.0 {
                out.fill(0.0);
            } else {
                let d = slope(t, r) / r;
                out[0] = d * x[0];
                out[1] = d * x[1];
            }
            Ok(())
        },
    };
    Ok(HamiltonianField::from_source(Arc::new(src), 1, support)?.with_label(n_label))
}

/// Autonomous radial generator of the rotation: `h′(r) = −sign·r·ρ(r)`,
/// `h(R) = 0`, tabulated on `cells` radial intervals.
pub fn rotation_generator(profile: &AngularProfile, sign: f64, cells: usize) -> Result<HamiltonianField> {
    check_sign(sign)?;
    let table = Arc::new(rotation_table(profile, sign, cells)?);
    let (tv, tg) = (table.clone(), table);
    Ok(radial_field(
        format!("h[{}]", profile.label()),
        SupportBox::centered(2, profile.support_radius()),
        move |_, r| tv.value(r),
        move |_, r| tg.slope(r),
    )?
    .autonomous(true))
}

fn rotation_table(profile: &AngularProfile, sign: f64, cells: usize) -> Result<RadialTable> {
    let outer = profile.support_radius();
    let h = outer / cells as f64;
    let slopes = (0..=cells)
        .map(|j| {
            let r = j as f64 * h;
            Ok(-sign * r * profile.value(r)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialTable::from_slopes(outer, slopes))
}

/// Calabi value of a smooth fibered rotation and the flow residual that
/// confirms the sign of its generator.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationCalabi {
    pub calabi: CalabiResult,
    /// Sampled sup distance between the time-one flow of the generator and
    /// the rotation.
    pub flow_residual: f64,
}

/// Radial cells of the generator tables.
pub const ROTATION_CELLS: usize = 8192;
/// Bound on the flow residual confirming a rotation generator.
pub const ROTATION_FLOW_TOLERANCE: f64 = 1e-4;

/// `2π∫₀^R h(r) r dr` for the generator `h` of the rotation with a bounded
/// profile; fails if the flow of `h` does not reproduce the rotation.
pub fn rotation_calabi_smooth(profile: &AngularProfile, sign: f64) -> Result<RotationCalabi> {
    check_sign(sign)?;
    if !profile.flags().bounded {
        return Err(Error::InvalidArgument(format!("profile {} is not bounded", profile.label())));
    }
    let table = rotation_table(profile, sign, ROTATION_CELLS)?;
    let fine = table.area_integral(1);
    let coarse = table.area_integral(2);
    let generator = rotation_generator(profile, sign, ROTATION_CELLS)?;
    let rotation = FiberedRotation::new(profile.clone()).to_map();
    let region = SupportBox::centered(2, profile.support_radius());
    let flow_residual = flow_match_residual(&generator, &rotation, &region, 256, 11, 400)?;
    if flow_residual > ROTATION_FLOW_TOLERANCE {
        return Err(Error::FlowMismatch {
            residual: flow_residual,
            tolerance: ROTATION_FLOW_TOLERANCE,
            context: format!("generator of rotation {} with sign {sign:+}", profile.label()),
        });
    }
    Ok(RotationCalabi {
        calabi: CalabiResult {
            value: fine,
            method: CalabiMethod::Eq1Quadrature,
            cells: ROTATION_CELLS,
            time_steps: 0,
            error_estimate: (fine - coarse).abs(),
        },
        flow_residual,
    })
}

/// Resolution of [`commutator_hamiltonian_recovered`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialRecoveryOptions {
    /// Final time `δ` of the isotopy `t ↦ [μ_t, φ]`.
    pub delta: f64,
    /// Time intervals on `[0, δ]`.
    pub time_steps: usize,
    /// Radial intervals on `[0, R·e^{δ/2}]`.
    pub radial_cells: usize,
    /// `s` in `ι_{X_H} ω = s·dH`.
    pub hamiltonian_sign: f64,
}

impl Default for RadialRecoveryOptions {
    fn default() -> Self {
        Self {
            delta: 0.2,
            time_steps: 8,
            radial_cells: 20_000,
            hamiltonian_sign: 1.0,
        }
    }
}

/// Commutator generator recovered from the closed-form isotopy.
#[derive(Debug, Clone)]
pub struct RecoveredRotationHamiltonian {
    pub field: HamiltonianField,
    pub times: Vec<f64>,
    tables: Arc<Vec<RadialTable>>,
    profile: AngularProfile,
    delta: f64,
}

/// Angular velocity `∂_t A(t, r)` of the commutator isotopy, by a five-point
/// central difference of the wrapped angle of the closed-form maps.
fn angular_velocity(maps: &[SymplecticMapRep; 4], tau: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let base = [r, 0.0];
    let mut angles = [0.0; 4];
    for (a, m) in angles.iter_mut().zip(maps) {
        let y = m.apply(&base)?;
        *a = y[1].atan2(y[0]);
    }
    let wrap = |d: f64| (d + PI).rem_euclid(2.0 * PI) - PI;
    // Offsets relative to the angle at t − 2τ, unwrapped step by step.
    let mut lifted = [0.0; 4];
    for k in 1..4 {
        lifted[k] = lifted[k - 1] + wrap(angles[k] - angles[k - 1]);
    }
    Ok((lifted[0] - 8.0 * lifted[1] + 8.0 * lifted[2] - lifted[3]) / (12.0 * tau))
}

/// Recovers the generator of `t ↦ [μ_t, φ]` on `[0, δ]` for the rotation
/// with profile `ρ`. By rotational symmetry it is radial, with
/// `∂_r H(t, r) = −s·r·∂_t A(t, r)` where `A` is the commutator angle.
pub fn commutator_hamiltonian_recovered(profile: &AngularProfile, opts: &RadialRecoveryOptions) -> Result<RecoveredRotationHamiltonian> {
    check_sign(opts.hamiltonian_sign)?;
    if !(opts.delta > 0.0) || opts.time_steps == 0 || opts.radial_cells < 16 {
        return Err(Error::InvalidArgument("recovery needs δ > 0, a time step and at least 16 radial cells".into()));
    }
    let outer = profile.support_radius() * LiouvilleFlow::factor(opts.delta);
    let tau = 1e-3 * opts.delta;
    let times: Vec<f64> = (0..=opts.time_steps)
        .map(|k| opts.delta * k as f64 / opts.time_steps as f64)
        .collect();
    let h = outer / opts.radial_cells as f64;
    let tables = times
        .iter()
        .map(|&t| {
            // Negative times are fine for the closed form; reflect them so
            // the map constructor accepts them.
            let at = |s: f64| commutator_map_any_time(profile, s);
            let maps = [at(t - 2.0 * tau)?, at(t - tau)?, at(t + tau)?, at(t + 2.0 * tau)?];
            let slopes: Vec<Result<f64>> = (0..=opts.radial_cells)
                .into_par_iter()
                .map(|j| {
                    let r = j as f64 * h;
                    Ok(-opts.hamiltonian_sign * r * angular_velocity(&maps, tau, r)?)
                })
                .collect();
            Ok(RadialTable::from_slopes(outer, slopes.into_iter().collect::<Result<_>>()?))
        })
        .collect::<Result<Vec<_>>>()?;
    let tables = Arc::new(tables);
    let (tv, tg) = (tables.clone(), tables.clone());
    let (times_v, times_g) = (times.clone(), times.clone());
    let field = radial_field(
        format!("comm[{}]", profile.label()),
        SupportBox::centered(2, outer),
        move |t, r| time_interpolate(&times_v, t, |k| tv[k].value(r)),
        move |t, r| time_interpolate(&times_g, t, |k| tg[k].slope(r)),
    )?
    .with_time_interval(0.0, opts.delta);
    Ok(RecoveredRotationHamiltonian {
        field,
        times,
        tables,
        profile: profile.clone(),
        delta: opts.delta,
    })
}

/// Closed-form commutator angle map for any real `t`.
fn commutator_map_any_time(profile: &AngularProfile, t: f64) -> Result<SymplecticMapRep> {
    if t >= 0.0 {
        return rotation_commutator_map(profile, t);
    }
    let turn = |sign: f64| {
        let p = profile.clone();
        move |x: &[f64]| -> Result<Vec<f64>> {
            let a = sign * super::commutator_angle(&p, t, x[0].hypot(x[1]))?;
            let (s, c) = a.sin_cos();
            Ok(vec![c * x[0] - s * x[1], s * x[0] + c * x[1]])
        }
    };
    Ok(SymplecticMapRep::closed_form(2, None, "comm", turn(1.0), turn(-1.0)))
}

/// Cubic Lagrange interpolation in time over uniform samples (linear when
/// fewer than four).
fn time_interpolate(times: &[f64], t: f64, at: impl Fn(usize) -> f64) -> f64 {
    let len = times.len();
    if len == 1 {
        return at(0);
    }
    let (t0, t1) = (times[0], times[len - 1]);
    let s = (t.clamp(t0, t1) - t0) / (t1 - t0) * (len - 1) as f64;
    if len < 4 {
        let k = (s.floor() as usize).min(len - 2);
        let u = s - k as f64;
        return (1.0 - u) * at(k) + u * at(k + 1);
    }
    let cell = (s.floor() as isize).clamp(0, len as isize - 2);
    let start = (cell - 1).clamp(0, len as isize - 4) as usize;
    let w = lagrange_weights(s - start as f64);
    (0..4).map(|j| w[j] * at(start + j)).sum()
}

impl RecoveredRotationHamiltonian {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `H(t, r)` from the tables.
    pub fn radial_value(&self, t: f64, r: f64) -> f64 {
        time_interpolate(&self.times, t, |k| self.tables[k].value(r))
    }

    /// Sup distance between the flow of the recovered field from `0` to `δ`
    /// and the closed-form commutator at `δ`.
    pub fn flow_residual(&self, samples: usize, seed: u64, steps: usize) -> Result<f64> {
        let flow = SymplecticMapRep::flow(self.field.clone(), 0.0, self.delta, steps);
        let target = rotation_commutator_map(&self.profile, self.delta)?;
        c0_distance(&flow, &target, self.field.support(), samples, seed)
    }

    /// Largest spread of `H(t, ·)` over `angles` directions, across
    /// `radii` radii.
    pub fn theta_variation(&self, t: f64, radii: usize, angles: usize) -> Result<f64> {
        let outer = self.field.support().radius;
        let mut worst = 0.0f64;
        for i in 1..=radii {
            let r = outer * i as f64 / (radii + 1) as f64;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..angles {
                let th = 2.0 * PI * k as f64 / angles as f64 + 0.1;
                let v = self.field.value(t, &[r * th.cos(), r * th.sin()])?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            worst = worst.max(hi - lo);
        }
        Ok(worst)
    }

    /// Extended Calabi `(1/2)∫ H(0, ·)` over the plane, with the estimate
    /// from every other radial node.
    pub fn extended_calabi(&self) -> CalabiResult {
        let table = &self.tables[0];
        let fine = 0.5 * table.area_integral(1);
        let coarse = 0.5 * table.area_integral(2);
        CalabiResult {
            value: fine,
            method: CalabiMethod::Extended,
            cells: table.values.len() - 1,
            time_steps: self.times.len() - 1,
            error_estimate: (fine - coarse).abs(),
        }
    }

    /// Sup of `|H − H'|` over the shared time samples and radial nodes.
    pub fn sup_gap(&self, other: &RecoveredRotationHamiltonian) -> Result<f64> {
        if self.times != other.times || self.tables[0].values.len() != other.tables[0].values.len() {
            return Err(Error::InvalidArgument("recovered Hamiltonians live on different grids".into()));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.tables.iter().zip(other.tables.iter()) {
            for (x, y) in a.values.iter().zip(&b.values) {
                worst = worst.max((x - y).abs());
            }
        }
        Ok(worst)
    }
}

/// Literal and recovered commutator Hamiltonians side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiteralComparison {
    pub r: f64,
    pub literal: f64,
    pub recovered: f64,
}

pub fn literal_vs_recovered(rec: &RecoveredRotationHamiltonian, t: f64, radii: &[f64]) -> Result<Vec<LiteralComparison>> {
    radii
        .iter()
        .map(|&r| {
            Ok(LiteralComparison {
                r,
                literal: commutator_hamiltonian_literal(&rec.profile, t, r)?,
                recovered: rec.radial_value(t, r),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calabi::{calabi_eq1, CalabiOptions};
    use crate::exprlang::Expression;
    use crate::rotations::ProfileFlags;

    fn profile(src: &str, flags: ProfileFlags) -> AngularProfile {
        AngularProfile::from_expression(&Expression::parse(src).unwrap(), 1.0, flags).unwrap()
    }

    fn log_flags() -> ProfileFlags {
        ProfileFlags {
            integrable_near_zero: true,
            r_rho_to_zero: true,
            bounded: false,
        }
    }

    /// `H(t, r) = (r²/2)ρ(u) + e^t∫_u^∞ vρ(v) dv` with `u = e^{−t/2} r`,
    /// whose radial derivative is `−r·∂_t A`.
    fn oracle(p: &AngularProfile, t: f64, r: f64) -> f64 {
        let u = (-0.5 * t).exp() * r;
        let tail = integrate_radial(|v| v * p.value(v).unwrap(), u, p.support_radius()).unwrap();
        0.5 * r * r * p.value(u).unwrap() + t.exp() * tail
    }

    #[test]
    fn zero_profile_gives_zero_hamiltonians() {
        let p = AngularProfile::zero(1.0);
        assert_eq!(commutator_hamiltonian_literal(&p, 0.1, 0.5).unwrap(), 0.0);
        let rec = commutator_hamiltonian_recovered(&p, &RadialRecoveryOptions { radial_cells: 64, ..Default::default() }).unwrap();
        assert_eq!(rec.field.value(0.1, &[0.3, 0.2]).unwrap(), 0.0);
    }

    #[test]
    fn literal_is_finite_for_log_profile() {
        let p = profile("-log(r)*bump(r)", log_flags());
        for r in [1e-6, 1e-3, 0.1, 0.5, 0.99] {
            assert!(commutator_hamiltonian_literal(&p, 0.1, r).unwrap().is_finite());
        }
    }

    #[test]
    fn smooth_rotation_calabi() {
        let p = profile("max(0, 1-r^2)", ProfileFlags::SMOOTH);
        let rc = rotation_calabi_smooth(&p, 1.0).unwrap();
        assert!((rc.calabi.value - PI / 12.0).abs() < 1e-6, "{rc:?}");
        let eq1 = calabi_eq1(&rotation_generator(&p, 1.0, ROTATION_CELLS).unwrap(), &CalabiOptions::default().with_cells(256)).unwrap();
        assert!((eq1.value - rc.calabi.value).abs() / rc.calabi.value < 1e-2, "{eq1:?}");
        assert!(matches!(rotation_calabi_smooth(&p, -1.0), Err(Error::FlowMismatch { .. })));
    }

    #[test]
    fn recovered_matches_oracle_and_regenerates_isotopy() {
        let p = profile("2*bump(r)", ProfileFlags::SMOOTH);
        let rec = commutator_hamiltonian_recovered(&p, &RadialRecoveryOptions::default()).unwrap();
        for t in [0.0, 0.1, 0.2] {
            for r in [0.05, 0.3, 0.6, 0.9, 1.05] {
                let d = (rec.radial_value(t, r) - oracle(&p, t, r)).abs();
                assert!(d < 1e-6, "t={t} r={r}: {d}");
            }
        }
        assert!(rec.theta_variation(0.1, 16, 12).unwrap() < 1e-6);
        let res = rec.flow_residual(128, 2, 200).unwrap();
        assert!(res < 1e-4, "{res}");
    }

    #[test]
    fn extended_calabi_of_commutator_matches_rotation_calabi() {
        let p = profile("2*bump(r)", ProfileFlags::SMOOTH);
        let rec = commutator_hamiltonian_recovered(&p, &RadialRecoveryOptions::default()).unwrap();
        let ext = rec.extended_calabi().value;
        let cal = rotation_calabi_smooth(&p, 1.0).unwrap().calabi.value;
        assert!((ext - cal).abs() / cal < 1e-3, "{ext} vs {cal}");
    }
}
