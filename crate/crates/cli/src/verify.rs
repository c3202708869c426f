//! The verification suite: one check per acceptance criterion, each with a
//! measured value, a bound and a verdict.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use calabi_core::calabi::{
    alternate_liouville_invariance, calabi_eq1, commutator_calabi_directed, counterexample_study, extended_calabi_limit,
    homomorphism_check, CalabiOptions, ExtendedOptions,
};
use calabi_core::exprlang::Expression;
use calabi_core::genfun::{
    admissibility_from_slopes, genfun_from_map, hj_flow_residual, liouville_conjugated_genfun, mollify, psi_apply,
    psi_inverse_apply, resolve_hj_sign, GenFunPath, GeneratingFunction, GridSamples, MollifierKernel,
};
use calabi_core::geom::{distance, HaltonSampler, LiouvilleFlow, QuadratureRule, SupportBox, UniformGrid};
use calabi_core::hamflow::{c0_distance, commutator_map, HamiltonianField, SymplecticMapRep, DEFAULT_ITERATE_BUDGET};
use calabi_core::rotations::{
    angle_bound_diagnostic, commutator_hamiltonian_recovered, rotation_calabi_smooth, rotation_commutator_map,
    singular_profile_study, FiberedRotation, RadialRecoveryOptions,
};
use calabi_core::{Conventions, Result};

use crate::fixtures::{
    bump_profile, cubic_bump_rotation, log_profile, polynomial_genfun, saddle_genfun, tent_profile, BumpSpec,
};
use crate::run::{run_scenario, RunOptions};
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Coarse grids, for a fast end-to-end pass.
    Quick,
    /// The resolutions the acceptance bounds were set at.
    Full,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Quick => "quick",
            Level::Full => "full",
        }
    }

    fn pick<T>(self, quick: T, full: T) -> T {
        match self {
            Level::Quick => quick,
            Level::Full => full,
        }
    }
}

/// One row of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub id: u32,
    /// Short name of the identity being checked.
    pub anchor: &'static str,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Sub-measurements of a check; the verdict is their conjunction.
struct Parts {
    items: Vec<String>,
    pass: bool,
    /// Largest `value / bound` over the `at_most` parts.
    worst_ratio: f64,
}

impl Parts {
    fn new() -> Self {
        Self {
            items: Vec::new(),
            pass: true,
            worst_ratio: 0.0,
        }
    }

    fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        let ok = value <= bound;
        self.pass &= ok;
        self.worst_ratio = self.worst_ratio.max(value / bound);
        self.items.push(format!("{name}={value:.3e}<={bound:.1e}:{}", verdict(ok)));
    }

    fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        let ok = value >= bound;
        self.pass &= ok;
        self.items.push(format!("{name}={value:.3e}>={bound:.1e}:{}", verdict(ok)));
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.pass &= ok;
        self.items.push(format!("{name}:{}", verdict(ok)));
    }

    fn note(&mut self, text: String) {
        self.items.push(text);
    }

    fn detail(&self) -> String {
        self.items.join("; ")
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Result of the headline measurement and its parts.
struct Measured {
    value: f64,
    bound: f64,
    parts: Parts,
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn timed(id: u32, anchor: &'static str, f: impl FnOnce() -> Result<Measured>) -> CheckRow {
    let start = Instant::now();
    let out = f();
    let seconds = start.elapsed().as_secs_f64();
    match out {
        Ok(m) => CheckRow {
            id,
            anchor,
            measured: m.value,
            bound: m.bound,
            pass: m.parts.pass,
            detail: m.parts.detail(),
            seconds,
        },
        Err(e) => CheckRow {
            id,
            anchor,
            measured: f64::NAN,
            bound: f64::NAN,
            pass: false,
            detail: format!("error: {e}"),
            seconds,
        },
    }
}

fn cubic_bump_expression() -> Result<HamiltonianField> {
    let e = Expression::parse("max(0, 1-q1^2-p1^2)^3")?;
    HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 1.0))
}

/// Calabi invariant of `(1 − r²)³` by grid quadrature against `π/4`.
pub fn check_quadrature(level: Level) -> CheckRow {
    let start = Instant::now();
    let mut row = timed(1, "calabi-quadrature", || {
        let h = cubic_bump_expression()?;
        let r = calabi_eq1(&h, &CalabiOptions::default().with_cells(256))?;
        let err = relative(r.value, PI / 4.0);
        let mut parts = Parts::new();
        parts.at_most("relative_error", err, 5e-3);
        parts.note(format!("value={:.8} error_estimate={:.2e}", r.value, r.error_estimate));
        Ok(Measured {
            value: err,
            bound: 5e-3,
            parts,
        })
    });
    let _ = level;
    let secs = start.elapsed().as_secs_f64();
    if secs > 10.0 {
        row.pass = false;
        row.detail.push_str(&format!("; time {secs:.1}s>10s:FAIL"));
    }
    row
}

/// The pairs `(F, G)` of the homomorphism check: five planar pairs and one
/// pair in `R^4`.
pub fn homomorphism_fixtures() -> Vec<(BumpSpec, BumpSpec)> {
    let b = |a: f64| BumpSpec::centered(2, a);
    vec![
        (b(0.5), b(0.3).at(&[0.3, 0.0]).with_drift(1.0, 0)),
        (b(0.4).at(&[0.2, 0.1]).with_drift(0.5, 1), b(0.4)),
        (b(0.6).with_drift(-0.8, 0), b(-0.3).at(&[-0.2, 0.2])),
        (b(0.3).with_radius(0.8), b(0.5).at(&[0.1, -0.3]).with_drift(1.0, 1)),
        (b(0.5), b(0.5).with_drift(0.5, 0)),
        (
            BumpSpec::centered(4, 0.5),
            BumpSpec::centered(4, 0.3).at(&[0.2, 0.0, 0.0, 0.0]).with_drift(1.0, 0),
        ),
    ]
}

/// `|Cal(F#G) − Cal F − Cal G| / max(|Cal F|, |Cal G|)`.
pub fn check_homomorphism(level: Level, conv: &Conventions) -> CheckRow {
    let start = Instant::now();
    let mut row = timed(2, "calabi-homomorphism", || {
        let mut parts = Parts::new();
        let mut worst = 0.0f64;
        for (i, (f, g)) in homomorphism_fixtures().iter().enumerate() {
            let planar = f.center.len() == 2;
            let opts = if planar {
                CalabiOptions::default()
                    .with_cells(level.pick(32, 64))
                    .with_time_steps(4)
                    .with_rule(QuadratureRule::Trapezoid)
                    .with_steps_per_unit(50)
            } else {
                CalabiOptions::default()
                    .with_cells(16)
                    .with_time_steps(4)
                    .with_rule(QuadratureRule::Trapezoid)
                    .with_steps_per_unit(20)
            };
            let rep = homomorphism_check(&f.field()?, &g.field()?, conv.algebra, &opts)?;
            let d = rep.relative_composition_defect();
            worst = worst.max(d);
            parts.at_most(&format!("pair{}{}", i + 1, if planar { "" } else { "(R4)" }), d, 1e-2);
        }
        Ok(Measured {
            value: worst,
            bound: 1e-2,
            parts,
        })
    });
    let secs = start.elapsed().as_secs_f64();
    if secs > 120.0 {
        row.pass = false;
        row.detail.push_str(&format!("; time {secs:.1}s>120s:FAIL"));
    }
    row
}

/// `Cal([μ_δ, φ]) = (e^{(n+1)δ} − 1)·Cal(φ)` for `n = 1, 2`.
pub fn check_scaling_law(level: Level, conv: &Conventions) -> CheckRow {
    timed(3, "commutator-scaling-law", || {
        let mut parts = Parts::new();
        let mut worst = 0.0f64;
        for n in [1usize, 2] {
            let h = BumpSpec::centered(2 * n, 0.5).field()?;
            let opts = if n == 1 {
                CalabiOptions::default()
                    .with_cells(level.pick(64, 128))
                    .with_time_steps(4)
                    .with_rule(QuadratureRule::Trapezoid)
            } else {
                CalabiOptions::default()
                    .with_cells(16)
                    .with_time_steps(4)
                    .with_rule(QuadratureRule::Trapezoid)
                    .with_steps_per_unit(20)
            };
            let flow = LiouvilleFlow::standard(2 * n);
            for delta in [0.05, 0.1, 0.2] {
                let rep = commutator_calabi_directed(&h, delta, &flow, conv.algebra, conv.conjugation_forward, &opts)?;
                let gap = rep.relative_gap();
                worst = worst.max(gap);
                parts.at_most(&format!("n={n},delta={delta}"), gap, 1e-2);
            }
        }
        Ok(Measured {
            value: worst,
            bound: 1e-2,
            parts,
        })
    })
}

fn tilted_bump() -> Result<HamiltonianField> {
    let e = Expression::parse("0.5*bump(sqrt(q1^2+p1^2))*(1+0.5*q1)")?;
    HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 1.0))
}

fn extended_options(level: Level, conv: &Conventions) -> ExtendedOptions {
    ExtendedOptions {
        cells: level.pick(48, 64),
        hamiltonian_sign: conv.hamiltonian_sign,
        ..Default::default()
    }
}

/// Extrapolated extended Calabi against grid quadrature on a flow and on a
/// smooth fibered rotation.
pub fn check_limit_formula(level: Level, conv: &Conventions) -> CheckRow {
    timed(4, "extended-calabi-limit", || {
        let mut parts = Parts::new();
        let opts = extended_options(level, conv);
        let flow = LiouvilleFlow::standard(2);

        let h = tilted_bump()?;
        let cal = calabi_eq1(&h, &CalabiOptions::default())?.value;
        let phi = SymplecticMapRep::time_one(h, 100);
        let ext = extended_calabi_limit(&phi, &flow, &opts)?.extrapolated.value;
        let a = relative(ext, cal);
        parts.at_most("flow", a, 2e-2);
        parts.note(format!("flow: extended={ext:.6} quadrature={cal:.6}"));

        let profile = bump_profile(2.0)?;
        let rot = FiberedRotation::new(profile.clone()).to_map();
        let ext = extended_calabi_limit(&rot, &flow, &opts)?.extrapolated.value;
        let cal = calabi_eq1(
            &calabi_core::rotations::rotation_generator(&profile, 1.0, calabi_core::rotations::ROTATION_CELLS)?,
            &CalabiOptions::default().with_cells(256),
        )?
        .value;
        let b = relative(ext, cal);
        parts.at_most("rotation", b, 2e-2);
        parts.note(format!("rotation: extended={ext:.6} quadrature={cal:.6}"));
        Ok(Measured {
            value: a.max(b),
            bound: 2e-2,
            parts,
        })
    })
}

/// `h_n^{-1} φ^{n⁴} h_n`: constant Calabi value, shrinking `C⁰` size.
pub fn check_counterexample(level: Level) -> CheckRow {
    timed(5, "counterexample-sequence", || {
        let mut parts = Parts::new();
        let (h, phi) = cubic_bump_rotation(1.0)?;
        let opts = CalabiOptions::default().with_cells(level.pick(64, 128));
        let rows = counterexample_study(&h, &phi, &[1, 2, 3], &opts, level.pick(1024, 4096), 7, DEFAULT_ITERATE_BUDGET)?;
        let base = rows[0].calabi.value;
        let spread = rows.iter().map(|r| relative(r.calabi.value, base)).fold(0.0, f64::max);
        parts.at_most("calabi_spread", spread, 2e-2);
        parts.holds("c0_strictly_decreasing", rows.windows(2).all(|w| w[1].c0_distance < w[0].c0_distance));
        let cal: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.calabi.value)).collect();
        let c0: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.c0_distance)).collect();
        parts.note(format!("calabi=[{}] c0=[{}]", cal.join(","), c0.join(",")));
        Ok(Measured {
            value: spread,
            bound: 2e-2,
            parts,
        })
    })
}

/// Flow of `a·(1 − r²)₊⁵·(1 + 0.3q)`, close to the identity.
pub fn near_identity_flow(amplitude: f64) -> Result<SymplecticMapRep> {
    let h = HamiltonianField::from_fn_with_gradient(
        1,
        SupportBox::centered(2, 1.0),
        move |_, x| {
            let u = (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0);
            amplitude * u.powi(5) * (1.0 + 0.3 * x[0])
        },
        move |_, x, g| {
            let u = (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0);
            let w = 1.0 + 0.3 * x[0];
            g[0] = amplitude * (-10.0 * x[0] * u.powi(4) * w + 0.3 * u.powi(5));
            g[1] = amplitude * (-10.0 * x[1] * u.powi(4) * w);
        },
    )?
    .autonomous(true);
    Ok(SymplecticMapRep::time_one(h, 100))
}

/// Shear `(q, p) ↦ (q + a·(1 − r²)₊³, p)`, which is not area preserving.
pub fn shear_control(amplitude: f64) -> SymplecticMapRep {
    let shear = move |x: &[f64]| -> Result<Vec<f64>> {
        let u = (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0);
        Ok(vec![x[0] + amplitude * u.powi(3), x[1]])
    };
    SymplecticMapRep::closed_form(2, Some(SupportBox::centered(2, 1.0)), "shear", shear, |x| Ok(x.to_vec()))
}

/// `Ψ` round trip, `Ψ(S_φ) = φ` and the exactness residual of a
/// non-symplectic control.
pub fn check_generating_functions(level: Level) -> CheckRow {
    timed(6, "generating-function-chart", || {
        let mut parts = Parts::new();
        let s = polynomial_genfun(1, 0.04, 4, 0.3)?;
        let region = s.support().clone();
        let pts = HaltonSampler::new(2, 3).points_in_box(&region.lower(), &region.upper(), level.pick(200, 500));
        let mut rt = 0.0f64;
        for x in &pts {
            let y = psi_apply(&s, x)?;
            rt = rt.max(distance(&psi_inverse_apply(&s, &y)?, x));
        }
        parts.at_most("round_trip", rt, 1e-8);

        let phi = near_identity_flow(0.05)?;
        let section = genfun_from_map(&phi, 64)?;
        let psi = SymplecticMapRep::genfun(Arc::new(section.function.clone()));
        let d = c0_distance(&psi, &phi, &SupportBox::centered(2, 1.0), level.pick(100, 200), 1)?;
        parts.at_most("psi_of_section_vs_map", d, 1e-5);

        let control = genfun_from_map(&shear_control(0.05), 64)?;
        let ratio = control.exactness_residual / section.exactness_residual.max(f64::MIN_POSITIVE);
        parts.at_least("control_inflation", ratio, 1e3);
        parts.note(format!(
            "exactness: map={:.2e} control={:.2e}",
            section.exactness_residual, control.exactness_residual
        ));
        Ok(Measured {
            value: d,
            bound: 1e-5,
            parts,
        })
    })
}

/// The mollification fixtures; the second is only `C¹` across the unit
/// circle.
pub fn mollification_fixtures() -> Result<Vec<GeneratingFunction>> {
    Ok(vec![
        polynomial_genfun(1, 0.1, 4, 0.0)?,
        polynomial_genfun(1, 0.2, 2, 0.0)?,
        saddle_genfun(0.3)?,
    ])
}

/// Admissibility and monotone `C¹` convergence of `S * χ_k`.
pub fn check_mollification(level: Level) -> CheckRow {
    timed(7, "mollification", || {
        let _ = level;
        let mut parts = Parts::new();
        let grid = UniformGrid::over_box(&SupportBox::centered(2, 1.3).with_padding(0.0), 208)?;
        let mut worst_ratio = 0.0f64;
        for (i, s) in mollification_fixtures()?.iter().enumerate() {
            let base = GridSamples::of(s, &grid)?;
            let mut errors = Vec::new();
            let mut admissible = true;
            for k in [8u32, 16, 32] {
                let m = mollify(s, &MollifierKernel::new(1, k), &grid)?;
                admissible &= admissibility_from_slopes(&grid, &m.samples.slopes).pass;
                errors.push(base.c1_distance(&m.samples)?);
            }
            let ratio = errors.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            worst_ratio = worst_ratio.max(ratio);
            parts.holds(&format!("fixture{}_admissible", i + 1), admissible);
            parts.holds(&format!("fixture{}_decreasing", i + 1), ratio < 1.0);
            let e: Vec<String> = errors.iter().map(|v| format!("{v:.2e}")).collect();
            parts.note(format!("fixture{} c1=[{}]", i + 1, e.join(",")));
        }
        Ok(Measured {
            value: worst_ratio,
            bound: 1.0,
            parts,
        })
    })
}

/// The Hamilton–Jacobi fixtures, paths `t ↦ t·S` on `[0, 0.3]`.
pub fn hamilton_jacobi_fixtures() -> Result<Vec<GeneratingFunction>> {
    Ok(vec![
        polynomial_genfun(1, 0.15, 4, 0.4)?,
        saddle_genfun(0.3)?,
        polynomial_genfun(1, -0.1, 5, -0.3)?,
    ])
}

/// Flow of `σ·∂S_t/∂t` against `Ψ(S_t)`; the generator under the declared
/// convention `ι_X ω = s·dH` is `s·σ·∂S_t/∂t`.
pub fn check_hamilton_jacobi(level: Level, conv: &Conventions) -> CheckRow {
    timed(8, "hamilton-jacobi", || {
        let mut parts = Parts::new();
        let sign = conv.hj_sign * conv.hamiltonian_sign;
        let samples = level.pick(32, 64);
        let mut worst = 0.0f64;
        let mut resolved = Vec::new();
        for (i, s) in hamilton_jacobi_fixtures()?.into_iter().enumerate() {
            let path = GenFunPath::linear(s, (0.0, 0.3), 1e-3)?;
            let r = hj_flow_residual(&path, sign, samples, 3, 30, 3)?;
            worst = worst.max(r);
            parts.at_most(&format!("fixture{}", i + 1), r, 1e-4);
            resolved.push(resolve_hj_sign(&path, samples, 3, 30)?.sign);
        }
        parts.holds("sign_stable", resolved.iter().all(|s| *s == resolved[0]));
        parts.note(format!("resolved={resolved:?} used={sign:+}"));
        Ok(Measured {
            value: worst,
            bound: 1e-4,
            parts,
        })
    })
}

/// `Ψ(e^t S(e^{−t/2}·)) = μ_t ∘ Ψ(S) ∘ μ_t^{-1}`.
pub fn check_liouville_genfun(level: Level) -> CheckRow {
    timed(9, "liouville-conjugated-genfun", || {
        let mut parts = Parts::new();
        let s = polynomial_genfun(1, 0.1, 4, 0.3)?;
        let flow = LiouvilleFlow::standard(2);
        let mut worst = 0.0f64;
        for t in [0.1, 0.2] {
            let st = liouville_conjugated_genfun(&s, t);
            let region = st.support().clone();
            let pts = HaltonSampler::new(2, 5).points_in_box(&region.lower(), &region.upper(), level.pick(200, 500));
            let mut d = 0.0f64;
            for x in &pts {
                let direct = psi_apply(&st, x)?;
                let conj = flow.apply(t, &psi_apply(&s, &flow.apply(-t, x))?);
                d = d.max(distance(&direct, &conj));
            }
            worst = worst.max(d);
            parts.at_most(&format!("t={t}"), d, 1e-7);
        }
        Ok(Measured {
            value: worst,
            bound: 1e-7,
            parts,
        })
    })
}

/// Closed-form commutators, recovered generators, smooth and singular
/// Calabi values and the angle diagnostic for fibered rotations. The
/// headline is the worst `value / bound` over the bounded parts.
pub fn check_rotations(level: Level, conv: &Conventions) -> CheckRow {
    timed(10, "fibered-rotations", || {
        let mut parts = Parts::new();
        let bump = bump_profile(2.0)?;
        let rot = FiberedRotation::new(bump.clone()).to_map();
        let flow = LiouvilleFlow::standard(2);
        let pts = HaltonSampler::new(2, 9).points_in_box(&[-1.2, -1.2], &[1.2, 1.2], 64);
        let mut closed = 0.0f64;
        for t in [0.05, 0.1, 0.2] {
            let a = rotation_commutator_map(&bump, t)?;
            let b = commutator_map(&rot, &flow, t)?;
            for x in &pts {
                closed = closed.max(distance(&a.apply(x)?, &b.apply(x)?));
            }
        }
        parts.at_most("closed_vs_composed", closed, 1e-10);

        let opts = RadialRecoveryOptions {
            time_steps: 8,
            hamiltonian_sign: conv.hamiltonian_sign,
            ..Default::default()
        };
        let rec = commutator_hamiltonian_recovered(&bump, &opts)?;
        parts.at_most("recovered_flow_match", rec.flow_residual(level.pick(64, 128), 2, 200)?, 1e-4);

        match rotation_calabi_smooth(&tent_profile(1.0)?, conv.hamiltonian_sign) {
            Ok(rc) => parts.at_most("tent_calabi_vs_pi/12", relative(rc.calabi.value.abs(), PI / 12.0), 1e-2),
            Err(e) => {
                parts.holds("tent_calabi_vs_pi/12", false);
                parts.note(format!("tent: {e}"));
            }
        }

        let study = singular_profile_study(&log_profile()?, &[0.08, 0.04, 0.02, 0.01], &RadialRecoveryOptions { time_steps: 4, ..opts })?;
        let gap = study.final_calabi_gap().unwrap_or(f64::INFINITY);
        parts.at_most("log_profile_cauchy_gap", gap, 2e-2);

        let log_rep = angle_bound_diagnostic(&FiberedRotation::new(log_profile()?).to_map(), 1.0, 12)?;
        let bump_rep = angle_bound_diagnostic(&FiberedRotation::new(bump_profile(1.0)?).to_map(), 1.0, 12)?;
        parts.holds("angle_flags_log", log_rep.obstructed);
        parts.holds("angle_clears_bounded", !bump_rep.obstructed);
        Ok(Measured {
            value: parts.worst_ratio,
            bound: 1.0,
            parts,
        })
    })
}

/// Extended Calabi with Liouville centers `0` and `(0.3, 0)`.
pub fn check_alternate_center(level: Level, conv: &Conventions) -> CheckRow {
    timed(11, "alternate-liouville-center", || {
        let mut parts = Parts::new();
        let phi = SymplecticMapRep::time_one(tilted_bump()?, 100);
        let rep = alternate_liouville_invariance(&phi, &[0.3, 0.0], &extended_options(level, conv))?;
        let gap = rep.relative_gap();
        parts.at_most("relative_gap", gap, 2e-2);
        parts.note(format!(
            "standard={:.6} shifted={:.6}",
            rep.standard.extrapolated.value, rep.shifted.extrapolated.value
        ));
        Ok(Measured {
            value: gap,
            bound: 2e-2,
            parts,
        })
    })
}

/// A small scenario exercising several task kinds, used for rerun checks.
pub const REPRODUCIBILITY_SCENARIO: &str = r#"{
  "dimension": 1,
  "hamiltonians": {
    "H0": { "expr": "max(0, 1-q1^2-p1^2)^3", "radius": 1.0 },
    "G": { "expr": "0.3*bump(sqrt((q1-0.2)^2+p1^2))*(1+t*q1)", "radius": 1.0, "center": [0.2, 0.0] }
  },
  "generating_functions": {
    "S": { "expr": "0.04*bump(sqrt(x1^2+eta1^2))*(1+0.5*x1)", "radius": 1.0 }
  },
  "profiles": {
    "tent": { "expr": "max(0, 1-r^2)", "radius": 1.0 }
  },
  "tasks": [
    { "kind": "calabi", "hamiltonian": "H0", "grid": 64 },
    { "kind": "commutator_study", "hamiltonian": "H0", "grid": 32, "steps": 2, "deltas": [0.1, 0.2] },
    { "kind": "flow", "hamiltonian": "G", "samples": 8, "seed": 4 },
    { "kind": "genfun", "genfun": "S", "samples": 8, "seed": 4 },
    { "kind": "rotation_commutator", "profile": "tent", "steps": 2, "samples": 4, "grid": 2000 }
  ]
}
"#;

fn scratch_dir(tag: &str) -> PathBuf {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos());
    std::env::temp_dir().join(format!("calabi-{tag}-{}-{nanos}", std::process::id()))
}

/// Runs `scenario` serially twice and compares every CSV byte for byte.
pub fn serial_reruns_identical(scenario: &Path, conv: &Conventions) -> std::result::Result<usize, String> {
    let opts = RunOptions {
        conventions: *conv,
        serial: true,
        ..Default::default()
    };
    let dirs = [scratch_dir("rerun-a"), scratch_dir("rerun-b")];
    let mut outputs = Vec::new();
    for dir in &dirs {
        let report = run_scenario(scenario, dir, &opts).map_err(|e| e.to_string())?;
        if report.exit_code() != 0 {
            return Err(format!("rerun exited with {}", report.exit_code()));
        }
        let mut files = Vec::new();
        for t in &report.manifest.tasks {
            let name = t.csv.clone().ok_or_else(|| format!("task {} wrote no CSV", t.index))?;
            files.push(std::fs::read(dir.join(&name)).map_err(|e| e.to_string())?);
        }
        outputs.push(files);
    }
    for dir in &dirs {
        let _ = std::fs::remove_dir_all(dir);
    }
    if outputs[0] == outputs[1] {
        Ok(outputs[0].len())
    } else {
        Err("serial reruns differ".into())
    }
}

/// Serial reruns are byte-identical and the quick suite fits its budget.
fn check_reproducibility(level: Level, conv: &Conventions, elapsed_before: f64) -> CheckRow {
    let start = Instant::now();
    let mut parts = Parts::new();
    let scenario = scratch_dir("scenario").with_extension("json");
    let outcome = std::fs::write(&scenario, REPRODUCIBILITY_SCENARIO)
        .map_err(|e| e.to_string())
        .and_then(|_| serial_reruns_identical(&scenario, conv));
    let _ = std::fs::remove_file(&scenario);
    match outcome {
        Ok(files) => parts.holds(&format!("serial_reruns_identical({files} csv)"), true),
        Err(e) => parts.holds(&format!("serial_reruns_identical({e})"), false),
    }
    let seconds = start.elapsed().as_secs_f64();
    let total = elapsed_before + seconds;
    let budget = match level {
        Level::Quick => 300.0,
        Level::Full => f64::INFINITY,
    };
    parts.at_most("suite_seconds", total, budget);
    CheckRow {
        id: 12,
        anchor: "reproducibility",
        measured: total,
        bound: budget,
        pass: parts.pass,
        detail: parts.detail(),
        seconds,
    }
}

/// Every check of the suite, in criterion order.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub level: Level,
    pub conventions: Conventions,
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.failures() > 0)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["check", "anchor", "measured", "bound", "verdict", "seconds", "detail"]);
        for r in &self.rows {
            t.push(vec![
                r.id.into(),
                r.anchor.into(),
                r.measured.into(),
                r.bound.into(),
                verdict(r.pass).into(),
                r.seconds.into(),
                Cell::Text(r.detail.clone()),
            ]);
        }
        t
    }

    /// Fixed-width text rendering, one line per check.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<5} {:<28} {:>12} {:>10} {:<7} {:>8}\n",
            "check", "anchor", "measured", "bound", "verdict", "seconds"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<5} {:<28} {:>12.4e} {:>10.1e} {:<7} {:>8.1}  {}\n",
                r.id,
                r.anchor,
                r.measured,
                r.bound,
                verdict(r.pass),
                r.seconds,
                r.detail
            ));
        }
        out
    }
}

/// Runs checks 1 through 12 under `conv`.
pub fn verify_suite(level: Level, conv: &Conventions) -> VerifyReport {
    let start = Instant::now();
    let mut rows = vec![
        check_quadrature(level),
        check_homomorphism(level, conv),
        check_scaling_law(level, conv),
        check_limit_formula(level, conv),
        check_counterexample(level),
        check_generating_functions(level),
        check_mollification(level),
        check_hamilton_jacobi(level, conv),
        check_liouville_genfun(level),
        check_rotations(level, conv),
        check_alternate_center(level, conv),
    ];
    rows.push(check_reproducibility(level, conv, start.elapsed().as_secs_f64()));
    VerifyReport {
        level,
        conventions: *conv,
        rows,
    }
}
