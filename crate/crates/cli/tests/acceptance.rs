//! Acceptance criteria, each checked against an independent oracle. Prints
//! one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::error::Error;
use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use calabi_cli::fixtures::{bump_integral, bump_profile, cubic_bump_rotation, log_profile, polynomial_genfun, tent_profile, BumpSpec};
use calabi_cli::verify::{
    hamilton_jacobi_fixtures, homomorphism_fixtures, mollification_fixtures, near_identity_flow, shear_control,
    REPRODUCIBILITY_SCENARIO,
};
use calabi_core::calabi::{
    alternate_liouville_invariance, calabi_eq1, commutator_calabi, counterexample_study, extended_calabi_limit,
    homomorphism_check, CalabiOptions, ExtendedOptions,
};
use calabi_core::exprlang::{bump, Expression};
use calabi_core::genfun::{
    admissibility_from_slopes, genfun_from_map, hj_flow_residual, liouville_conjugated_genfun, mollify, psi_apply,
    psi_inverse_apply, resolve_hj_sign, GenFunPath, GridSamples, MollifierKernel, HJ_SIGN,
};
use calabi_core::geom::{distance, HaltonSampler, LiouvilleFlow, QuadratureRule, SupportBox, UniformGrid};
use calabi_core::hamflow::{c0_distance, AlgebraVariant, commutator_map, HamiltonianField, SymplecticMapRep, DEFAULT_ITERATE_BUDGET};
use calabi_core::rotations::{
    angle_bound_diagnostic, commutator_hamiltonian_recovered, rotation_calabi_smooth, rotation_commutator_map,
    singular_profile_study, FiberedRotation, RadialRecoveryOptions,
};

type Outcome = Result<(bool, String), Box<dyn Error>>;
type Criterion = (&'static str, fn() -> Outcome);

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let inner: f64 = (1..intervals)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `Cal` of the rotation by `ρ(r)`: `π ∫ ρ(s) s³ ds`.
fn rotation_calabi_oracle(rho: impl Fn(f64) -> f64) -> f64 {
    PI * simpson(|s| rho(s) * s.powi(3), 0.0, 1.0, 20_000)
}

fn cubic_bump() -> Result<HamiltonianField, Box<dyn Error>> {
    let e = Expression::parse("max(0, 1-q1^2-p1^2)^3")?;
    Ok(HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 1.0))?)
}

fn tilted_bump() -> Result<HamiltonianField, Box<dyn Error>> {
    let e = Expression::parse("0.5*bump(sqrt(q1^2+p1^2))*(1+0.5*q1)")?;
    Ok(HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 1.0))?)
}

fn quadrature() -> Outcome {
    let start = Instant::now();
    let r = calabi_eq1(&cubic_bump()?, &CalabiOptions::default().with_cells(256))?;
    let secs = start.elapsed().as_secs_f64();
    let err = rel(r.value, PI / 4.0);
    Ok((err < 5e-3 && secs < 10.0, format!("value={:.8} rel_err={err:.2e} time={secs:.2}s", r.value)))
}

fn homomorphism() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (f, g) in homomorphism_fixtures() {
        let opts = if f.center.len() == 2 {
            CalabiOptions::default().with_cells(64).with_time_steps(4).with_rule(QuadratureRule::Trapezoid).with_steps_per_unit(50)
        } else {
            CalabiOptions::default().with_cells(16).with_time_steps(4).with_rule(QuadratureRule::Trapezoid).with_steps_per_unit(20)
        };
        let rep = homomorphism_check(&f.field()?, &g.field()?, AlgebraVariant::Validated, &opts)?;
        let (a, b) = (bump_integral(&f), bump_integral(&g));
        worst = worst.max((rep.cal_composed.value - a - b).abs() / a.abs().max(b.abs()));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst < 1e-2 && secs < 120.0, format!("worst_rel_defect={worst:.2e} time={secs:.1}s")))
}

fn scaling_law() -> Outcome {
    let mut worst = 0.0f64;
    for n in [1usize, 2] {
        let spec = BumpSpec::centered(2 * n, 0.5);
        let h = spec.field()?;
        let cal = bump_integral(&spec);
        let opts = if n == 1 {
            CalabiOptions::default().with_cells(128).with_time_steps(4).with_rule(QuadratureRule::Trapezoid)
        } else {
            CalabiOptions::default().with_cells(16).with_time_steps(4).with_rule(QuadratureRule::Trapezoid).with_steps_per_unit(20)
        };
        for delta in [0.05, 0.1, 0.2] {
            let rep = commutator_calabi(&h, delta, &LiouvilleFlow::standard(2 * n), AlgebraVariant::Validated, &opts)?;
            let law = (((n + 1) as f64 * delta).exp() - 1.0) * cal;
            worst = worst.max(rel(rep.direct.value, law));
        }
    }
    Ok((worst < 1e-2, format!("worst_rel_gap={worst:.2e}")))
}

fn limit_formula() -> Outcome {
    let flow = LiouvilleFlow::standard(2);
    let opts = ExtendedOptions::default();
    let phi = SymplecticMapRep::time_one(tilted_bump()?, 100);
    let a = extended_calabi_limit(&phi, &flow, &opts)?.extrapolated.value;
    let oracle_a = bump_integral(&BumpSpec::centered(2, 0.5));
    let rot = FiberedRotation::new(bump_profile(2.0)?).to_map();
    let b = extended_calabi_limit(&rot, &flow, &opts)?.extrapolated.value;
    let oracle_b = rotation_calabi_oracle(|s| 2.0 * bump(s));
    let (ea, eb) = (rel(a, oracle_a), rel(b, oracle_b));
    Ok((ea < 2e-2 && eb < 2e-2, format!("flow={a:.6}/{oracle_a:.6} rotation={b:.6}/{oracle_b:.6}")))
}

fn counterexample() -> Outcome {
    let (h, phi) = cubic_bump_rotation(1.0)?;
    let rows = counterexample_study(&h, &phi, &[1, 2, 3], &CalabiOptions::default().with_cells(128), 4096, 7, DEFAULT_ITERATE_BUDGET)?;
    let spread = rows.iter().map(|r| rel(r.calabi.value, PI / 4.0)).fold(0.0, f64::max);
    let decreasing = rows.windows(2).all(|w| w[1].c0_distance < w[0].c0_distance);
    let cal: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.calabi.value)).collect();
    let c0: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.c0_distance)).collect();
    Ok((spread < 2e-2 && decreasing, format!("calabi=[{}] c0=[{}]", cal.join(","), c0.join(","))))
}

fn generating_functions() -> Outcome {
    let s = polynomial_genfun(1, 0.04, 4, 0.3)?;
    let region = s.support().clone();
    let mut rt = 0.0f64;
    for x in HaltonSampler::new(2, 11).points_in_box(&region.lower(), &region.upper(), 500) {
        let y = psi_apply(&s, &x)?;
        rt = rt.max(distance(&psi_inverse_apply(&s, &y)?, &x));
    }
    let phi = near_identity_flow(0.05)?;
    let section = genfun_from_map(&phi, 64)?;
    let psi = SymplecticMapRep::genfun(Arc::new(section.function.clone()));
    let d = c0_distance(&psi, &phi, &SupportBox::centered(2, 1.0), 400, 13)?;
    let control = genfun_from_map(&shear_control(0.05), 64)?;
    let inflation = control.exactness_residual / section.exactness_residual;
    Ok((
        rt < 1e-8 && d < 1e-5 && inflation >= 1e3,
        format!("round_trip={rt:.1e} psi_vs_map={d:.1e} inflation={inflation:.0}"),
    ))
}

fn mollification() -> Outcome {
    let grid = UniformGrid::over_box(&SupportBox::centered(2, 1.3).with_padding(0.0), 208)?;
    let mut pass = true;
    let mut notes = Vec::new();
    for s in mollification_fixtures()? {
        let base = GridSamples::of(&s, &grid)?;
        let mut errs = Vec::new();
        for k in [8u32, 16, 32] {
            let m = mollify(&s, &MollifierKernel::new(1, k), &grid)?;
            pass &= admissibility_from_slopes(&grid, &m.samples.slopes).pass;
            errs.push(base.c1_distance(&m.samples)?);
        }
        pass &= errs.windows(2).all(|w| w[1] < w[0]);
        notes.push(format!("[{:.1e},{:.1e},{:.1e}]", errs[0], errs[1], errs[2]));
    }
    Ok((pass, format!("c1={}", notes.join(" "))))
}

fn hamilton_jacobi() -> Outcome {
    let mut worst = 0.0f64;
    let mut signs = Vec::new();
    for s in hamilton_jacobi_fixtures()? {
        let path = GenFunPath::linear(s, (0.0, 0.3), 1e-3)?;
        worst = worst.max(hj_flow_residual(&path, HJ_SIGN, 64, 17, 30, 4)?);
        signs.push(resolve_hj_sign(&path, 64, 17, 30)?.sign);
    }
    let stable = signs.iter().all(|s| *s == signs[0]);
    Ok((worst < 1e-4 && stable, format!("residual={worst:.1e} sigma={signs:?}")))
}

fn liouville_genfun() -> Outcome {
    let s = polynomial_genfun(1, 0.1, 4, 0.3)?;
    let mut worst = 0.0f64;
    for t in [0.1f64, 0.2] {
        let st = liouville_conjugated_genfun(&s, t);
        let (grow, shrink) = ((t / 2.0).exp(), (-t / 2.0).exp());
        let region = st.support().clone();
        for x in HaltonSampler::new(2, 19).points_in_box(&region.lower(), &region.upper(), 500) {
            let inner: Vec<f64> = x.iter().map(|v| v * shrink).collect();
            let conj: Vec<f64> = psi_apply(&s, &inner)?.iter().map(|v| v * grow).collect();
            worst = worst.max(distance(&psi_apply(&st, &x)?, &conj));
        }
    }
    Ok((worst < 1e-7, format!("max_distance={worst:.1e}")))
}

fn rotations() -> Outcome {
    let profile = bump_profile(2.0)?;
    let rot = FiberedRotation::new(profile.clone()).to_map();
    let flow = LiouvilleFlow::standard(2);
    let mut closed = 0.0f64;
    for t in [0.05, 0.1, 0.2] {
        let a = rotation_commutator_map(&profile, t)?;
        let b = commutator_map(&rot, &flow, t)?;
        for x in HaltonSampler::new(2, 23).points_in_box(&[-1.2, -1.2], &[1.2, 1.2], 128) {
            closed = closed.max(distance(&a.apply(&x)?, &b.apply(&x)?));
        }
    }
    let opts = RadialRecoveryOptions::default();
    let residual = commutator_hamiltonian_recovered(&profile, &opts)?.flow_residual(128, 2, 200)?;
    let tent = rotation_calabi_smooth(&tent_profile(1.0)?, 1.0)?.calabi.value;
    let tent_err = rel(tent.abs(), PI / 12.0);
    let study = singular_profile_study(&log_profile()?, &[0.08, 0.04, 0.02, 0.01], &RadialRecoveryOptions { time_steps: 4, ..opts })?;
    let gap = study.final_calabi_gap().unwrap_or(f64::INFINITY);
    let flags_log = angle_bound_diagnostic(&FiberedRotation::new(log_profile()?).to_map(), 1.0, 12)?.obstructed;
    let clears_bump = !angle_bound_diagnostic(&FiberedRotation::new(bump_profile(1.0)?).to_map(), 1.0, 12)?.obstructed;
    Ok((
        closed < 1e-10 && residual < 1e-4 && tent_err < 1e-2 && gap < 2e-2 && flags_log && clears_bump,
        format!(
            "closed={closed:.1e} flow_match={residual:.1e} tent={tent:.6} log_gap={gap:.1e} flags_log={flags_log} clears_bounded={clears_bump}"
        ),
    ))
}

fn alternate_center() -> Outcome {
    let phi = SymplecticMapRep::time_one(tilted_bump()?, 100);
    let rep = alternate_liouville_invariance(&phi, &[0.3, 0.0], &ExtendedOptions::default())?;
    let (a, b) = (rep.standard.extrapolated.value, rep.shifted.extrapolated.value);
    let oracle = bump_integral(&BumpSpec::centered(2, 0.5));
    Ok((rel(b, a) < 2e-2 && rel(b, oracle) < 2e-2, format!("center0={a:.6} shifted={b:.6} oracle={oracle:.6}")))
}

fn reproducibility() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_calabi");
    let start = Instant::now();
    let verify = Command::new(bin).args(["verify", "--level", "quick"]).output()?;
    let secs = start.elapsed().as_secs_f64();
    let quick_ok = verify.status.code() == Some(0) && secs < 300.0;

    let dir = tempfile::TempDir::new()?;
    let scenario = dir.path().join("scenario.json");
    std::fs::write(&scenario, REPRODUCIBILITY_SCENARIO)?;
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .args(["run", "--serial", "--scenario"])
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .output()?
            .status;
        let mut files: Vec<_> = std::fs::read_dir(&out)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        files.retain(|p| p.extension().is_some_and(|x| x == "csv"));
        files.sort();
        let bytes: Vec<Vec<u8>> = files.iter().map(std::fs::read).collect::<Result<_, _>>()?;
        runs.push((status.code(), bytes));
    }
    let identical = runs[0].0 == Some(0) && runs[0] == runs[1] && !runs[0].1.is_empty();
    Ok((
        quick_ok && identical,
        format!("verify_quick_exit={:?} time={secs:.0}s serial_identical={identical}", verify.status.code()),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("calabi quadrature of the cubic bump", quadrature),
        ("calabi homomorphism", homomorphism),
        ("commutator scaling law", scaling_law),
        ("extended calabi limit", limit_formula),
        ("counterexample sequence", counterexample),
        ("generating functions", generating_functions),
        ("mollification", mollification),
        ("hamilton-jacobi", hamilton_jacobi),
        ("liouville conjugated generating function", liouville_genfun),
        ("fibered rotations", rotations),
        ("alternate liouville center", alternate_center),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {} {name}: {detail} ({:.1}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
