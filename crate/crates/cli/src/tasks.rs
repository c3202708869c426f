//! Execution of scenario tasks.

use std::collections::BTreeMap;

use calabi_core::calabi::{
    alternate_liouville_invariance, commutator_calabi_directed, counterexample_study, extended_calabi_limit,
    homomorphism_check, CalabiOptions, ExtendedOptions, DEFAULT_DELTAS,
};
use calabi_core::exprlang::Expression;
use calabi_core::genfun::{
    admissibility_from_slopes, hj_flow_residual, mollify, psi_apply, psi_inverse_apply, GenFunPath, GeneratingFunction,
    GridSamples, MollifierKernel,
};
use calabi_core::geom::{distance, HaltonSampler, LiouvilleFlow, SupportBox, UniformGrid};
use calabi_core::hamflow::{flow, HamiltonianField, SymplecticMapRep, DEFAULT_ITERATE_BUDGET};
use calabi_core::rotations::{
    angle_bound_diagnostic, commutator_hamiltonian_recovered, literal_vs_recovered, rotation_calabi_smooth,
    singular_profile_study, AngularProfile, FiberedRotation, ProfileFlags, RadialRecoveryOptions,
};
use calabi_core::Conventions;

use crate::error::CliResult;
use crate::scenario::{Scenario, Task, TaskKind};
use crate::table::{Cell, Table};

pub const DEFAULT_SEED: u64 = 1;

/// Knob values from the command line; they replace the task's own.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub steps: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

/// Declared inputs, built once per run.
pub struct Inputs {
    pub n: usize,
    pub hamiltonians: BTreeMap<String, HamiltonianField>,
    pub genfuns: BTreeMap<String, GeneratingFunction>,
    pub profiles: BTreeMap<String, AngularProfile>,
    pub centers: BTreeMap<String, Vec<f64>>,
}

impl Inputs {
    pub fn build(s: &Scenario) -> CliResult<Self> {
        let n = s.dimension;
        let support = |radius: f64, center: &Option<Vec<f64>>| {
            SupportBox::new(center.clone().unwrap_or_else(|| vec![0.0; 2 * n]), radius)
        };
        let mut hamiltonians = BTreeMap::new();
        for (name, d) in &s.hamiltonians {
            let mut h = HamiltonianField::from_expression(&Expression::parse(&d.expr)?, n, support(d.radius, &d.center))?
                .with_label(name.clone());
            if let Some([t0, t1]) = d.time {
                h = h.with_time_interval(t0, t1);
            }
            hamiltonians.insert(name.clone(), h);
        }
        let mut genfuns = BTreeMap::new();
        for (name, d) in &s.generating_functions {
            let g = GeneratingFunction::from_expression(&Expression::parse(&d.expr)?, n, support(d.radius, &d.center))?
                .with_label(name.clone());
            genfuns.insert(name.clone(), g);
        }
        let mut profiles = BTreeMap::new();
        for (name, p) in &s.profiles {
            let flags = p.flags.map_or(ProfileFlags::SMOOTH, |f| ProfileFlags {
                integrable_near_zero: f.integrable_near_zero,
                r_rho_to_zero: f.r_rho_to_zero,
                bounded: f.bounded,
            });
            profiles.insert(name.clone(), AngularProfile::from_expression(&Expression::parse(&p.expr)?, p.radius, flags)?);
        }
        Ok(Self {
            n,
            hamiltonians,
            genfuns,
            profiles,
            centers: s.liouville_centers.clone(),
        })
    }
}

/// Table of one task plus the metric its tolerance is compared with.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutput {
    pub table: Table,
    pub metric: Option<f64>,
    pub tol: Option<f64>,
    pub seed: u64,
}

impl TaskOutput {
    /// `false` when a tolerance is set and the metric exceeds it.
    pub fn within_tolerance(&self) -> bool {
        match (self.metric, self.tol) {
            (Some(m), Some(t)) => m <= t,
            _ => true,
        }
    }
}

struct Ctx<'a> {
    task: &'a Task,
    inputs: &'a Inputs,
    conv: &'a Conventions,
    grid: Option<usize>,
    steps: Option<usize>,
    seed: u64,
}

impl Ctx<'_> {
    fn hamiltonian(&self) -> &HamiltonianField {
        &self.inputs.hamiltonians[self.task.hamiltonian.as_deref().expect("validated")]
    }

    fn other(&self) -> &HamiltonianField {
        &self.inputs.hamiltonians[self.task.other.as_deref().expect("validated")]
    }

    fn genfun(&self) -> &GeneratingFunction {
        &self.inputs.genfuns[self.task.genfun.as_deref().expect("validated")]
    }

    fn profile(&self) -> &AngularProfile {
        &self.inputs.profiles[self.task.profile.as_deref().expect("validated")]
    }

    fn liouville(&self) -> LiouvilleFlow {
        match &self.task.center {
            Some(c) => LiouvilleFlow::new(self.inputs.centers[c].clone()),
            None => LiouvilleFlow::standard(2 * self.inputs.n),
        }
    }

    fn deltas(&self) -> Vec<f64> {
        self.task.deltas.clone().unwrap_or_else(|| DEFAULT_DELTAS.to_vec())
    }

    fn samples(&self, default: usize) -> usize {
        self.task.samples.unwrap_or(default)
    }

    fn points(&self, region: &SupportBox, default: usize) -> Vec<Vec<f64>> {
        self.task.points.clone().unwrap_or_else(|| {
            HaltonSampler::new(region.dim(), self.seed).points_in_box(&region.lower(), &region.upper(), self.samples(default))
        })
    }

    fn calabi_options(&self, grid: usize, time_steps: usize) -> CalabiOptions {
        CalabiOptions::default()
            .with_cells(self.grid.unwrap_or(grid))
            .with_time_steps(self.steps.unwrap_or(time_steps))
    }
}

/// Runs one validated task.
pub fn run_task(task: &Task, inputs: &Inputs, conv: &Conventions, overrides: &Overrides) -> CliResult<TaskOutput> {
    let seed = overrides.seed.or(task.seed).unwrap_or(DEFAULT_SEED);
    let ctx = Ctx {
        task,
        inputs,
        conv,
        grid: overrides.grid.or(task.grid),
        steps: overrides.steps.or(task.steps),
        seed,
    };
    let columns = task.kind.columns(inputs.n);
    let mut table = Table::new(&columns);
    let metric = match task.kind {
        TaskKind::Calabi => calabi(&ctx, &mut table)?,
        TaskKind::Homomorphism => homomorphism(&ctx, &mut table)?,
        TaskKind::CommutatorStudy => commutator_study(&ctx, &mut table)?,
        TaskKind::ExtendedCalabi => extended(&ctx, &mut table)?,
        TaskKind::Invariance => invariance(&ctx, &mut table)?,
        TaskKind::Counterexample => counterexample(&ctx, &mut table)?,
        TaskKind::Flow => flow_points(&ctx, &mut table)?,
        TaskKind::Genfun => genfun_points(&ctx, &mut table)?,
        TaskKind::Mollify => mollification(&ctx, &mut table)?,
        TaskKind::HamiltonJacobi => hamilton_jacobi(&ctx, &mut table)?,
        TaskKind::RotationCalabi => rotation_calabi(&ctx, &mut table)?,
        TaskKind::RotationCommutator => rotation_commutator(&ctx, &mut table)?,
        TaskKind::SingularStudy => singular_study(&ctx, &mut table)?,
        TaskKind::AngleBound => angle_bound(&ctx, &mut table)?,
    };
    if let Some(cols) = &task.columns {
        table = table.select(cols)?;
    }
    Ok(TaskOutput {
        table,
        metric,
        tol: overrides.tol.or(task.tol),
        seed,
    })
}

fn calabi(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let h = ctx.hamiltonian();
    let r = calabi_core::calabi::calabi_eq1(h, &ctx.calabi_options(128, 8))?;
    table.push(vec![
        h.label().into(),
        r.value.into(),
        r.error_estimate.into(),
        r.cells.into(),
        r.time_steps.into(),
    ]);
    Ok(Some(r.error_estimate))
}

fn homomorphism(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let rep = homomorphism_check(ctx.hamiltonian(), ctx.other(), ctx.conv.algebra, &ctx.calabi_options(64, 4))?;
    table.push(vec![
        rep.cal_f.value.into(),
        rep.cal_g.value.into(),
        rep.cal_composed.value.into(),
        rep.cal_inverse.value.into(),
        rep.composition_defect.into(),
        rep.relative_composition_defect().into(),
        rep.inverse_defect.into(),
    ]);
    Ok(Some(rep.relative_composition_defect()))
}

fn commutator_study(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let opts = ctx.calabi_options(64, 4);
    let flow = ctx.liouville();
    let mut worst = 0.0f64;
    for delta in ctx.deltas() {
        let rep = commutator_calabi_directed(
            ctx.hamiltonian(),
            delta,
            &flow,
            ctx.conv.algebra,
            ctx.conv.conjugation_forward,
            &opts,
        )?;
        worst = worst.max(rep.relative_gap());
        table.push(vec![delta.into(), rep.direct.value.into(), rep.law.into(), rep.gap().into()]);
    }
    Ok(Some(worst))
}

fn extended_options(ctx: &Ctx<'_>) -> ExtendedOptions {
    ExtendedOptions {
        deltas: ctx.deltas(),
        cells: ctx.grid.unwrap_or(64),
        hamiltonian_sign: ctx.conv.hamiltonian_sign,
        ..Default::default()
    }
}

fn time_one(ctx: &Ctx<'_>, default_steps: usize) -> SymplecticMapRep {
    SymplecticMapRep::time_one(ctx.hamiltonian().clone(), ctx.steps.unwrap_or(default_steps))
}

fn extended(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let rep = extended_calabi_limit(&time_one(ctx, 100), &ctx.liouville(), &extended_options(ctx))?;
    for (d, v) in rep.deltas.iter().zip(&rep.values) {
        table.push(vec![(*d).into(), v.value.into(), v.error_estimate.into()]);
    }
    let x = &rep.extrapolated;
    table.push(vec![0.0.into(), x.value.into(), x.error_estimate.into()]);
    Ok(Some(x.error_estimate))
}

fn invariance(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let center = &ctx.inputs.centers[ctx.task.center.as_deref().expect("validated")];
    let rep = alternate_liouville_invariance(&time_one(ctx, 100), center, &extended_options(ctx))?;
    table.push(vec![
        rep.standard.extrapolated.value.into(),
        rep.shifted.extrapolated.value.into(),
        rep.gap().into(),
        rep.relative_gap().into(),
    ]);
    Ok(Some(rep.relative_gap()))
}

fn counterexample(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let h = ctx.hamiltonian();
    let levels = ctx.task.levels.clone().unwrap_or_else(|| vec![1, 2, 3]);
    let rows = counterexample_study(
        h,
        &time_one(ctx, 200),
        &levels,
        &ctx.calabi_options(128, 8),
        ctx.samples(1024),
        ctx.seed,
        DEFAULT_ITERATE_BUDGET,
    )?;
    let base = rows[0].calabi.value;
    let mut spread = 0.0f64;
    for r in &rows {
        spread = spread.max((r.calabi.value - base).abs() / base.abs().max(f64::MIN_POSITIVE));
        table.push(vec![
            r.n.into(),
            r.iterates.into(),
            r.calabi.value.into(),
            r.calabi.error_estimate.into(),
            r.c0_distance.into(),
        ]);
    }
    Ok(Some(spread))
}

fn flow_points(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let h = ctx.hamiltonian();
    let (t0, t1) = h.time_interval();
    let t1 = ctx.task.time.unwrap_or(t1);
    let steps = ctx.steps.unwrap_or(100);
    let mut worst = 0.0f64;
    for (i, x) in ctx.points(h.support(), 16).iter().enumerate() {
        let y = flow(h, t0, t1, x, steps)?;
        let back = flow(h, t1, t0, &y, steps)?;
        let rt = distance(&back, x);
        worst = worst.max(rt);
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(x.iter().chain(&y).map(|v| Cell::Num(*v)));
        row.push(rt.into());
        table.push(row);
    }
    Ok(Some(worst))
}

fn genfun_points(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let s = ctx.genfun();
    let mut worst = 0.0f64;
    for (i, x) in ctx.points(s.support(), 16).iter().enumerate() {
        let y = psi_apply(s, x)?;
        let back = psi_inverse_apply(s, &y)?;
        let rt = distance(&back, x);
        worst = worst.max(rt);
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(x.iter().chain(&y).map(|v| Cell::Num(*v)));
        row.push(rt.into());
        table.push(row);
    }
    Ok(Some(worst))
}

fn mollification(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let s = ctx.genfun();
    let ks = ctx.task.ks.clone().unwrap_or_else(|| vec![8, 16, 32]);
    let k_min = *ks.iter().min().expect("validated non-empty");
    let k_max = *ks.iter().max().expect("validated non-empty");
    let support = s.support();
    let half = support.outer_radius() + 1.0 / k_min as f64 + 0.05;
    // Two and a half cells per kernel radius of the finest kernel.
    let cells = ctx.grid.unwrap_or_else(|| {
        let c = (2.5 * 2.0 * half * k_max as f64).ceil() as usize;
        c + c % 2
    });
    let region = SupportBox::new(support.center.clone(), half);
    let grid = UniformGrid::over_box(&region, cells)?;
    let base = GridSamples::of(s, &grid)?;
    let mut last = None;
    for k in ks {
        let m = mollify(s, &MollifierKernel::new(s.n(), k), &grid)?;
        let adm = admissibility_from_slopes(&grid, &m.samples.slopes);
        let d = base.c1_distance(&m.samples)?;
        last = Some(d);
        table.push(vec![k.into(), d.into(), adm.min_slope.into(), adm.pass.into()]);
    }
    Ok(last)
}

fn hamilton_jacobi(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let path = GenFunPath::linear(ctx.genfun().clone(), (0.0, ctx.task.time.unwrap_or(0.3)), 1e-3)?;
    let selected = ctx.conv.hj_sign * ctx.conv.hamiltonian_sign;
    let mut metric = None;
    for sign in [1.0, -1.0] {
        let r = hj_flow_residual(&path, sign, ctx.samples(32), ctx.seed, ctx.steps.unwrap_or(30), 3)?;
        if sign == selected {
            metric = Some(r);
        }
        table.push(vec![sign.into(), r.into(), (sign == selected).into()]);
    }
    Ok(metric)
}

fn rotation_calabi(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let rc = rotation_calabi_smooth(ctx.profile(), ctx.conv.hamiltonian_sign)?;
    table.push(vec![rc.calabi.value.into(), rc.calabi.error_estimate.into(), rc.flow_residual.into()]);
    Ok(Some(rc.calabi.error_estimate))
}

fn recovery_options(ctx: &Ctx<'_>, time_steps: usize) -> RadialRecoveryOptions {
    let defaults = RadialRecoveryOptions::default();
    RadialRecoveryOptions {
        delta: ctx.task.deltas.as_ref().map_or(defaults.delta, |d| d[0]),
        time_steps: ctx.steps.unwrap_or(time_steps),
        radial_cells: ctx.grid.unwrap_or(defaults.radial_cells),
        hamiltonian_sign: ctx.conv.hamiltonian_sign,
    }
}

fn rotation_commutator(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let p = ctx.profile();
    let rec = commutator_hamiltonian_recovered(p, &recovery_options(ctx, 8))?;
    let outer = p.support_radius() * LiouvilleFlow::factor(rec.delta());
    let count = ctx.samples(8);
    let radii: Vec<f64> = (1..=count).map(|i| outer * i as f64 / (count + 1) as f64).collect();
    for &t in &rec.times {
        for c in literal_vs_recovered(&rec, t, &radii)? {
            table.push(vec![t.into(), c.r.into(), c.literal.into(), c.recovered.into(), (c.literal - c.recovered).abs().into()]);
        }
    }
    Ok(Some(rec.flow_residual(64, ctx.seed, 200)?))
}

fn singular_study(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let cutoffs = ctx.task.cutoffs.clone().unwrap_or_else(|| vec![0.08, 0.04, 0.02, 0.01]);
    let study = singular_profile_study(ctx.profile(), &cutoffs, &recovery_options(ctx, 4))?;
    for r in &study.rows {
        table.push(vec![
            r.eps.into(),
            r.map_distance.into(),
            r.hamiltonian_gap.into(),
            r.extended_calabi.value.into(),
            r.calabi_gap.into(),
        ]);
    }
    Ok(study.final_calabi_gap())
}

fn angle_bound(ctx: &Ctx<'_>, table: &mut Table) -> CliResult<Option<f64>> {
    let p = ctx.profile();
    let rep = angle_bound_diagnostic(&FiberedRotation::new(p.clone()).to_map(), p.support_radius(), ctx.samples(12))?;
    for (r, e) in rep.inner_radii.iter().zip(&rep.estimates) {
        table.push(vec![(*r).into(), (*e).into(), rep.obstructed.into()]);
    }
    Ok(None)
}
