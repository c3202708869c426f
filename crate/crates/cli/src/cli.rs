//! Command-line surface: argument parsing and subcommand dispatch.

use std::io::Write;
use std::path::PathBuf;

use calabi_core::calabi::{calabi_eq1, CalabiOptions};
use calabi_core::exprlang::Expression;
use calabi_core::genfun::{psi_apply, GeneratingFunction};
use calabi_core::geom::SupportBox;
use calabi_core::hamflow::{flow, HamiltonianField};
use calabi_core::rotations::{rotation_calabi_smooth, AngularProfile, ProfileFlags};
use calabi_core::Conventions;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};
use crate::run::{run_scenario, with_parallelism, RunOptions};
use crate::table::Table;
use crate::tasks::Overrides;
use crate::verify::{verify_suite, Level};

#[derive(Debug, Parser)]
#[command(name = "calabi", version, about = "Calabi invariants, Liouville commutators and generating functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a scenario file, writing one CSV per task and a manifest.
    Run(RunArgs),
    /// Run the verification suite and print its report.
    Verify(VerifyArgs),
    /// Calabi invariant of an autonomous or time-dependent Hamiltonian.
    Calabi(CalabiArgs),
    /// Time-1 image of points under a Hamiltonian flow.
    Flow(FlowArgs),
    /// Image of points under the map generated by a function of `(x, eta)`.
    Genfun(GenfunArgs),
    /// Calabi invariant of a smooth fibered rotation of the plane.
    Rotation(RotationArgs),
}

#[derive(Debug, Args)]
pub struct Knobs {
    /// Replace every task's grid resolution.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Replace every task's step count.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Replace every task's tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Replace every task's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disable all parallelism for bitwise reproducible output.
    #[arg(long)]
    pub serial: bool,
    /// Use the inverse/composition and conjugation variants read directly
    /// off the printed formulas instead of the flow-validated ones.
    #[arg(long)]
    pub paper_literal: bool,
}

impl Knobs {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid: self.grid,
            steps: self.steps,
            tol: self.tol,
            seed: self.seed,
        }
    }

    fn conventions(&self) -> Conventions {
        if self.paper_literal {
            Conventions::literal()
        } else {
            Conventions::validated()
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub knobs: Knobs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub level: LevelArg,
    /// Also write the report as `verify.csv` into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub serial: bool,
    #[arg(long)]
    pub paper_literal: bool,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Expression in `q1.., p1.., t`.
    #[arg(long)]
    pub expr: String,
    /// Half-dimension `n` of the phase space `R^{2n}`.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Half-width of the support box centered at the origin.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
}

impl FieldArgs {
    fn field(&self) -> CliResult<HamiltonianField> {
        let e = Expression::parse(&self.expr)?;
        Ok(HamiltonianField::from_expression(&e, self.n, SupportBox::centered(2 * self.n, self.radius))?)
    }
}

#[derive(Debug, Args)]
pub struct CalabiArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    #[arg(long, default_value_t = 8)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Comma-separated coordinates; repeat for several points.
    #[arg(long = "point", required = true)]
    pub points: Vec<String>,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct GenfunArgs {
    /// Expression in `x1.., eta1..`.
    #[arg(long)]
    pub expr: String,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long = "point", required = true)]
    pub points: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RotationArgs {
    /// Angular profile as an expression in `r`.
    #[arg(long)]
    pub profile: String,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
}

fn parse_point(text: &str, dim: usize) -> CliResult<Vec<f64>> {
    let x = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("bad point {text:?}: {e}")))?;
    if x.len() != dim {
        return Err(CliError::Usage(format!("point {text:?} has {} coordinates, expected {dim}", x.len())));
    }
    Ok(x)
}

fn point_table(dim: usize, rows: Vec<(Vec<f64>, Vec<f64>)>) -> Table {
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.extend((0..dim).map(|i| format!("y{i}")));
    let mut t = Table::new(&header);
    for (x, y) in rows {
        t.push(x.into_iter().chain(y).map(Into::into).collect());
    }
    t
}

fn print_table(t: &Table) -> CliResult<()> {
    let text = t.to_csv()?;
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| CliError::io("writing stdout", e))
}

/// Executes a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Run(args) => {
            let opts = RunOptions {
                overrides: args.knobs.overrides(),
                conventions: args.knobs.conventions(),
                serial: args.knobs.serial,
            };
            let report = run_scenario(&args.scenario, &args.out, &opts)?;
            for t in &report.manifest.tasks {
                eprintln!("task {:02} {:<20} {}", t.index, t.kind, t.status);
            }
            eprintln!("manifest: {}", report.manifest_path.display());
            Ok(report.exit_code())
        }
        Command::Verify(args) => {
            let level = match args.level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let conv = if args.paper_literal {
                Conventions::literal()
            } else {
                Conventions::validated()
            };
            let report = with_parallelism(args.serial, || verify_suite(level, &conv))?;
            print!("{}", report.render());
            if let Some(dir) = args.out {
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
                report.to_table().write(&dir.join("verify.csv"))?;
            }
            Ok(report.exit_code())
        }
        Command::Calabi(args) => {
            let h = args.field.field()?;
            let r = calabi_eq1(&h, &CalabiOptions::default().with_cells(args.grid).with_time_steps(args.steps))?;
            let mut t = Table::new(&["value", "error_estimate", "cells", "time_steps"]);
            t.push(vec![r.value.into(), r.error_estimate.into(), r.cells.into(), r.time_steps.into()]);
            print_table(&t)?;
            Ok(0)
        }
        Command::Flow(args) => {
            let h = args.field.field()?;
            let dim = 2 * args.field.n;
            let mut rows = Vec::new();
            for p in &args.points {
                let x = parse_point(p, dim)?;
                let y = flow(&h, 0.0, 1.0, &x, args.steps)?;
                rows.push((x, y));
            }
            print_table(&point_table(dim, rows))?;
            Ok(0)
        }
        Command::Genfun(args) => {
            let e = Expression::parse(&args.expr)?;
            let dim = 2 * args.n;
            let s = GeneratingFunction::from_expression(&e, args.n, SupportBox::centered(dim, args.radius))?;
            let mut rows = Vec::new();
            for p in &args.points {
                let x = parse_point(p, dim)?;
                let y = psi_apply(&s, &x)?;
                rows.push((x, y));
            }
            print_table(&point_table(dim, rows))?;
            Ok(0)
        }
        Command::Rotation(args) => {
            let e = Expression::parse(&args.profile)?;
            let p = AngularProfile::from_expression(&e, args.radius, ProfileFlags::SMOOTH)?;
            let r = rotation_calabi_smooth(&p, Conventions::validated().hamiltonian_sign)?;
            let mut t = Table::new(&["calabi", "error_estimate", "flow_residual"]);
            t.push(vec![r.calabi.value.into(), r.calabi.error_estimate.into(), r.flow_residual.into()]);
            print_table(&t)?;
            Ok(0)
        }
    }
}
