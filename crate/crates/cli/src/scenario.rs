//! JSON scenario files: declarations of named inputs plus a task list.

use std::collections::BTreeMap;

use calabi_core::exprlang::Expression;
use calabi_core::genfun::base_variable_names;
use calabi_core::hamflow::phase_variable_names;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDecl {
    pub expr: String,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    /// Time interval, `[0, 1]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsDecl {
    pub integrable_near_zero: bool,
    pub r_rho_to_zero: bool,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDecl {
    /// Expression in `r`.
    pub expr: String,
    pub radius: f64,
    /// Smooth and bounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<FlagsDecl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Calabi,
    Homomorphism,
    CommutatorStudy,
    ExtendedCalabi,
    Invariance,
    Counterexample,
    Flow,
    Genfun,
    Mollify,
    HamiltonJacobi,
    RotationCalabi,
    RotationCommutator,
    SingularStudy,
    AngleBound,
}

/// Which named inputs a task kind reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    Hamiltonian,
    Other,
    Genfun,
    Profile,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Calabi => "calabi",
            TaskKind::Homomorphism => "homomorphism",
            TaskKind::CommutatorStudy => "commutator_study",
            TaskKind::ExtendedCalabi => "extended_calabi",
            TaskKind::Invariance => "invariance",
            TaskKind::Counterexample => "counterexample",
            TaskKind::Flow => "flow",
            TaskKind::Genfun => "genfun",
            TaskKind::Mollify => "mollify",
            TaskKind::HamiltonJacobi => "hamilton_jacobi",
            TaskKind::RotationCalabi => "rotation_calabi",
            TaskKind::RotationCommutator => "rotation_commutator",
            TaskKind::SingularStudy => "singular_study",
            TaskKind::AngleBound => "angle_bound",
        }
    }

    pub fn required_inputs(self) -> &'static [Input] {
        use Input::*;
        match self {
            TaskKind::Calabi
            | TaskKind::CommutatorStudy
            | TaskKind::ExtendedCalabi
            | TaskKind::Invariance
            | TaskKind::Counterexample
            | TaskKind::Flow => &[Hamiltonian],
            TaskKind::Homomorphism => &[Hamiltonian, Other],
            TaskKind::Genfun | TaskKind::Mollify | TaskKind::HamiltonJacobi => &[Genfun],
            TaskKind::RotationCalabi | TaskKind::RotationCommutator | TaskKind::SingularStudy | TaskKind::AngleBound => {
                &[Profile]
            }
        }
    }

    /// Output columns. Tasks whose width depends on the dimension get the
    /// coordinate columns for half-dimension `n`.
    pub fn columns(self, n: usize) -> Vec<String> {
        let fixed: &[&str] = match self {
            TaskKind::Calabi => &["hamiltonian", "value", "error_estimate", "cells", "time_steps"],
            TaskKind::Homomorphism => &[
                "cal_f",
                "cal_g",
                "cal_composed",
                "cal_inverse",
                "composition_defect",
                "relative_defect",
                "inverse_defect",
            ],
            TaskKind::CommutatorStudy => &["t", "cal_direct", "cal_law", "gap"],
            TaskKind::ExtendedCalabi => &["delta", "value", "error_estimate"],
            TaskKind::Invariance => &["standard", "shifted", "gap", "relative_gap"],
            TaskKind::Counterexample => &["n", "iterates", "calabi", "error_estimate", "c0_distance"],
            TaskKind::Mollify => &["k", "c1_distance", "min_slope", "admissible"],
            TaskKind::HamiltonJacobi => &["sign", "residual", "selected"],
            TaskKind::RotationCalabi => &["calabi", "error_estimate", "flow_residual"],
            TaskKind::RotationCommutator => &["t", "r", "literal", "recovered", "gap"],
            TaskKind::SingularStudy => &["eps", "map_distance", "hamiltonian_gap", "extended_calabi", "calabi_gap"],
            TaskKind::AngleBound => &["inner_radius", "estimate", "obstructed"],
            TaskKind::Flow => {
                let mut c = vec!["index".to_string()];
                c.extend(coordinate_names("q", "p", n, ""));
                c.extend(coordinate_names("q", "p", n, "_out"));
                c.push("round_trip".into());
                return c;
            }
            TaskKind::Genfun => {
                let mut c = vec!["index".to_string()];
                c.extend(coordinate_names("x", "y", n, ""));
                c.extend(coordinate_names("xi", "eta", n, ""));
                c.push("round_trip".into());
                return c;
            }
        };
        fixed.iter().map(|s| s.to_string()).collect()
    }
}

fn coordinate_names(a: &str, b: &str, n: usize, suffix: &str) -> Vec<String> {
    (1..=n)
        .map(|i| format!("{a}{i}{suffix}"))
        .chain((1..=n).map(|i| format!("{b}{i}{suffix}")))
        .collect()
}

/// One task: a kind, references to declared inputs and numeric knobs.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genfun: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
}

impl Task {
    pub fn reference(&self, input: Input) -> Option<&str> {
        match input {
            Input::Hamiltonian => self.hamiltonian.as_deref(),
            Input::Other => self.other.as_deref(),
            Input::Genfun => self.genfun.as_deref(),
            Input::Profile => self.profile.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Half-dimension `n` of the phase space `R^{2n}`.
    pub dimension: usize,
    #[serde(default)]
    pub hamiltonians: BTreeMap<String, FieldDecl>,
    #[serde(default)]
    pub generating_functions: BTreeMap<String, FieldDecl>,
    #[serde(default)]
    pub profiles: BTreeMap<String, ProfileDecl>,
    #[serde(default)]
    pub liouville_centers: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

/// Documented knob ranges.
pub const GRID_RANGE: (usize, usize) = (16, 4096);
pub const STEPS_RANGE: (usize, usize) = (1, 100_000);
pub const SAMPLES_RANGE: (usize, usize) = (1, 1_000_000);
pub const MAX_DIMENSION: usize = 3;

/// 1-based line of a byte offset.
fn line_at(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Byte ranges of the top-level objects of the `"tasks"` array.
fn task_spans(source: &str) -> Vec<(usize, usize)> {
    let Some(key) = source.find("\"tasks\"") else {
        return Vec::new();
    };
    let Some(open) = source[key..].find('[').map(|i| key + i) else {
        return Vec::new();
    };
    let mut spans = Vec::new();
    let (mut depth, mut in_string, mut escaped, mut start) = (0usize, false, false, 0usize);
    for (i, ch) in source[open + 1..].char_indices() {
        let at = open + 1 + i;
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' | '[' => {
                if depth == 0 {
                    start = at;
                }
                depth += 1;
            }
            '}' | ']' => {
                if depth == 0 {
                    break;
                }
                depth -= 1;
                if depth == 0 {
                    spans.push((start, at + 1));
                }
            }
            _ => {}
        }
    }
    spans
}

/// Offset of `"needle"` used as a key (`key == true`) or as a value.
fn find_token(source: &str, range: (usize, usize), needle: &str, key: bool) -> Option<usize> {
    let quoted = format!("\"{needle}\"");
    let hay = &source[range.0..range.1];
    let mut from = 0;
    while let Some(i) = hay[from..].find(&quoted) {
        let at = from + i;
        let after = hay[at + quoted.len()..].trim_start();
        let before = hay[..at].trim_end();
        let is_key = after.starts_with(':');
        let is_value = before.ends_with(':') || before.ends_with(',') || before.ends_with('[');
        if (key && is_key) || (!key && is_value && !is_key) {
            return Some(range.0 + at);
        }
        from = at + quoted.len();
    }
    None
}

struct Reporter<'a> {
    path: &'a str,
    source: &'a str,
    spans: Vec<(usize, usize)>,
}

impl Reporter<'_> {
    fn error(&self, offset: Option<usize>, message: String) -> CliError {
        CliError::Schema {
            path: self.path.to_string(),
            line: offset.map_or(1, |o| line_at(self.source, o)),
            message,
        }
    }

    fn whole(&self) -> (usize, usize) {
        (0, self.source.len())
    }

    fn task_range(&self, index: usize) -> (usize, usize) {
        self.spans.get(index).copied().unwrap_or_else(|| self.whole())
    }

    fn at_key(&self, range: (usize, usize), key: &str, message: String) -> CliError {
        let offset = find_token(self.source, range, key, true).or(Some(range.0));
        self.error(offset, message)
    }

    fn at_value(&self, range: (usize, usize), value: &str, message: String) -> CliError {
        let offset = find_token(self.source, range, value, false).or(Some(range.0));
        self.error(offset, message)
    }
}

fn check_range<T: PartialOrd + std::fmt::Display + Copy>(value: Option<T>, range: (T, T)) -> Result<(), String> {
    match value {
        Some(v) if v < range.0 || v > range.1 => Err(format!("{v} outside [{}, {}]", range.0, range.1)),
        _ => Ok(()),
    }
}

impl Scenario {
    /// Parses and validates `source`; `path` only labels error messages.
    pub fn parse(source: &str, path: &str) -> CliResult<Scenario> {
        let scenario: Scenario = serde_json::from_str(source).map_err(|e| CliError::Schema {
            path: path.to_string(),
            line: e.line().max(1),
            message: e.to_string(),
        })?;
        let rep = Reporter {
            path,
            source,
            spans: task_spans(source),
        };
        scenario.validate(&rep)?;
        Ok(scenario)
    }

    pub fn from_file(path: &std::path::Path) -> CliResult<Scenario> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Scenario::parse(&source, &path.display().to_string())
    }

    fn validate(&self, rep: &Reporter<'_>) -> CliResult<()> {
        let n = self.dimension;
        if n == 0 || n > MAX_DIMENSION {
            return Err(rep.at_key(rep.whole(), "dimension", format!("dimension must be in 1..={MAX_DIMENSION}, got {n}")));
        }
        for (kind, decls) in [("hamiltonian", &self.hamiltonians), ("generating function", &self.generating_functions)] {
            for (name, d) in decls {
                let bad = |m: String| rep.at_key(rep.whole(), name, format!("{kind} {name:?}: {m}"));
                let expr = Expression::parse(&d.expr).map_err(|e| bad(e.to_string()))?;
                let mut allowed = if kind == "hamiltonian" {
                    let mut v = phase_variable_names(n);
                    v.push("t".into());
                    v
                } else {
                    base_variable_names(n)
                };
                allowed.sort();
                if let Some(v) = expr.free_vars().iter().find(|v| allowed.binary_search(v).is_err()) {
                    return Err(bad(format!("unknown variable {v:?}; allowed: {}", allowed.join(","))));
                }
                if !(d.radius > 0.0 && d.radius.is_finite()) {
                    return Err(bad(format!("radius must be positive, got {}", d.radius)));
                }
                if let Some(c) = &d.center {
                    if c.len() != 2 * n {
                        return Err(bad(format!("center needs {} coordinates, got {}", 2 * n, c.len())));
                    }
                }
                if let Some([t0, t1]) = d.time {
                    if !(t1 > t0) {
                        return Err(bad(format!("time interval [{t0}, {t1}] is empty")));
                    }
                }
            }
        }
        for (name, p) in &self.profiles {
            let bad = |m: String| rep.at_key(rep.whole(), name, format!("profile {name:?}: {m}"));
            let expr = Expression::parse(&p.expr).map_err(|e| bad(e.to_string()))?;
            if let Some(v) = expr.free_vars().iter().find(|v| v.as_str() != "r") {
                return Err(bad(format!("unknown variable {v:?}; profiles depend on r only")));
            }
            if !(p.radius > 0.0 && p.radius.is_finite()) {
                return Err(bad(format!("radius must be positive, got {}", p.radius)));
            }
        }
        for (name, c) in &self.liouville_centers {
            if c.len() != 2 * n {
                return Err(rep.at_key(
                    rep.whole(),
                    name,
                    format!("Liouville center {name:?} needs {} coordinates, got {}", 2 * n, c.len()),
                ));
            }
        }
        for (i, task) in self.tasks.iter().enumerate() {
            self.validate_task(i, task, rep)?;
        }
        Ok(())
    }

    fn validate_task(&self, index: usize, task: &Task, rep: &Reporter<'_>) -> CliResult<()> {
        let range = rep.task_range(index);
        let kind = task.kind.name();
        for &input in task.kind.required_inputs() {
            let field = match input {
                Input::Hamiltonian => "hamiltonian",
                Input::Other => "other",
                Input::Genfun => "genfun",
                Input::Profile => "profile",
            };
            let Some(name) = task.reference(input) else {
                return Err(rep.error(Some(range.0), format!("task {index} ({kind}) needs a {field:?} reference")));
            };
            let known = match input {
                Input::Hamiltonian | Input::Other => self.hamiltonians.contains_key(name),
                Input::Genfun => self.generating_functions.contains_key(name),
                Input::Profile => self.profiles.contains_key(name),
            };
            if !known {
                return Err(rep.at_value(range, name, format!("task {index} ({kind}) references undeclared name {name:?}")));
            }
        }
        if let Some(c) = &task.center {
            if !self.liouville_centers.contains_key(c) {
                return Err(rep.at_value(range, c, format!("task {index} ({kind}) references undeclared name {c:?}")));
            }
        } else if task.kind == TaskKind::Invariance {
            return Err(rep.error(Some(range.0), format!("task {index} (invariance) needs a \"center\" reference")));
        }
        let is_rotation = matches!(
            task.kind,
            TaskKind::RotationCalabi | TaskKind::RotationCommutator | TaskKind::SingularStudy | TaskKind::AngleBound
        );
        if is_rotation && self.dimension != 1 {
            return Err(rep.at_key(rep.whole(), "dimension", format!("task {index} ({kind}) needs dimension 1")));
        }
        let knob = |key: &str, r: Result<(), String>| r.map_err(|m| rep.at_key(range, key, format!("task {index} ({kind}): {key} {m}")));
        knob("grid", check_range(task.grid, GRID_RANGE))?;
        knob("steps", check_range(task.steps, STEPS_RANGE))?;
        knob("samples", check_range(task.samples, SAMPLES_RANGE))?;
        if let Some(t) = task.tol {
            knob("tol", if t > 0.0 && t.is_finite() { Ok(()) } else { Err(format!("{t} must be positive")) })?;
        }
        if let Some(d) = &task.deltas {
            let ok = !d.is_empty() && d.iter().all(|v| *v > 0.0 && *v <= 1.0);
            knob("deltas", if ok { Ok(()) } else { Err("must be non-empty values in (0, 1]".into()) })?;
        }
        if let Some(l) = &task.levels {
            let ok = !l.is_empty() && l.iter().all(|v| (1..=8).contains(v));
            knob("levels", if ok { Ok(()) } else { Err("must be non-empty values in 1..=8".into()) })?;
        }
        if let Some(k) = &task.ks {
            let ok = !k.is_empty() && k.iter().all(|v| (1..=256).contains(v));
            knob("ks", if ok { Ok(()) } else { Err("must be non-empty values in 1..=256".into()) })?;
        }
        if let Some(c) = &task.cutoffs {
            let ok = c.len() >= 2 && c.iter().all(|v| *v > 0.0 && *v < 1.0) && c.windows(2).all(|w| w[1] < w[0]);
            knob("cutoffs", if ok { Ok(()) } else { Err("must be at least two decreasing values in (0, 1)".into()) })?;
        }
        if let Some(p) = &task.points {
            let dim = 2 * self.dimension;
            let ok = p.iter().all(|x| x.len() == dim);
            knob("points", if ok { Ok(()) } else { Err(format!("every point needs {dim} coordinates")) })?;
        }
        if let Some(t) = task.time {
            knob("time", if t.is_finite() && t > 0.0 { Ok(()) } else { Err(format!("{t} must be positive")) })?;
        }
        if let Some(cols) = &task.columns {
            let available = task.kind.columns(self.dimension);
            for c in cols {
                if !available.contains(c) {
                    return Err(rep.at_value(
                        range,
                        c,
                        format!("task {index} ({kind}): unknown column {c:?}; available: {}", available.join(",")),
                    ));
                }
            }
        }
        Ok(())
    }
}
