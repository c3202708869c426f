use crate::error::{Error, Result};
use crate::geom::{integrate, QuadratureRule};
use crate::hamflow::{compose_hamiltonian, inverse_hamiltonian, AlgebraVariant, HamiltonianField};

/// How a Calabi value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CalabiMethod {
    /// Space-time integral of a generating Hamiltonian.
    Eq1Quadrature,
    /// Difference quotient of commutator Calabi values.
    CommutatorLimit,
    /// Scaled integral of the initial slice of a commutator generator.
    Extended,
}

impl CalabiMethod {
    pub fn name(self) -> &'static str {
        match self {
            CalabiMethod::Eq1Quadrature => "eq1-quadrature",
            CalabiMethod::CommutatorLimit => "commutator-limit",
            CalabiMethod::Extended => "extended",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalabiResult {
    pub value: f64,
    pub method: CalabiMethod,
    /// Spatial cells per axis of the finest pass.
    pub cells: usize,
    /// Time intervals of the finest pass (0 when no time quadrature ran).
    pub time_steps: usize,
    /// Difference between the two finest resolutions computed.
    pub error_estimate: f64,
}

/// Resolution of Calabi quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalabiOptions {
    /// Spatial cells per axis.
    pub cells: usize,
    /// Time intervals for non-autonomous fields (Simpson when even).
    pub time_steps: usize,
    pub rule: QuadratureRule,
    /// RK4 steps per unit time inside derived generators.
    pub steps_per_unit: usize,
}

impl Default for CalabiOptions {
    fn default() -> Self {
        Self {
            cells: 128,
            time_steps: 8,
            rule: QuadratureRule::Simpson,
            steps_per_unit: 50,
        }
    }
}

impl CalabiOptions {
    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self
    }

    pub fn with_time_steps(mut self, steps: usize) -> Self {
        self.time_steps = steps;
        self
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_steps_per_unit(mut self, steps: usize) -> Self {
        self.steps_per_unit = steps;
        self
    }
}

fn time_weights(steps: usize) -> Vec<f64> {
    let mut w = vec![1.0; steps + 1];
    if steps % 2 == 0 {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = if i == 0 || i == steps {
                1.0 / 3.0
            } else if i % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            };
        }
    } else {
        w[0] = 0.5;
        w[steps] = 0.5;
    }
    w
}

fn space_time_integral(h: &HamiltonianField, cells: usize, time_steps: usize, rule: QuadratureRule) -> Result<f64> {
    let (t0, t1) = h.time_interval();
    let space = |t: f64| integrate(|x: &[f64]| h.value(t, x), h.support(), cells, rule);
    if h.is_autonomous() {
        return Ok((t1 - t0) * space(t0)?);
    }
    let steps = time_steps.max(1);
    let dt = (t1 - t0) / steps as f64;
    let mut total = 0.0;
    for (i, w) in time_weights(steps).into_iter().enumerate() {
        total += w * space(t0 + i as f64 * dt)?;
    }
    Ok(total * dt)
}

/// `∫∫ H(t, x) dx dt` over the time interval and the padded support of `h`,
/// with an error estimate from a second pass at half the resolution.
pub fn calabi_eq1(h: &HamiltonianField, opts: &CalabiOptions) -> Result<CalabiResult> {
    if opts.cells < 16 {
        return Err(Error::Resolution(format!(
            "Calabi quadrature needs at least 16 cells per axis, got {}",
            opts.cells
        )));
    }
    let fine = space_time_integral(h, opts.cells, opts.time_steps, opts.rule)?;
    let coarse = space_time_integral(h, opts.cells / 2, (opts.time_steps / 2).max(1), opts.rule)?;
    Ok(CalabiResult {
        value: fine,
        method: CalabiMethod::Eq1Quadrature,
        cells: opts.cells,
        time_steps: if h.is_autonomous() { 0 } else { opts.time_steps },
        error_estimate: (fine - coarse).abs(),
    })
}

/// Additivity and inversion defects of the Calabi quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct HomomorphismReport {
    pub cal_f: CalabiResult,
    pub cal_g: CalabiResult,
    pub cal_composed: CalabiResult,
    pub cal_inverse: CalabiResult,
    /// `|Cal(F#G) − Cal(F) − Cal(G)|`.
    pub composition_defect: f64,
    /// `|Cal(F̄) + Cal(F)|`.
    pub inverse_defect: f64,
}

impl HomomorphismReport {
    /// Composition defect relative to `max(|Cal F|, |Cal G|)`.
    pub fn relative_composition_defect(&self) -> f64 {
        self.composition_defect / self.cal_f.value.abs().max(self.cal_g.value.abs())
    }

    pub fn relative_inverse_defect(&self) -> f64 {
        self.inverse_defect / self.cal_f.value.abs()
    }

    /// Sum of the quadrature error estimates entering the composition defect.
    pub fn error_estimate(&self) -> f64 {
        self.cal_f.error_estimate + self.cal_g.error_estimate + self.cal_composed.error_estimate
    }
}

/// Compares `Cal` of the composed and inverse generators with `Cal F + Cal G`
/// and `−Cal F`.
pub fn homomorphism_check(
    f: &HamiltonianField,
    g: &HamiltonianField,
    variant: AlgebraVariant,
    opts: &CalabiOptions,
) -> Result<HomomorphismReport> {
    let cal_f = calabi_eq1(f, opts)?;
    let cal_g = calabi_eq1(g, opts)?;
    let composed = compose_hamiltonian(f, g, variant, opts.steps_per_unit)?;
    let cal_composed = calabi_eq1(&composed, opts)?;
    let inverse = inverse_hamiltonian(f, variant, opts.steps_per_unit);
    let cal_inverse = calabi_eq1(&inverse, opts)?;
    Ok(HomomorphismReport {
        composition_defect: (cal_composed.value - cal_f.value - cal_g.value).abs(),
        inverse_defect: (cal_inverse.value + cal_f.value).abs(),
        cal_f,
        cal_g,
        cal_composed,
        cal_inverse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Expression;
    use crate::geom::SupportBox;
    use std::f64::consts::PI;

    fn field(src: &str, center: [f64; 2], radius: f64) -> HamiltonianField {
        let e = Expression::parse(src).unwrap();
        HamiltonianField::from_expression(&e, 1, SupportBox::new(center.to_vec(), radius)).unwrap()
    }

    fn h0() -> HamiltonianField {
        field("max(0, 1-q1^2-p1^2)^3", [0.0, 0.0], 1.0)
    }

    #[test]
    fn zero_field_has_zero_calabi() {
        let r = calabi_eq1(&HamiltonianField::zero(1), &CalabiOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn radial_bump_integral() {
        let r = calabi_eq1(&h0(), &CalabiOptions::default().with_cells(256)).unwrap();
        assert!((r.value - PI / 4.0).abs() / (PI / 4.0) < 5e-3, "{r:?}");
        assert!(r.error_estimate < 1e-2);
    }

    #[test]
    fn linear_in_the_field() {
        let opts = CalabiOptions::default().with_cells(64);
        let a = calabi_eq1(&h0(), &opts).unwrap().value;
        let b = calabi_eq1(&h0().scaled(2.0), &opts).unwrap().value;
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn time_dependence_is_integrated() {
        // ∫₀¹ (1 + t) dt = 3/2
        let h = field("(1+t)*max(0, 1-q1^2-p1^2)^3", [0.0, 0.0], 1.0);
        let r = calabi_eq1(&h, &CalabiOptions::default().with_cells(128)).unwrap();
        assert!((r.value - 1.5 * PI / 4.0).abs() < 5e-3, "{r:?}");
    }

    #[test]
    fn disjoint_supports_add() {
        let f = field("0.5*bump(sqrt((q1+1.5)^2+p1^2))", [-1.5, 0.0], 1.0);
        let g = field("0.3*bump(sqrt((q1-1.5)^2+p1^2))*(1+t*q1)", [1.5, 0.0], 1.0);
        let opts = CalabiOptions::default().with_cells(64).with_time_steps(4).with_steps_per_unit(40);
        let rep = homomorphism_check(&f, &g, AlgebraVariant::Validated, &opts).unwrap();
        assert!(rep.composition_defect <= rep.error_estimate().max(1e-10), "{rep:?}");
    }
}
