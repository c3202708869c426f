use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::exprlang::{Compiled, Expression};
use crate::geom::SupportBox;

/// Default central-difference step for gradients of fields without an
/// analytic gradient.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Pointwise evaluation of a time-dependent scalar field `H(t, x)`.
pub trait FieldSource: Send + Sync {
    fn value(&self, t: f64, x: &[f64]) -> Result<f64>;

    /// Analytic gradient in `x`, if the source has one.
    fn gradient(&self, _t: f64, _x: &[f64], _out: &mut [f64]) -> Option<Result<()>> {
        None
    }
}

/// Compactly supported Hamiltonian `H: [t0, t1] × R^{2n} → R`.
///
/// Values and gradients are zero outside the padded support box.
#[derive(Clone)]
pub struct HamiltonianField {
    source: Arc<dyn FieldSource>,
    n: usize,
    support: SupportBox,
    time: (f64, f64),
    autonomous: bool,
    fd_step: f64,
    label: String,
}

impl fmt::Debug for HamiltonianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianField")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("support", &self.support)
            .field("time", &self.time)
            .field("autonomous", &self.autonomous)
            .finish()
    }
}

struct FnSource<V, G> {
    value: V,
    gradient: Option<G>,
}

impl<V, G> FieldSource for FnSource<V, G>
where
    V: Fn(f64, &[f64]) -> f64 + Send + Sync,
    G: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok((self.value)(t, x))
    }

    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        self.gradient.as_ref().map(|g| {
            g(t, x, out);
            Ok(())
        })
    }
}

struct ExprSource {
    compiled: Compiled,
    dim: usize,
}

impl FieldSource for ExprSource {
    fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        // Slots are q1..qn, p1..pn, then t.
        let mut slots = [0.0f64; 17];
        let mut heap;
        let buf: &mut [f64] = if self.dim < slots.len() {
            &mut slots[..=self.dim]
        } else {
            heap = vec![0.0; self.dim + 1];
            &mut heap
        };
        buf[..self.dim].copy_from_slice(x);
        buf[self.dim] = t;
        Ok(self.compiled.eval(buf)?)
    }
}

/// Names of the phase-space variables for half-dimension `n`, in coordinate
/// order.
pub fn phase_variable_names(n: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("q{i}"))
        .chain((1..=n).map(|i| format!("p{i}")))
        .collect()
}

impl HamiltonianField {
    pub fn from_source(source: Arc<dyn FieldSource>, n: usize, support: SupportBox) -> Result<Self> {
        check_dim(2 * n, support.dim())?;
        Ok(Self {
            source,
            n,
            support,
            time: (0.0, 1.0),
            autonomous: false,
            fd_step: DEFAULT_FD_STEP,
            label: String::from("field"),
        })
    }

    /// Field from a closure, gradient by central differences.
    pub fn from_fn<V>(n: usize, support: SupportBox, value: V) -> Result<Self>
    where
        V: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        let src = FnSource::<V, fn(f64, &[f64], &mut [f64])> { value, gradient: None };
        Self::from_source(Arc::new(src), n, support)
    }

    /// Field from a closure together with its analytic gradient.
    pub fn from_fn_with_gradient<V, G>(n: usize, support: SupportBox, value: V, gradient: G) -> Result<Self>
    where
        V: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let src = FnSource {
            value,
            gradient: Some(gradient),
        };
        Self::from_source(Arc::new(src), n, support)
    }

    /// Field from an expression in `q1..qn, p1..pn, t`. Any other free
    /// variable is an error.
    pub fn from_expression(expr: &Expression, n: usize, support: SupportBox) -> Result<Self> {
        let names = phase_variable_names(n);
        let mut slots: Vec<&str> = names.iter().map(String::as_str).collect();
        slots.push("t");
        let compiled = expr.compile(&slots)?;
        let autonomous = !expr.free_vars().contains("t");
        let mut f = Self::from_source(Arc::new(ExprSource { compiled, dim: 2 * n }), n, support)?;
        f.autonomous = autonomous;
        f.label = expr.source().to_string();
        Ok(f)
    }

    pub fn zero(n: usize) -> Self {
        let mut f = Self::from_fn_with_gradient(
            n,
            SupportBox::centered(2 * n, 1.0),
            |_, _| 0.0,
            |_, _, g: &mut [f64]| g.iter_mut().for_each(|v| *v = 0.0),
        )
        .expect("consistent dimensions");
        f.autonomous = true;
        f.label = "0".into();
        f
    }

    pub fn with_time_interval(mut self, t0: f64, t1: f64) -> Self {
        self.time = (t0, t1);
        self
    }

    /// Declares that the field does not depend on `t`.
    pub fn autonomous(mut self, yes: bool) -> Self {
        self.autonomous = yes;
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_support(mut self, support: SupportBox) -> Self {
        self.support = support;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn support(&self) -> &SupportBox {
        &self.support
    }

    pub fn time_interval(&self) -> (f64, f64) {
        self.time
    }

    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn source(&self) -> &Arc<dyn FieldSource> {
        &self.source
    }

    pub fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        if !self.support.contains_padded(x) {
            return Ok(0.0);
        }
        self.source.value(t, x)
    }

    /// Spatial gradient `(∂H/∂q, ∂H/∂p)` into `out`.
    pub fn gradient_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), out.len())?;
        if !self.support.contains_padded(x) {
            out.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        if let Some(r) = self.source.gradient(t, x, out) {
            return r;
        }
        let h = self.fd_step;
        let mut y = x.to_vec();
        for i in 0..x.len() {
            y[i] = x[i] + h;
            let fp = self.value(t, &y)?;
            y[i] = x[i] - h;
            let fm = self.value(t, &y)?;
            y[i] = x[i];
            out[i] = (fp - fm) / (2.0 * h);
        }
        Ok(())
    }

    pub fn gradient(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(t, x, &mut g)?;
        Ok(g)
    }

    /// `X_H = (∂H/∂p, −∂H/∂q)` into `out`.
    pub fn vector_field_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.gradient_into(t, x, out)?;
        let n = self.n;
        for i in 0..n {
            let dq = out[i];
            out[i] = out[n + i];
            out[n + i] = -dq;
        }
        Ok(())
    }

    pub fn vector_field(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim()];
        self.vector_field_into(t, x, &mut v)?;
        Ok(v)
    }

    /// `a·H`.
    pub fn scaled(&self, a: f64) -> HamiltonianField {
        let inner = self.clone();
        let grad_inner = self.clone();
        let src = FnSourceFallible {
            value: move |t: f64, x: &[f64]| Ok(a * inner.value(t, x)?),
            gradient: move |t: f64, x: &[f64], out: &mut [f64]| {
                grad_inner.gradient_into(t, x, out)?;
                out.iter_mut().for_each(|v| *v *= a);
                Ok(())
            },
        };
        self.derived(Arc::new(src), self.support.clone(), format!("{a}*({})", self.label))
    }

    /// A new field on the same phase space sharing this field's time data.
    pub(crate) fn derived(&self, source: Arc<dyn FieldSource>, support: SupportBox, label: String) -> HamiltonianField {
        HamiltonianField {
            source,
            n: self.n,
            support,
            time: self.time,
            autonomous: self.autonomous,
            fd_step: self.fd_step,
            label,
        }
    }

    /// Spot-checks that value and gradient vanish on the padded boundary.
    pub fn check_support(&self, t: f64, lattice: usize, tolerance: f64) -> Result<()> {
        let dim = self.dim();
        let lower = self.support.lower();
        let upper = self.support.upper();
        let m = lattice + 1;
        let mut x = vec![0.0; dim];
        let mut g = vec![0.0; dim];
        for axis in 0..dim {
            for side in [lower[axis], upper[axis]] {
                for k in 0..m.pow(dim as u32 - 1) {
                    let mut rest = k;
                    for other in (0..dim).rev().filter(|&a| a != axis) {
                        x[other] = lower[other] + (upper[other] - lower[other]) * (rest % m) as f64 / lattice as f64;
                        rest /= m;
                    }
                    x[axis] = side;
                    let v = self.source.value(t, &x)?;
                    if v.abs() > tolerance {
                        return Err(Error::Support(format!(
                            "field {} is {v:.3e} on its support boundary at {x:?}",
                            self.label
                        )));
                    }
                    self.gradient_into(t, &x, &mut g)?;
                    if g.iter().any(|c| c.abs() > tolerance) {
                        return Err(Error::Support(format!(
                            "gradient of {} does not vanish on its support boundary at {x:?}",
                            self.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Closure-backed source whose evaluations can fail.
pub(crate) struct FnSourceFallible<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> FieldSource for FnSourceFallible<V, G>
where
    V: Fn(f64, &[f64]) -> Result<f64> + Send + Sync,
    G: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync,
{
    fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        (self.value)(t, x)
    }

    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        Some((self.gradient)(t, x, out))
    }
}

/// Closure-backed source without an analytic gradient.
pub(crate) struct ValueOnly<V>(pub V);

impl<V> FieldSource for ValueOnly<V>
where
    V: Fn(f64, &[f64]) -> Result<f64> + Send + Sync,
{
    fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        (self.0)(t, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic() -> HamiltonianField {
        let e = Expression::parse("(q1^2+p1^2)/2").unwrap();
        HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 10.0)).unwrap()
    }

    #[test]
    fn linear_hamiltonian_translates_in_q() {
        let e = Expression::parse("p1").unwrap();
        let h = HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 10.0)).unwrap();
        let v = h.vector_field(0.0, &[0.3, -0.4]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-10 && v[1].abs() < 1e-10);
    }

    #[test]
    fn harmonic_vector_field() {
        let v = harmonic().vector_field(0.0, &[0.7, -1.3]).unwrap();
        assert!((v[0] + 1.3).abs() < 1e-8);
        assert!((v[1] + 0.7).abs() < 1e-8);
        assert!(harmonic().is_autonomous());
    }

    #[test]
    fn finite_differences_match_analytic_gradient_of_bump() {
        let e = Expression::parse("bump(sqrt(q1^2+p1^2))*(1+t*q1)").unwrap();
        let h = HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 1.0)).unwrap();
        let analytic = |t: f64, q: f64, p: f64| {
            let r = (q * q + p * p).sqrt();
            if r >= 1.0 {
                return [0.0, 0.0];
            }
            let b = (1.0 - 1.0 / (1.0 - r * r)).exp();
            let db_dr = b * (-2.0 * r / (1.0 - r * r).powi(2));
            [db_dr * q / r * (1.0 + t * q) + b * t, db_dr * p / r * (1.0 + t * q)]
        };
        let mut worst = 0.0f64;
        for i in 0..40 {
            let q = -0.9 + 0.045 * i as f64;
            let p = 0.6 * (0.37 * i as f64).sin();
            let g = h.gradient(0.4, &[q, p]).unwrap();
            let a = analytic(0.4, q, p);
            worst = worst.max((g[0] - a[0]).abs()).max((g[1] - a[1]).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn zero_outside_padded_support() {
        let e = Expression::parse("1+q1").unwrap();
        let h = HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 1.0)).unwrap();
        assert_eq!(h.value(0.0, &[5.0, 0.0]).unwrap(), 0.0);
        assert_eq!(h.vector_field(0.0, &[5.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(h.check_support(0.0, 8, 1e-8).is_err());
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let e = Expression::parse("q1*z").unwrap();
        assert!(HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 1.0)).is_err());
    }
}
