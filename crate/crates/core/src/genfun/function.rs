use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{check_dim, Result};
use crate::exprlang::{Compiled, Expression};
use crate::geom::{CubicInterpolator, LiouvilleFlow, SupportBox, UniformGrid};

/// Central-difference step for generating functions without analytic
/// gradients.
pub const GENFUN_FD_STEP: f64 = 1e-5;

/// Pointwise access to `S(x, η)` on the base `R^n × R^n`, with `z = (x, η)`.
pub trait GenFunSource: Send + Sync {
    fn value(&self, z: &[f64]) -> Result<f64>;

    /// Analytic gradient `(∂S/∂x, ∂S/∂η)`, if available.
    fn gradient(&self, _z: &[f64], _out: &mut [f64]) -> Option<Result<()>> {
        None
    }
}

/// Bounds used to pick the implicit solver for `Ψ(S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBounds {
    /// Sup of `|∇S|`.
    pub gradient: f64,
    /// Sup over the support of the row-sum norm of the mixed block
    /// `∂²S/∂x∂η` (and of its transpose).
    pub mixed_hessian: f64,
}

/// Compactly supported `C¹` generating function on `R^n × R^n`.
#[derive(Clone)]
pub struct GeneratingFunction {
    source: Arc<dyn GenFunSource>,
    n: usize,
    support: SupportBox,
    label: String,
    bounds: Arc<OnceLock<DerivativeBounds>>,
}

impl fmt::Debug for GeneratingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratingFunction")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("support", &self.support)
            .finish()
    }
}

struct ClosureSource<V, G> {
    value: V,
    gradient: G,
}

impl<V, G> GenFunSource for ClosureSource<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn value(&self, z: &[f64]) -> Result<f64> {
        Ok((self.value)(z))
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        (self.gradient)(z, out);
        Some(Ok(()))
    }
}

struct ExprSource {
    compiled: Compiled,
}

impl GenFunSource for ExprSource {
    fn value(&self, z: &[f64]) -> Result<f64> {
        Ok(self.compiled.eval(z)?)
    }
}

/// Node values and slopes on a grid, interpolated with cubic Lagrange
/// polynomials; zero outside the grid.
struct GridSource {
    interp: CubicInterpolator,
    values: Vec<f64>,
    slopes: Vec<Vec<f64>>,
}

impl GenFunSource for GridSource {
    fn value(&self, z: &[f64]) -> Result<f64> {
        Ok(self.interp.interpolate(z, &self.values))
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        let fields: Vec<&[f64]> = self.slopes.iter().map(Vec::as_slice).collect();
        self.interp.interpolate_many(z, &fields, out);
        Some(Ok(()))
    }
}

struct ConjugatedSource {
    inner: GeneratingFunction,
    t: f64,
}

impl GenFunSource for ConjugatedSource {
    fn value(&self, z: &[f64]) -> Result<f64> {
        let s = LiouvilleFlow::factor(-self.t);
        let w: Vec<f64> = z.iter().map(|v| s * v).collect();
        Ok(self.t.exp() * self.inner.value(&w)?)
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        let s = LiouvilleFlow::factor(-self.t);
        let w: Vec<f64> = z.iter().map(|v| s * v).collect();
        Some(self.inner.gradient_into(&w, out).map(|_| {
            let c = LiouvilleFlow::factor(self.t);
            out.iter_mut().for_each(|g| *g *= c);
        }))
    }
}

/// Names of the base variables `x1..xn, eta1..etan`.
pub fn base_variable_names(n: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("x{i}"))
        .chain((1..=n).map(|i| format!("eta{i}")))
        .collect()
}

impl GeneratingFunction {
    pub fn from_source(source: Arc<dyn GenFunSource>, n: usize, support: SupportBox) -> Result<Self> {
        check_dim(2 * n, support.dim())?;
        Ok(Self {
            source,
            n,
            support,
            label: "S".into(),
            bounds: Arc::new(OnceLock::new()),
        })
    }

    pub fn from_fn<V, G>(n: usize, support: SupportBox, value: V, gradient: G) -> Result<Self>
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::from_source(Arc::new(ClosureSource { value, gradient }), n, support)
    }

    /// Generating function from an expression in `x1..xn, eta1..etan`.
    pub fn from_expression(expr: &Expression, n: usize, support: SupportBox) -> Result<Self> {
        let names = base_variable_names(n);
        let slots: Vec<&str> = names.iter().map(String::as_str).collect();
        let compiled = expr.compile(&slots)?;
        Ok(Self::from_source(Arc::new(ExprSource { compiled }), n, support)?.with_label(expr.source()))
    }

    /// Grid-backed function from node values and node slopes (`slopes[a]` is
    /// the `a`-th partial derivative at every node).
    pub fn from_grid(grid: UniformGrid, values: Vec<f64>, slopes: Vec<Vec<f64>>, support: SupportBox) -> Result<Self> {
        check_dim(grid.len(), values.len())?;
        check_dim(grid.dim(), slopes.len())?;
        let n = grid.dim() / 2;
        let src = GridSource {
            interp: CubicInterpolator::new(grid),
            values,
            slopes,
        };
        Self::from_source(Arc::new(src), n, support)
    }

    pub fn zero(n: usize) -> Self {
        Self::from_fn(n, SupportBox::centered(2 * n, 1.0), |_| 0.0, |_, g| g.iter_mut().for_each(|v| *v = 0.0))
            .expect("consistent dimensions")
            .with_label("0")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &SupportBox {
        &self.support
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, z: &[f64]) -> Result<f64> {
        check_dim(2 * self.n, z.len())?;
        if !self.support.contains_padded(z) {
            return Ok(0.0);
        }
        self.source.value(z)
    }

    /// `(∂S/∂x, ∂S/∂η)` at `z = (x, η)`.
    pub fn gradient_into(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(2 * self.n, z.len())?;
        if !self.support.contains_padded(z) {
            out.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        if let Some(r) = self.source.gradient(z, out) {
            return r;
        }
        let h = GENFUN_FD_STEP;
        let mut w = z.to_vec();
        for i in 0..z.len() {
            w[i] = z[i] + h;
            let fp = self.source.value(&w)?;
            w[i] = z[i] - h;
            let fm = self.source.value(&w)?;
            w[i] = z[i];
            out[i] = (fp - fm) / (2.0 * h);
        }
        Ok(())
    }

    pub fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; 2 * self.n];
        self.gradient_into(z, &mut g)?;
        Ok(g)
    }

    /// `c·S`.
    pub fn scaled(&self, c: f64) -> GeneratingFunction {
        let (a, b) = (self.clone(), self.clone());
        let src = FallibleSource {
            value: move |z: &[f64]| Ok(c * a.value(z)?),
            gradient: move |z: &[f64], out: &mut [f64]| {
                b.gradient_into(z, out)?;
                out.iter_mut().for_each(|v| *v *= c);
                Ok(())
            },
        };
        GeneratingFunction::from_source(Arc::new(src), self.n, self.support.clone())
            .expect("same dimensions")
            .with_label(format!("{c}*({})", self.label))
    }

    /// Presets the derivative bounds instead of scanning for them.
    pub fn with_bounds(self, bounds: DerivativeBounds) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(bounds);
        Self {
            bounds: Arc::new(cell),
            ..self
        }
    }

    /// Finite-difference derivative bounds over the support, computed once.
    pub fn derivative_bounds(&self) -> DerivativeBounds {
        *self.bounds.get_or_init(|| scan_bounds(self))
    }
}

pub(crate) struct FallibleSource<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> GenFunSource for FallibleSource<V, G>
where
    V: Fn(&[f64]) -> Result<f64> + Send + Sync,
    G: Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync,
{
    fn value(&self, z: &[f64]) -> Result<f64> {
        (self.value)(z)
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        Some((self.gradient)(z, out))
    }
}

fn scan_bounds(s: &GeneratingFunction) -> DerivativeBounds {
    let dim = 2 * s.n;
    let cells = match dim {
        2 => 64,
        4 => 12,
        _ => 4,
    };
    let grid = UniformGrid::over_box(&s.support, cells).expect("nonempty support");
    let h = 1e-4;
    let mut gradient = 0.0f64;
    let mut mixed = 0.0f64;
    let mut g = vec![0.0; dim];
    let mut gp = vec![0.0; dim];
    let mut gm = vec![0.0; dim];
    let n = s.n;
    for flat in 0..grid.len() {
        let z = grid.node(flat);
        if s.gradient_into(&z, &mut g).is_err() {
            continue;
        }
        gradient = gradient.max(g.iter().fold(0.0, |a, v| a.max(v.abs())));
        // m[i][j] = ∂²S/∂x_i∂η_j
        let mut m = vec![vec![0.0; n]; n];
        let mut w = z.clone();
        for j in 0..n {
            w[n + j] = z[n + j] + h;
            let okp = s.gradient_into(&w, &mut gp).is_ok();
            w[n + j] = z[n + j] - h;
            let okm = s.gradient_into(&w, &mut gm).is_ok();
            w[n + j] = z[n + j];
            if okp && okm {
                for i in 0..n {
                    m[i][j] = (gp[i] - gm[i]) / (2.0 * h);
                }
            }
        }
        for i in 0..n {
            let row: f64 = (0..n).map(|j| m[i][j].abs()).sum();
            let col: f64 = (0..n).map(|j| m[j][i].abs()).sum();
            mixed = mixed.max(row).max(col);
        }
    }
    DerivativeBounds {
        gradient,
        mixed_hessian: mixed,
    }
}

/// `e^t S(e^{−t/2} x, e^{−t/2} η)`, associated with `μ_t ∘ Ψ(S) ∘ μ_t^{-1}`.
pub fn liouville_conjugated_genfun(s: &GeneratingFunction, t: f64) -> GeneratingFunction {
    let support = s.support.scaled_about(&vec![0.0; 2 * s.n], LiouvilleFlow::factor(t));
    GeneratingFunction::from_source(Arc::new(ConjugatedSource { inner: s.clone(), t }), s.n, support)
        .expect("same dimensions")
        .with_label(format!("conj_{t}({})", s.label))
}
