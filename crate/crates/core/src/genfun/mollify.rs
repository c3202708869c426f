use rayon::prelude::*;

use super::admissibility::sample_slopes;
use super::GeneratingFunction;
use crate::error::{check_dim, Error, Result};
use crate::exprlang::bump;
use crate::geom::{SupportBox, UniformGrid};

/// Unit-mass smooth kernel `χ(z) = C·bump(|z|)` on the unit ball of
/// `R^{2n}` and its shrinking rescalings `χ_k(z) = k^{2n} χ(k z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierKernel {
    n: usize,
    k: u32,
    normalization: f64,
}

fn unit_sphere_area(dim: usize) -> f64 {
    // 2π^{d/2} / Γ(d/2) for even d = 2n: 2π^n / (n−1)!
    let n = dim / 2;
    let fact: f64 = (1..n).map(|i| i as f64).product();
    2.0 * std::f64::consts::PI.powi(n as i32) / fact
}

impl MollifierKernel {
    pub fn new(n: usize, k: u32) -> Self {
        let dim = 2 * n;
        // ∫ bump(|z|) dz = |S^{2n−1}| ∫₀¹ bump(r) r^{2n−1} dr by Simpson.
        let m = 4000;
        let h = 1.0 / m as f64;
        let mut radial = 0.0;
        for i in 0..=m {
            let r = i as f64 * h;
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            radial += w * bump(r) * r.powi(dim as i32 - 1);
        }
        radial *= h / 3.0;
        Self {
            n,
            k,
            normalization: 1.0 / (unit_sphere_area(dim) * radial),
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Support radius `1/k` of `χ_k`.
    pub fn radius(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// `χ(z)`.
    pub fn base(&self, z: &[f64]) -> f64 {
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.normalization * bump(r)
    }

    /// `χ_k(z) = k^{2n} χ(k z)`.
    pub fn scaled(&self, z: &[f64]) -> f64 {
        let k = self.k as f64;
        let kz: Vec<f64> = z.iter().map(|v| k * v).collect();
        k.powi(2 * self.n as i32) * self.base(&kz)
    }
}

/// Values and gradients of a generating function at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct GridSamples {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
    pub slopes: Vec<Vec<f64>>,
}

impl GridSamples {
    pub fn of(s: &GeneratingFunction, grid: &UniformGrid) -> Result<Self> {
        let values = grid.sample(|z| s.value(z))?;
        let slopes = sample_slopes(s, grid)?;
        Ok(Self {
            grid: grid.clone(),
            values,
            slopes,
        })
    }

    /// `max(|S − S'|, |∇S − ∇S'|_∞)` over the shared nodes.
    pub fn c1_distance(&self, other: &GridSamples) -> Result<f64> {
        check_dim(self.values.len(), other.values.len())?;
        let mut worst = 0.0f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            worst = worst.max((a - b).abs());
        }
        for (sa, sb) in self.slopes.iter().zip(&other.slopes) {
            for (a, b) in sa.iter().zip(sb) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}

/// Result of [`mollify`].
#[derive(Debug, Clone)]
pub struct Mollified {
    pub function: GeneratingFunction,
    pub samples: GridSamples,
}

/// Discrete convolution `S_k = S * χ_k` on `grid` (values and gradients are
/// convolved separately). The kernel weights are normalized to unit sum.
pub fn mollify(s: &GeneratingFunction, kernel: &MollifierKernel, grid: &UniformGrid) -> Result<Mollified> {
    let dim = grid.dim();
    check_dim(2 * s.n(), dim)?;
    let h = (0..dim).map(|a| grid.spacing(a)).fold(0.0, f64::max);
    let radius = kernel.radius();
    if radius < 2.0 * h {
        return Err(Error::Resolution(format!(
            "grid spacing {h:.4} too coarse for kernel radius {radius:.4}; need at least two cells per radius"
        )));
    }
    let support = SupportBox {
        center: s.support().center.clone(),
        radius: s.support().outer_radius() + radius,
        padding: 0.0,
    };
    let lower = grid.lower();
    let upper = grid.upper();
    if (0..dim).any(|a| support.center[a] - support.radius < lower[a] || support.center[a] + support.radius > upper[a]) {
        return Err(Error::Support("grid does not contain the mollified support".into()));
    }
    let base = GridSamples::of(s, grid)?;

    // Kernel stencil: integer offsets within the ball of radius 1/k.
    let reach: Vec<isize> = (0..dim).map(|a| (radius / grid.spacing(a)).floor() as isize).collect();
    let mut offsets: Vec<(Vec<isize>, f64)> = Vec::new();
    let span: Vec<usize> = reach.iter().map(|r| (2 * r + 1) as usize).collect();
    let total: usize = span.iter().product();
    for k in 0..total {
        let mut rest = k;
        let mut off = vec![0isize; dim];
        for a in (0..dim).rev() {
            off[a] = (rest % span[a]) as isize - reach[a];
            rest /= span[a];
        }
        let z: Vec<f64> = off.iter().enumerate().map(|(a, o)| *o as f64 * grid.spacing(a)).collect();
        let w = kernel.scaled(&z);
        if w > 0.0 {
            offsets.push((off, w));
        }
    }
    let mass: f64 = offsets.iter().map(|(_, w)| w).sum();
    for (_, w) in offsets.iter_mut() {
        *w /= mass;
    }

    let m = grid.nodes_per_axis() as isize;
    let fields: Vec<&[f64]> = std::iter::once(base.values.as_slice())
        .chain(base.slopes.iter().map(Vec::as_slice))
        .collect();
    let per_node: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; dim];
            grid.multi_index(flat, &mut idx);
            let mut acc = vec![0.0; fields.len()];
            'offsets: for (off, w) in &offsets {
                let mut src = 0usize;
                for a in 0..dim {
                    let i = idx[a] as isize - off[a];
                    if i < 0 || i >= m {
                        continue 'offsets;
                    }
                    src = src * m as usize + i as usize;
                }
                for (acc_f, f) in acc.iter_mut().zip(&fields) {
                    *acc_f += w * f[src];
                }
            }
            acc
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut slopes = vec![Vec::with_capacity(grid.len()); dim];
    for acc in per_node {
        values.push(acc[0]);
        for a in 0..dim {
            slopes[a].push(acc[1 + a]);
        }
    }
    let function = GeneratingFunction::from_grid(grid.clone(), values.clone(), slopes.clone(), support)?
        .with_label(format!("{}*chi_{}", s.label(), kernel.k()));
    Ok(Mollified {
        function,
        samples: GridSamples {
            grid: grid.clone(),
            values,
            slopes,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{integrate, QuadratureRule};

    #[test]
    fn kernel_has_unit_mass() {
        for n in [1, 2] {
            let kernel = MollifierKernel::new(n, 4);
            let support = SupportBox::centered(2 * n, 0.25).with_padding(0.01);
            let cells = if n == 1 { 200 } else { 40 };
            let mass = integrate(|z| Ok(kernel.scaled(z)), &support, cells, QuadratureRule::Trapezoid).unwrap();
            assert!((mass - 1.0).abs() < 1e-3, "n={n}: {mass}");
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let s = GeneratingFunction::zero(1);
        let grid = UniformGrid::over_box(&SupportBox::centered(2, 2.0), 32).unwrap();
        assert!(matches!(mollify(&s, &MollifierKernel::new(1, 16), &grid), Err(Error::Resolution(_))));
    }

    #[test]
    fn smooth_function_is_nearly_unchanged() {
        let s = GeneratingFunction::from_fn(
            1,
            SupportBox::centered(2, 1.0),
            |z| 0.1 * (1.0 - z[0] * z[0] - z[1] * z[1]).max(0.0).powi(4),
            |z, g| {
                let u = (1.0 - z[0] * z[0] - z[1] * z[1]).max(0.0);
                g[0] = -0.8 * z[0] * u.powi(3);
                g[1] = -0.8 * z[1] * u.powi(3);
            },
        )
        .unwrap();
        let grid = UniformGrid::over_box(&SupportBox::centered(2, 1.3).with_padding(0.0), 208).unwrap();
        let m = mollify(&s, &MollifierKernel::new(1, 32), &grid).unwrap();
        let d = GridSamples::of(&s, &grid).unwrap().c1_distance(&m.samples).unwrap();
        assert!(d < 1e-3, "{d}");
        // support grows by at most 1/k
        assert!(m.function.support().radius <= 1.1 + 1.0 / 32.0 + 1e-12);
    }
}
