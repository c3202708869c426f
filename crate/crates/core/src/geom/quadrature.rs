use rayon::prelude::*;

use super::SupportBox;
use crate::error::{Error, Result};

/// Uniform tensor grid with the same number of cells along every axis.
///
/// Nodes are stored row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cells: usize,
}

impl UniformGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, cells: usize) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidArgument("grid bounds must have equal, nonzero length".into()));
        }
        if cells == 0 || lower.iter().zip(&upper).any(|(a, b)| b <= a) {
            return Err(Error::InvalidArgument("grid needs at least one cell and nonempty extent".into()));
        }
        Ok(Self { lower, upper, cells })
    }

    /// Grid spanning the padded extent of `b`.
    pub fn over_box(b: &SupportBox, cells: usize) -> Result<Self> {
        Self::new(b.lower(), b.upper(), cells)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.cells + 1
    }

    pub fn len(&self) -> usize {
        self.nodes_per_axis().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.cells as f64
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if i == self.cells {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.spacing(axis)
        }
    }

    /// Flat-index stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.nodes_per_axis().pow((self.dim() - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        let m = self.nodes_per_axis();
        for axis in (0..self.dim()).rev() {
            out[axis] = flat % m;
            flat /= m;
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let m = self.nodes_per_axis();
        idx.iter().fold(0, |acc, &i| acc * m + i)
    }

    pub fn node_into(&self, flat: usize, out: &mut [f64]) {
        let m = self.nodes_per_axis();
        let mut rest = flat;
        for axis in (0..self.dim()).rev() {
            out[axis] = self.coordinate(axis, rest % m);
            rest /= m;
        }
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_into(flat, &mut out);
        out
    }

    /// Evaluates `f` at every node, in flat order. Rows along axis 0 are
    /// processed in parallel; the output order is fixed.
    pub fn sample<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let row = self.stride(0);
        let rows: Vec<Result<Vec<f64>>> = (0..self.nodes_per_axis())
            .into_par_iter()
            .map(|i0| {
                let mut x = vec![0.0; self.dim()];
                let mut vals = Vec::with_capacity(row);
                for k in 0..row {
                    self.node_into(i0 * row + k, &mut x);
                    vals.push(f(&x)?);
                }
                Ok(vals)
            })
            .collect();
        let mut out = Vec::with_capacity(self.len());
        for r in rows {
            out.extend(r?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Cell-centred midpoint rule.
    Midpoint,
    /// Composite Simpson on the nodes; odd cell counts are bumped by one.
    Simpson,
    /// Composite trapezoid on the nodes.
    Trapezoid,
}

pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Tensor quadrature of `field` over the padded extent of `support`.
pub fn integrate<F>(field: F, support: &SupportBox, resolution: usize, rule: QuadratureRule) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    integrate_with_tolerance(field, support, resolution, rule, BOUNDARY_TOLERANCE)
}

pub fn integrate_with_tolerance<F>(
    field: F,
    support: &SupportBox,
    resolution: usize,
    rule: QuadratureRule,
    boundary_tolerance: f64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if resolution < 8 {
        return Err(Error::Resolution(format!("quadrature needs at least 8 cells per axis, got {resolution}")));
    }
    check_boundary(&field, support, resolution.min(16), boundary_tolerance)?;
    match rule {
        QuadratureRule::Midpoint => midpoint(&field, support, resolution),
        QuadratureRule::Simpson | QuadratureRule::Trapezoid => {
            let cells = if rule == QuadratureRule::Simpson && resolution % 2 == 1 {
                resolution + 1
            } else {
                resolution
            };
            let grid = UniformGrid::over_box(support, cells)?;
            let weights = axis_weights(cells, rule);
            weighted_node_sum(&grid, &weights, &field)
        }
    }
}

/// Quadrature of values already sampled on the nodes of `grid`.
pub fn integrate_samples(grid: &UniformGrid, values: &[f64], rule: QuadratureRule) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let rule = match rule {
        QuadratureRule::Simpson if grid.cells() % 2 == 1 => QuadratureRule::Trapezoid,
        QuadratureRule::Midpoint => {
            return Err(Error::InvalidArgument("midpoint rule needs cell centres, not node samples".into()))
        }
        r => r,
    };
    let weights = axis_weights(grid.cells(), rule);
    let volume: f64 = (0..grid.dim()).map(|a| grid.spacing(a)).product();
    let mut idx = vec![0usize; grid.dim()];
    let mut total = 0.0;
    for (flat, v) in values.iter().enumerate() {
        grid.multi_index(flat, &mut idx);
        let w: f64 = idx.iter().map(|&i| weights[i]).product();
        total += w * v;
    }
    Ok(total * volume)
}

/// Unit-spacing weights along one axis.
fn axis_weights(cells: usize, rule: QuadratureRule) -> Vec<f64> {
    let mut w = vec![1.0; cells + 1];
    match rule {
        QuadratureRule::Simpson => {
            for (i, wi) in w.iter_mut().enumerate() {
                *wi = if i == 0 || i == cells {
                    1.0 / 3.0
                } else if i % 2 == 1 {
                    4.0 / 3.0
                } else {
                    2.0 / 3.0
                };
            }
        }
        _ => {
            w[0] = 0.5;
            w[cells] = 0.5;
        }
    }
    w
}

fn weighted_node_sum<F>(grid: &UniformGrid, weights: &[f64], field: &F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let row = grid.stride(0);
    let dim = grid.dim();
    let partial: Vec<Result<f64>> = (0..grid.nodes_per_axis())
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; dim];
            let mut idx = vec![0usize; dim];
            let mut s = 0.0;
            for k in 0..row {
                let flat = i0 * row + k;
                grid.multi_index(flat, &mut idx);
                let w: f64 = idx.iter().map(|&i| weights[i]).product();
                if w == 0.0 {
                    continue;
                }
                grid.node_into(flat, &mut x);
                s += w * field(&x)?;
            }
            Ok(s)
        })
        .collect();
    let volume: f64 = (0..dim).map(|a| grid.spacing(a)).product();
    let mut total = 0.0;
    for p in partial {
        total += p?;
    }
    Ok(total * volume)
}

fn midpoint<F>(field: &F, support: &SupportBox, cells: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let lower = support.lower();
    let h = 2.0 * support.outer_radius() / cells as f64;
    let dim = lower.len();
    let row = cells.pow(dim as u32 - 1);
    let partial: Vec<Result<f64>> = (0..cells)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; dim];
            let mut s = 0.0;
            for k in 0..row {
                x[0] = lower[0] + (i0 as f64 + 0.5) * h;
                let mut rest = k;
                for axis in (1..dim).rev() {
                    x[axis] = lower[axis] + ((rest % cells) as f64 + 0.5) * h;
                    rest /= cells;
                }
                s += field(&x)?;
            }
            Ok(s)
        })
        .collect();
    let mut total = 0.0;
    for p in partial {
        total += p?;
    }
    Ok(total * h.powi(dim as i32))
}

/// Spot-checks that the field vanishes on the faces of the padded box.
fn check_boundary<F>(field: &F, support: &SupportBox, lattice: usize, tolerance: f64) -> Result<()>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let dim = support.dim();
    let lower = support.lower();
    let upper = support.upper();
    let m = lattice + 1;
    let face_points = m.pow(dim as u32 - 1);
    let mut x = vec![0.0; dim];
    for axis in 0..dim {
        for side in [lower[axis], upper[axis]] {
            for k in 0..face_points {
                let mut rest = k;
                for other in (0..dim).rev().filter(|&a| a != axis) {
                    let i = rest % m;
                    rest /= m;
                    x[other] = lower[other] + (upper[other] - lower[other]) * i as f64 / lattice as f64;
                }
                x[axis] = side;
                let v = field(&x)?;
                if v.abs() > tolerance {
                    return Err(Error::Support(format!(
                        "field is {v:.3e} on the boundary of the working box at {x:?}; support box too small"
                    )));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(dim: usize) -> SupportBox {
        SupportBox::new(vec![0.5; dim], 0.5).with_padding(0.0)
    }

    #[test]
    fn grid_indexing_round_trip() {
        let g = UniformGrid::new(vec![0.0, -1.0, 2.0], vec![1.0, 1.0, 3.0], 4).unwrap();
        let mut idx = [0usize; 3];
        for flat in [0, 7, 31, 124] {
            g.multi_index(flat, &mut idx);
            assert_eq!(g.flat_index(&idx), flat);
        }
        assert_eq!(g.node(g.len() - 1), vec![1.0, 1.0, 3.0]);
        assert_eq!(g.stride(0), 25);
    }

    #[test]
    fn constant_over_unit_box() {
        // The box boundary check is disabled by an infinite tolerance.
        for dim in [2, 4] {
            for rule in [QuadratureRule::Midpoint, QuadratureRule::Simpson, QuadratureRule::Trapezoid] {
                let v = integrate_with_tolerance(|_| Ok(1.0), &unit_box(dim), 8, rule, f64::INFINITY).unwrap();
                assert!((v - 1.0).abs() < 1e-12, "{rule:?} {dim}: {v}");
            }
        }
    }

    #[test]
    fn cubic_bump_on_disk_is_quarter_pi() {
        let support = SupportBox::centered(2, 1.0);
        let f = |x: &[f64]| Ok((1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powi(3));
        let v = integrate(f, &support, 256, QuadratureRule::Simpson).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() / std::f64::consts::FRAC_PI_4 < 1e-4);
    }

    #[test]
    fn simpson_is_fourth_order() {
        // Vanishes on the boundary of [0,1]^2 but its derivatives do not.
        let f = |x: &[f64]| Ok(x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) * x[0].exp());
        // exact: (∫ q(1−q)e^q dq) (∫ p(1−p) dp) = (3 − e)(1/6)
        let exact = (3.0 - std::f64::consts::E) / 6.0;
        let b = unit_box(2);
        let e1 = (integrate(f, &b, 8, QuadratureRule::Simpson).unwrap() - exact).abs();
        let e2 = (integrate(f, &b, 16, QuadratureRule::Simpson).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn boundary_violation_is_reported() {
        let support = SupportBox::centered(2, 0.5).with_padding(0.0);
        let f = |x: &[f64]| Ok((1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0));
        assert!(matches!(integrate(f, &support, 16, QuadratureRule::Simpson), Err(Error::Support(_))));
    }

    #[test]
    fn coarse_resolution_is_rejected() {
        assert!(integrate(|_| Ok(0.0), &unit_box(2), 4, QuadratureRule::Simpson).is_err());
    }

    #[test]
    fn samples_match_direct_rule() {
        let support = SupportBox::centered(2, 1.0);
        let f = |x: &[f64]| Ok((1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powi(3));
        let grid = UniformGrid::over_box(&support, 32).unwrap();
        let vals = grid.sample(f).unwrap();
        let a = integrate_samples(&grid, &vals, QuadratureRule::Simpson).unwrap();
        let b = integrate(f, &support, 32, QuadratureRule::Simpson).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}
