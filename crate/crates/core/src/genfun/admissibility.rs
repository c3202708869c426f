use rayon::prelude::*;

use super::GeneratingFunction;
use crate::error::{Error, Result};
use crate::geom::UniformGrid;

/// Outcome of scanning the coordinate maps `x_i ↦ x_i + ∂S/∂η_i` and
/// `η_i ↦ η_i + ∂S/∂x_i` along grid lines.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// Smallest difference quotient of each coordinate map, in the order
    /// `x_1..x_n, η_1..η_n`.
    pub min_slopes: Vec<f64>,
    /// Smallest difference quotient over all coordinate maps.
    pub min_slope: f64,
    /// Node where the smallest difference quotient starts.
    pub worst_location: Vec<f64>,
    pub pass: bool,
}

impl AdmissibilityReport {
    pub fn verdicts(&self) -> Vec<bool> {
        self.min_slopes.iter().map(|s| *s > 0.0).collect()
    }
}

/// Scans gradients already sampled at the nodes of `grid` (`slopes[a]` is
/// the `a`-th partial at every node).
pub fn admissibility_from_slopes(grid: &UniformGrid, slopes: &[Vec<f64>]) -> AdmissibilityReport {
    let dim = grid.dim();
    let n = dim / 2;
    let m = grid.nodes_per_axis();
    let mut min_slopes = vec![f64::INFINITY; dim];
    let mut worst = (f64::INFINITY, 0usize);
    let mut idx = vec![0usize; dim];
    for axis in 0..dim {
        // x_i pairs with ∂S/∂η_i and η_i with ∂S/∂x_i.
        let partner = if axis < n { axis + n } else { axis - n };
        let stride = grid.stride(axis);
        let h = grid.spacing(axis);
        for flat in 0..grid.len() {
            grid.multi_index(flat, &mut idx);
            if idx[axis] + 1 >= m {
                continue;
            }
            let next = flat + stride;
            let slope = 1.0 + (slopes[partner][next] - slopes[partner][flat]) / h;
            if slope < min_slopes[axis] {
                min_slopes[axis] = slope;
            }
            if slope < worst.0 {
                worst = (slope, flat);
            }
        }
    }
    AdmissibilityReport {
        pass: worst.0 > 0.0,
        min_slope: worst.0,
        worst_location: grid.node(worst.1),
        min_slopes,
    }
}

/// Node gradients of `s` on `grid`, one vector per partial derivative.
pub fn sample_slopes(s: &GeneratingFunction, grid: &UniformGrid) -> Result<Vec<Vec<f64>>> {
    let dim = grid.dim();
    let per_node: Vec<Result<Vec<f64>>> = (0..grid.len()).into_par_iter().map(|f| s.gradient(&grid.node(f))).collect();
    let mut slopes = vec![Vec::with_capacity(grid.len()); dim];
    for g in per_node {
        let g = g?;
        for a in 0..dim {
            slopes[a].push(g[a]);
        }
    }
    Ok(slopes)
}

/// Checks that every coordinate map is strictly increasing along the grid
/// lines of a `cells`-per-axis grid over the padded support of `s`.
pub fn admissibility_check(s: &GeneratingFunction, cells: usize) -> Result<AdmissibilityReport> {
    if cells < 32 {
        return Err(Error::Resolution(format!("admissibility scan needs at least 32 cells, got {cells}")));
    }
    let grid = UniformGrid::over_box(s.support(), cells)?;
    let slopes = sample_slopes(s, &grid)?;
    Ok(admissibility_from_slopes(&grid, &slopes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SupportBox;

    fn product(c: f64) -> GeneratingFunction {
        // S = c·x·η·e^{−x²−η²}: mixed derivative spans [−0.446c, c].
        GeneratingFunction::from_fn(
            1,
            SupportBox::centered(2, 3.0),
            move |z| c * z[0] * z[1] * (-(z[0] * z[0] + z[1] * z[1])).exp(),
            move |z, g| {
                let e = (-(z[0] * z[0] + z[1] * z[1])).exp();
                g[0] = c * z[1] * e * (1.0 - 2.0 * z[0] * z[0]);
                g[1] = c * z[0] * e * (1.0 - 2.0 * z[1] * z[1]);
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_has_unit_slopes() {
        let r = admissibility_check(&GeneratingFunction::zero(1), 32).unwrap();
        assert!(r.pass);
        assert!((r.min_slope - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moderate_coupling_passes() {
        let r = admissibility_check(&product(0.5), 64).unwrap();
        assert!(r.pass && r.min_slope > 0.7);
    }

    #[test]
    fn slope_reversal_is_located() {
        let r = admissibility_check(&product(-1.8), 64).unwrap();
        assert!(!r.pass);
        // c·(1−2x²)(1−2η²)e^{−x²−η²} is most negative at the origin.
        assert!(r.worst_location.iter().all(|v| v.abs() < 0.2), "{:?}", r.worst_location);
        assert_eq!(r.verdicts(), vec![false, false]);
    }
}
