use super::UniformGrid;

/// Cubic Lagrange weights for the nodes `0, 1, 2, 3` at local coordinate `u`.
pub fn lagrange_weights(u: f64) -> [f64; 4] {
    let (a, b, c) = (u - 1.0, u - 2.0, u - 3.0);
    [-a * b * c / 6.0, u * b * c / 2.0, -u * a * c / 2.0, u * a * b / 6.0]
}

/// Tensor-product cubic Lagrange interpolation of node data on a
/// [`UniformGrid`]. Points outside the grid evaluate to zero, which is the
/// right extension for compactly supported data.
#[derive(Debug, Clone)]
pub struct CubicInterpolator {
    grid: UniformGrid,
}

impl CubicInterpolator {
    pub fn new(grid: UniformGrid) -> Self {
        assert!(grid.cells() >= 3, "cubic interpolation needs at least 3 cells per axis");
        Self { grid }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// Interpolates each of `fields` at `x` into `out`, sharing the stencil
    /// weights. Returns `false` (and zeros) when `x` is outside the grid.
    pub fn interpolate_many(&self, x: &[f64], fields: &[&[f64]], out: &mut [f64]) -> bool {
        let dim = self.grid.dim();
        let m = self.grid.nodes_per_axis();
        let mut start = [0usize; 8];
        let mut weights = [[0.0f64; 4]; 8];
        assert!(dim <= 8, "interpolation supports up to 8 axes");
        out.iter_mut().for_each(|o| *o = 0.0);
        for axis in 0..dim {
            let lo = self.grid.lower()[axis];
            let hi = self.grid.upper()[axis];
            if !(x[axis] >= lo && x[axis] <= hi) {
                return false;
            }
            let s = (x[axis] - lo) / self.grid.spacing(axis);
            let cell = (s.floor() as isize).clamp(0, m as isize - 2);
            let st = (cell - 1).clamp(0, m as isize - 4) as usize;
            start[axis] = st;
            weights[axis] = lagrange_weights(s - st as f64);
        }
        let total = 4usize.pow(dim as u32);
        let mut local = [0usize; 8];
        for k in 0..total {
            let mut rest = k;
            let mut w = 1.0;
            for axis in (0..dim).rev() {
                local[axis] = rest % 4;
                rest /= 4;
                w *= weights[axis][local[axis]];
            }
            if w == 0.0 {
                continue;
            }
            let mut flat = 0usize;
            for axis in 0..dim {
                flat = flat * m + start[axis] + local[axis];
            }
            for (o, f) in out.iter_mut().zip(fields) {
                *o += w * f[flat];
            }
        }
        true
    }

    pub fn interpolate(&self, x: &[f64], values: &[f64]) -> f64 {
        let mut out = [0.0];
        self.interpolate_many(x, &[values], &mut out);
        out[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let grid = UniformGrid::new(vec![-1.0, 0.0], vec![1.0, 2.0], 10).unwrap();
        let f = |x: &[f64]| x[0].powi(3) - 2.0 * x[0] * x[1] * x[1] + x[1].powi(3) + 0.5;
        let vals = grid.sample(|x| Ok(f(x))).unwrap();
        let it = CubicInterpolator::new(grid);
        for x in [[0.13, 1.71], [-0.99, 0.01], [0.95, 1.99], [0.0, 1.0]] {
            assert!((it.interpolate(&x, &vals) - f(&x)).abs() < 1e-12);
        }
        assert_eq!(it.interpolate(&[1.5, 1.0], &vals), 0.0);
    }

    #[test]
    fn fourth_order_convergence() {
        let f = |x: &[f64]| (1.3 * x[0]).sin() * (0.7 * x[1]).cos();
        let err = |cells| {
            let grid = UniformGrid::new(vec![0.0, 0.0], vec![2.0, 2.0], cells).unwrap();
            let vals = grid.sample(|x| Ok(f(x))).unwrap();
            let it = CubicInterpolator::new(grid);
            let mut e = 0.0f64;
            for i in 0..50 {
                let x = [0.3 + 0.027 * i as f64, 1.7 - 0.023 * i as f64];
                e = e.max((it.interpolate(&x, &vals) - f(&x)).abs());
            }
            e
        };
        let ratio = err(16) / err(32);
        assert!(ratio > 10.0, "ratio {ratio}");
    }
}
