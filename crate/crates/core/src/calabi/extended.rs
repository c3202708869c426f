use super::{CalabiMethod, CalabiResult};
use crate::error::{Error, Result};
use crate::geom::{integrate, integrate_samples, LiouvilleFlow, QuadratureRule, UniformGrid};
use crate::hamflow::{commutator_isotopy, recover_initial_slice_with_sign, HamiltonianField, PotentialSlice, SymplecticMapRep};

/// Default Liouville times of the extrapolation ladder.
pub const DEFAULT_DELTAS: [f64; 3] = [0.2, 0.1, 0.05];

/// Every other node of `grid` along each axis.
fn coarsened(grid: &UniformGrid, values: &[f64]) -> Result<(UniformGrid, Vec<f64>)> {
    let coarse = UniformGrid::new(grid.lower().to_vec(), grid.upper().to_vec(), grid.cells() / 2)?;
    let mut fine_idx = vec![0usize; grid.dim()];
    let mut out = Vec::with_capacity(coarse.len());
    for flat in 0..coarse.len() {
        coarse.multi_index(flat, &mut fine_idx);
        fine_idx.iter_mut().for_each(|i| *i *= 2);
        out.push(values[grid.flat_index(&fine_idx)]);
    }
    Ok((coarse, out))
}

/// `(1/(n+1))·∫ H₀` for an initial slice sampled on a grid with an even
/// number of cells; the estimate compares with every other node.
pub fn extended_calabi(slice: &PotentialSlice, n: usize) -> Result<CalabiResult> {
    let grid = &slice.grid;
    if grid.cells() % 2 == 1 || grid.cells() < 16 {
        return Err(Error::Resolution(format!(
            "extended Calabi needs an even cell count of at least 16, got {}",
            grid.cells()
        )));
    }
    let scale = 1.0 / (n + 1) as f64;
    let fine = scale * integrate_samples(grid, &slice.values, QuadratureRule::Simpson)?;
    let (coarse_grid, coarse_values) = coarsened(grid, &slice.values)?;
    let coarse = scale * integrate_samples(&coarse_grid, &coarse_values, QuadratureRule::Simpson)?;
    Ok(CalabiResult {
        value: fine,
        method: CalabiMethod::Extended,
        cells: grid.cells(),
        time_steps: 0,
        error_estimate: (fine - coarse).abs(),
    })
}

/// [`extended_calabi`] for a slice given in closed form.
pub fn extended_calabi_of_field(h0: &HamiltonianField, cells: usize) -> Result<CalabiResult> {
    let t0 = h0.time_interval().0;
    let scale = 1.0 / (h0.n() + 1) as f64;
    let integral = |c: usize| integrate(|x: &[f64]| h0.value(t0, x), h0.support(), c, QuadratureRule::Simpson);
    let fine = scale * integral(cells)?;
    let coarse = scale * integral(cells / 2)?;
    Ok(CalabiResult {
        value: fine,
        method: CalabiMethod::Extended,
        cells,
        time_steps: 0,
        error_estimate: (fine - coarse).abs(),
    })
}

/// Value at `δ = 0` of the polynomial `c₀ + Σ c_p δ^p` over `powers` through
/// the points `(deltas[i], values[i])`.
pub fn richardson(deltas: &[f64], values: &[f64], powers: &[i32]) -> Result<f64> {
    let m = deltas.len();
    if values.len() != m || powers.len() + 1 != m {
        return Err(Error::InvalidArgument(format!(
            "Richardson extrapolation over {} terms needs {} samples, got {m}",
            powers.len() + 1,
            powers.len() + 1
        )));
    }
    let mut a: Vec<Vec<f64>> = deltas
        .iter()
        .zip(values)
        .map(|(&d, &v)| {
            let mut row = vec![1.0];
            row.extend(powers.iter().map(|&p| d.powi(p)));
            row.push(v);
            row
        })
        .collect();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        if a[col][col].abs() < 1e-300 {
            return Err(Error::InvalidArgument("Richardson samples must be distinct".into()));
        }
        for row in 0..m {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..=m {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    Ok(a[0][m] / a[0][0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedOptions {
    /// Liouville times, coarsest first.
    pub deltas: Vec<f64>,
    /// Recovery grid cells per axis (even).
    pub cells: usize,
    /// Time steps of the sampled commutator isotopy on `[0, δ]`.
    pub steps: usize,
    /// `s` in `ι_{X_H} ω = s·dH`.
    pub hamiltonian_sign: f64,
}

impl Default for ExtendedOptions {
    fn default() -> Self {
        Self {
            deltas: DEFAULT_DELTAS.to_vec(),
            cells: 64,
            steps: 2,
            hamiltonian_sign: 1.0,
        }
    }
}

/// Extended Calabi values per `δ` and their extrapolation to `δ → 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedLimitReport {
    pub deltas: Vec<f64>,
    pub values: Vec<CalabiResult>,
    pub extrapolated: CalabiResult,
}

/// Recovers the initial slice of the generator of `t ↦ [μ_t, φ]` on `[0, δ]`
/// for each `δ` and extrapolates `(1/(n+1))∫ H₀` to `δ → 0`.
///
/// The one-sided time derivative at `t = 0` has error `O(δ²)`; with three
/// `δ` values the `δ²` and `δ³` terms are eliminated. The error estimate is
/// the gap to the two-point extrapolation from the finest pair.
pub fn extended_calabi_limit(phi: &SymplecticMapRep, flow: &LiouvilleFlow, opts: &ExtendedOptions) -> Result<ExtendedLimitReport> {
    if opts.deltas.len() < 2 {
        return Err(Error::InvalidArgument("extrapolation needs at least two δ values".into()));
    }
    let n = phi.dim() / 2;
    let mut values = Vec::with_capacity(opts.deltas.len());
    for &delta in &opts.deltas {
        let trace = commutator_isotopy(phi, delta, flow, opts.steps, None)?;
        let slice = recover_initial_slice_with_sign(&trace, opts.cells, opts.hamiltonian_sign)?;
        values.push(extended_calabi(&slice, n)?);
    }
    let v: Vec<f64> = values.iter().map(|r| r.value).collect();
    let m = v.len();
    let powers: Vec<i32> = (2..m as i32 + 1).collect();
    let value = richardson(&opts.deltas, &v, &powers)?;
    let pair = richardson(&opts.deltas[m - 2..], &v[m - 2..], &[2])?;
    let quadrature = values.iter().map(|r| r.error_estimate).fold(0.0, f64::max);
    Ok(ExtendedLimitReport {
        deltas: opts.deltas.clone(),
        extrapolated: CalabiResult {
            value,
            method: CalabiMethod::Extended,
            cells: opts.cells,
            time_steps: opts.steps,
            error_estimate: (value - pair).abs().max(quadrature),
        },
        values,
    })
}

/// Extended Calabi computed with two Liouville flows.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub center: Vec<f64>,
    pub standard: ExtendedLimitReport,
    pub shifted: ExtendedLimitReport,
}

impl InvarianceReport {
    pub fn gap(&self) -> f64 {
        (self.standard.extrapolated.value - self.shifted.extrapolated.value).abs()
    }

    pub fn relative_gap(&self) -> f64 {
        let scale = self.standard.extrapolated.value.abs();
        if scale == 0.0 {
            self.gap()
        } else {
            self.gap() / scale
        }
    }
}

/// Compares the extended Calabi of `phi` under the flow centred at the origin
/// and under the flow centred at `center`.
pub fn alternate_liouville_invariance(phi: &SymplecticMapRep, center: &[f64], opts: &ExtendedOptions) -> Result<InvarianceReport> {
    let standard = extended_calabi_limit(phi, &LiouvilleFlow::standard(phi.dim()), opts)?;
    let shifted = if center.iter().all(|&c| c == 0.0) {
        standard.clone()
    } else {
        extended_calabi_limit(phi, &LiouvilleFlow::new(center.to_vec()), opts)?
    };
    Ok(InvarianceReport {
        center: center.to_vec(),
        standard,
        shifted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calabi::{calabi_eq1, CalabiOptions};
    use crate::exprlang::Expression;
    use crate::geom::SupportBox;

    #[test]
    fn richardson_recovers_polynomial_limit() {
        let f = |d: f64| 1.5 + 0.7 * d * d - 2.0 * d * d * d;
        let ds = [0.2, 0.1, 0.05];
        let v: Vec<f64> = ds.iter().map(|&d| f(d)).collect();
        assert!((richardson(&ds, &v, &[2, 3]).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn identity_has_zero_extended_calabi() {
        let phi = SymplecticMapRep::identity(2).with_support(Some(SupportBox::centered(2, 1.0)));
        let opts = ExtendedOptions {
            cells: 32,
            ..Default::default()
        };
        let rep = alternate_liouville_invariance(&phi, &[0.3, 0.0], &opts).unwrap();
        assert!(rep.standard.extrapolated.value.abs() < 1e-10, "{rep:?}");
        assert!(rep.shifted.extrapolated.value.abs() < 1e-10, "{rep:?}");
    }

    #[test]
    fn extended_matches_eq1_on_smooth_flow() {
        let e = Expression::parse("0.5*bump(sqrt(q1^2+p1^2))*(1+0.5*q1)").unwrap();
        let h = HamiltonianField::from_expression(&e, 1, SupportBox::centered(2, 1.0)).unwrap();
        let cal = calabi_eq1(&h, &CalabiOptions::default()).unwrap().value;
        let phi = SymplecticMapRep::time_one(h, 100);
        let rep = extended_calabi_limit(&phi, &LiouvilleFlow::standard(2), &ExtendedOptions::default()).unwrap();
        let ext = rep.extrapolated.value;
        assert!((ext - cal).abs() / cal.abs() < 2e-2, "{ext} vs {cal}: {rep:?}");
    }
}
