use super::GeneratingFunction;
use crate::error::{check_dim, Error, Result};

/// Residual tolerance of the implicit solves.
pub const SOLVE_TOLERANCE: f64 = 1e-12;
/// Iteration budget of the implicit solves.
pub const SOLVE_BUDGET: usize = 200;
/// Largest mixed-Hessian bound for which plain fixed-point iteration is used.
pub const CONTRACTION_BOUND: f64 = 0.9;

/// Which block of the gradient enters the implicit equation.
#[derive(Clone, Copy)]
enum Unknown {
    /// Solve `y = η + ∂S/∂x(x, η)` for `η`.
    Momentum,
    /// Solve `ξ = x + ∂S/∂η(x, η)` for `x`.
    Position,
}

/// Solves `target = u + ∂S/∂(other half)(z)` for the half `u` of `z`.
fn solve(s: &GeneratingFunction, z: &mut [f64], target: &[f64], unknown: Unknown) -> Result<()> {
    let n = s.n();
    let (u_off, g_off) = match unknown {
        Unknown::Momentum => (n, 0),
        Unknown::Position => (0, n),
    };
    let mut g = vec![0.0; 2 * n];
    let residual = |z: &[f64], g: &mut [f64]| -> Result<f64> {
        s.gradient_into(z, g)?;
        Ok((0..n).map(|i| (z[u_off + i] + g[g_off + i] - target[i]).abs()).fold(0.0, f64::max))
    };
    let bounds = s.derivative_bounds();
    if bounds.mixed_hessian < CONTRACTION_BOUND {
        for _ in 0..SOLVE_BUDGET {
            s.gradient_into(z, &mut g)?;
            let mut step = 0.0f64;
            for i in 0..n {
                let next = target[i] - g[g_off + i];
                step = step.max((next - z[u_off + i]).abs());
                z[u_off + i] = next;
            }
            if step <= SOLVE_TOLERANCE {
                return Ok(());
            }
        }
        if residual(z, &mut g)? <= 10.0 * SOLVE_TOLERANCE {
            return Ok(());
        }
        return Err(Error::NonConvergence(format!(
            "fixed-point solve for {} did not converge in {SOLVE_BUDGET} iterations",
            s.label()
        )));
    }
    // Each coordinate map u_i ↦ u_i + ∂S/∂(other)_i is increasing for
    // admissible S; solve by bisection, sweeping coordinates Gauss–Seidel.
    let reach = bounds.gradient + 1.0;
    for _ in 0..SOLVE_BUDGET {
        let mut change = 0.0f64;
        for i in 0..n {
            let k = u_off + i;
            let start = z[k];
            let mut lo = target[i] - reach;
            let mut hi = target[i] + reach;
            let f = |u: f64, z: &mut [f64], g: &mut [f64]| -> Result<f64> {
                z[k] = u;
                s.gradient_into(z, g)?;
                Ok(u + g[g_off + i] - target[i])
            };
            if f(lo, z, &mut g)? > 0.0 || f(hi, z, &mut g)? < 0.0 {
                return Err(Error::Admissibility(format!(
                    "coordinate map {} of {} is not increasing near {z:?}",
                    k,
                    s.label()
                )));
            }
            for _ in 0..SOLVE_BUDGET {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 0.25 * SOLVE_TOLERANCE || mid <= lo || mid >= hi {
                    break;
                }
                if f(mid, z, &mut g)? > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let next = 0.5 * (lo + hi);
            change = change.max((next - start).abs());
            z[k] = next;
        }
        // A single coordinate converges in one sweep; coupled coordinates
        // need repeated sweeps until nothing moves.
        if change <= SOLVE_TOLERANCE || residual(z, &mut g)? <= 10.0 * SOLVE_TOLERANCE {
            return Ok(());
        }
    }
    Err(Error::NonConvergence(format!(
        "monotone bisection for {} did not converge in {SOLVE_BUDGET} sweeps",
        s.label()
    )))
}

/// `Ψ(S)(x, y) = (ξ, η)` with `y = η + ∂S/∂x(x, η)` and `ξ = x + ∂S/∂η(x, η)`.
pub fn psi_apply(s: &GeneratingFunction, point: &[f64]) -> Result<Vec<f64>> {
    let n = s.n();
    check_dim(2 * n, point.len())?;
    let (x, y) = point.split_at(n);
    let mut z: Vec<f64> = x.iter().chain(y).copied().collect();
    solve(s, &mut z, y, Unknown::Momentum)?;
    let g = s.gradient(&z)?;
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        out[i] = x[i] + g[n + i];
        out[n + i] = z[n + i];
    }
    Ok(out)
}

/// Inverse of [`psi_apply`]: solves `ξ = x + ∂S/∂η(x, η)` for `x`, then
/// `y = η + ∂S/∂x(x, η)`.
pub fn psi_inverse_apply(s: &GeneratingFunction, point: &[f64]) -> Result<Vec<f64>> {
    let n = s.n();
    check_dim(2 * n, point.len())?;
    let (xi, eta) = point.split_at(n);
    let mut z: Vec<f64> = xi.iter().chain(eta).copied().collect();
    solve(s, &mut z, xi, Unknown::Position)?;
    let g = s.gradient(&z)?;
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        out[i] = z[i];
        out[n + i] = eta[i] + g[i];
    }
    Ok(out)
}

/// Base point `(x, η)` of the chart graph over the image point `w = (ξ, η)`.
pub fn base_of_image(s: &GeneratingFunction, w: &[f64]) -> Result<Vec<f64>> {
    let n = s.n();
    check_dim(2 * n, w.len())?;
    let mut z = w.to_vec();
    solve(s, &mut z, &w[..n], Unknown::Position)?;
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Expression;
    use crate::geom::{distance, SupportBox};
    use crate::hamflow::{symplectic_defect, SymplecticMapRep};
    use std::sync::Arc;

    fn small_bump() -> GeneratingFunction {
        let e = Expression::parse("0.04*bump(sqrt(x1^2+eta1^2))*(1+0.5*x1-0.3*eta1)").unwrap();
        GeneratingFunction::from_expression(&e, 1, SupportBox::centered(2, 1.0)).unwrap()
    }

    #[test]
    fn zero_function_gives_identity() {
        let s = GeneratingFunction::zero(1);
        assert_eq!(psi_apply(&s, &[0.3, -0.2]).unwrap(), vec![0.3, -0.2]);
        assert_eq!(psi_inverse_apply(&s, &[0.3, -0.2]).unwrap(), vec![0.3, -0.2]);
    }

    #[test]
    fn round_trip_and_symplecticity() {
        let s = small_bump();
        let map = SymplecticMapRep::genfun(Arc::new(s.clone()));
        for x in [[0.1, 0.2], [-0.5, 0.4], [0.7, -0.6], [0.0, 0.0]] {
            let y = psi_apply(&s, &x).unwrap();
            let back = psi_inverse_apply(&s, &y).unwrap();
            assert!(distance(&back, &x) < 1e-10);
            assert!(symplectic_defect(&map, &x, 1e-4, 1.0).unwrap() < 1e-5);
        }
    }

    #[test]
    fn bisection_handles_strong_coupling() {
        // S = c·x·η·bump: the mixed derivative exceeds 1 near the origin, so
        // plain fixed-point iteration is not a contraction.
        let c = 1.5;
        let s = GeneratingFunction::from_fn(
            1,
            SupportBox::centered(2, 3.0),
            move |z| c * z[0] * z[1] * (-(z[0] * z[0] + z[1] * z[1])).exp(),
            move |z, g| {
                let e = (-(z[0] * z[0] + z[1] * z[1])).exp();
                g[0] = c * z[1] * e * (1.0 - 2.0 * z[0] * z[0]);
                g[1] = c * z[0] * e * (1.0 - 2.0 * z[1] * z[1]);
            },
        )
        .unwrap();
        assert!(s.derivative_bounds().mixed_hessian > 1.0);
        for x in [[0.05, 0.1], [0.3, -0.2]] {
            let y = psi_apply(&s, &x).unwrap();
            let back = psi_inverse_apply(&s, &y).unwrap();
            let d = distance(&back, &x);
            assert!(d < 1e-9, "{d:e}");
        }
    }
}
