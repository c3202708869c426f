use super::HamiltonianField;
use crate::error::{check_dim, Error, Result};
use crate::geom::distance;

/// Default number of RK4 steps per unit time.
pub const DEFAULT_STEPS: usize = 100;

/// Integrates `ẋ = X_H(t, x)` from `t0` to `t1` with `steps` classical
/// fourth-order Runge–Kutta steps. Points outside the padded support do not
/// move.
pub fn flow(h: &HamiltonianField, t0: f64, t1: f64, x: &[f64], steps: usize) -> Result<Vec<f64>> {
    check_dim(h.dim(), x.len())?;
    if steps == 0 {
        return Err(Error::InvalidArgument("flow needs at least one step".into()));
    }
    let mut y = x.to_vec();
    if t0 == t1 || !h.support().contains_padded(x) {
        return Ok(y);
    }
    let d = y.len();
    let dt = (t1 - t0) / steps as f64;
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        h.vector_field_into(t, &y, &mut k1)?;
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        h.vector_field_into(t + 0.5 * dt, &tmp, &mut k2)?;
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        h.vector_field_into(t + 0.5 * dt, &tmp, &mut k3)?;
        for i in 0..d {
            tmp[i] = y[i] + dt * k3[i];
        }
        h.vector_field_into(t + dt, &tmp, &mut k4)?;
        for i in 0..d {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y)
}

/// Number of steps for a flow over `|t1 − t0|` at `steps_per_unit`.
pub fn steps_for(t0: f64, t1: f64, steps_per_unit: usize) -> usize {
    ((t1 - t0).abs() * steps_per_unit as f64).ceil().max(1.0) as usize
}

/// [`flow`] with a step-halving check: the result with `2·steps` is
/// returned if it agrees with the `steps` result within `tolerance`.
pub fn flow_checked(
    h: &HamiltonianField,
    t0: f64,
    t1: f64,
    x: &[f64],
    steps: usize,
    tolerance: f64,
) -> Result<Vec<f64>> {
    let coarse = flow(h, t0, t1, x, steps)?;
    let fine = flow(h, t0, t1, x, 2 * steps)?;
    let gap = distance(&coarse, &fine);
    if gap > tolerance {
        return Err(Error::Resolution(format!(
            "step halving changed the flow of {} by {gap:.3e} (> {tolerance:.3e}) at {x:?}; increase steps",
            h.label()
        )));
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::Expression;
    use crate::geom::SupportBox;

    fn field(src: &str, radius: f64) -> HamiltonianField {
        HamiltonianField::from_expression(&Expression::parse(src).unwrap(), 1, SupportBox::centered(2, radius)).unwrap()
    }

    #[test]
    fn zero_field_is_identity() {
        let y = flow(&HamiltonianField::zero(1), 0.0, 1.0, &[0.3, 0.2], 10).unwrap();
        assert_eq!(y, vec![0.3, 0.2]);
    }

    #[test]
    fn harmonic_flow_is_clockwise_rotation() {
        let h = field("(q1^2+p1^2)/2", 10.0);
        let (q, p, t) = (0.8, -0.3, 1.3);
        let y = flow(&h, 0.0, t, &[q, p], 200).unwrap();
        let exact = [q * t.cos() + p * t.sin(), -q * t.sin() + p * t.cos()];
        assert!(distance(&y, &exact) < 1e-8, "{y:?} vs {exact:?}");
    }

    #[test]
    fn autonomous_energy_is_conserved() {
        // H = exp(−r²)·(1 + q) with exact gradient, so the only drift is
        // the integrator's own.
        let h = HamiltonianField::from_fn_with_gradient(
            1,
            SupportBox::centered(2, 8.0),
            |_, x| (-(x[0] * x[0] + x[1] * x[1])).exp() * (1.0 + x[0]),
            |_, x, g| {
                let e = (-(x[0] * x[0] + x[1] * x[1])).exp();
                g[0] = e * (1.0 - 2.0 * x[0] * (1.0 + x[0]));
                g[1] = -2.0 * x[1] * e * (1.0 + x[0]);
            },
        )
        .unwrap();
        let x0 = [0.4, 0.1];
        let e0 = h.value(0.0, &x0).unwrap();
        for k in 1..=10 {
            let y = flow(&h, 0.0, 0.1 * k as f64, &x0, 20 * k).unwrap();
            assert!((h.value(0.0, &y).unwrap() - e0).abs() < 1e-8);
        }
    }

    #[test]
    fn step_halving_detects_underresolution() {
        let h = field("(q1^2+p1^2)/2", 10.0);
        assert!(flow_checked(&h, 0.0, 10.0, &[1.0, 0.0], 2, 1e-6).is_err());
        assert!(flow_checked(&h, 0.0, 1.0, &[1.0, 0.0], 100, 1e-8).is_ok());
    }

    #[test]
    fn backward_flow_inverts_forward() {
        let h = field("0.5*bump(sqrt(q1^2+p1^2))*(1+t*p1)", 1.0);
        let x = [0.2, -0.5];
        let y = flow(&h, 0.0, 1.0, &x, 100).unwrap();
        let z = flow(&h, 1.0, 0.0, &y, 100).unwrap();
        assert!(distance(&x, &z) < 1e-9);
    }
}
