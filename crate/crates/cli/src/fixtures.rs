//! Closed-form fixtures with analytic gradients, shared by the verification
//! checks.

use calabi_core::exprlang::bump;
use calabi_core::genfun::GeneratingFunction;
use calabi_core::geom::{cartesian_to_polar, polar_to_cartesian, SupportBox};
use calabi_core::hamflow::{HamiltonianField, SymplecticMapRep};
use calabi_core::rotations::{AngularProfile, ProfileFlags};
use calabi_core::Result;

/// `a·b(|x − c|/ρ)·(1 + β·t·(x_k − c_k))` with the smooth bump
/// `b(s) = exp(1 − 1/(1 − s²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub drift: f64,
    pub drift_axis: usize,
}

impl BumpSpec {
    pub fn centered(dim: usize, amplitude: f64) -> Self {
        Self {
            amplitude,
            center: vec![0.0; dim],
            radius: 1.0,
            drift: 0.0,
            drift_axis: 0,
        }
    }

    pub fn at(mut self, center: &[f64]) -> Self {
        self.center = center.to_vec();
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_drift(mut self, drift: f64, axis: usize) -> Self {
        self.drift = drift;
        self.drift_axis = axis;
        self
    }

    /// Returns `(value, gradient)` at `(t, x)`.
    fn eval(&self, t: f64, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let rho2 = self.radius * self.radius;
        let s2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() / rho2;
        if s2 >= 1.0 {
            if let Some(g) = grad {
                g.fill(0.0);
            }
            return 0.0;
        }
        let k = self.drift_axis;
        let b = (1.0 - 1.0 / (1.0 - s2)).exp();
        let w = 1.0 + self.drift * t * (x[k] - self.center[k]);
        if let Some(g) = grad {
            let db = -2.0 * b / ((1.0 - s2) * (1.0 - s2) * rho2);
            for (i, gi) in g.iter_mut().enumerate() {
                *gi = self.amplitude * db * (x[i] - self.center[i]) * w;
            }
            g[k] += self.amplitude * b * self.drift * t;
        }
        self.amplitude * b * w
    }

    pub fn field(&self) -> Result<HamiltonianField> {
        let dim = self.center.len();
        let (a, b) = (self.clone(), self.clone());
        Ok(HamiltonianField::from_fn_with_gradient(
            dim / 2,
            SupportBox::new(self.center.clone(), self.radius),
            move |t, x| a.eval(t, x, None),
            move |t, x, g| {
                b.eval(t, x, Some(g));
            },
        )?
        .autonomous(self.drift == 0.0)
        .with_label(format!("bump(a={}, c={:?}, r={}, drift={})", self.amplitude, self.center, self.radius, self.drift)))
    }
}

/// The radial integral `|S^{2n−1}|·∫₀^ρ a·b(r/ρ)·r^{2n−1} dr` of an
/// autonomous [`BumpSpec`], by composite Simpson on 20000 intervals.
pub fn bump_integral(spec: &BumpSpec) -> f64 {
    let dim = spec.center.len();
    let n = dim / 2;
    let fact: f64 = (1..n).map(|i| i as f64).product();
    let sphere = 2.0 * std::f64::consts::PI.powi(n as i32) / fact;
    let m = 20000;
    let h = spec.radius / m as f64;
    let f = |i: usize| {
        let r = i as f64 * h;
        bump(r / spec.radius) * r.powi(dim as i32 - 1)
    };
    let mut sum = f(0) + f(m);
    for i in 1..m {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
    }
    spec.amplitude * sphere * sum * h / 3.0
}

/// `scale·(1 − r²)³` on the unit disc and its time-one map, the rotation
/// by `6·scale·(1 − r²)²`.
pub fn cubic_bump_rotation(scale: f64) -> Result<(HamiltonianField, SymplecticMapRep)> {
    let support = SupportBox::centered(2, 1.0);
    let h = HamiltonianField::from_fn_with_gradient(
        1,
        support.clone(),
        move |_, x| scale * (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powi(3),
        move |_, x, g| {
            let u = (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0);
            let d = -6.0 * scale * u * u;
            g[0] = d * x[0];
            g[1] = d * x[1];
        },
    )?
    .autonomous(true)
    .with_label(format!("{scale}*(1-r^2)^3"));
    let angle = move |r: f64| 6.0 * scale * (1.0 - r * r).max(0.0).powi(2);
    let rotate = move |sign: f64| {
        move |x: &[f64]| -> Result<Vec<f64>> {
            let (r, th) = cartesian_to_polar(x);
            Ok(polar_to_cartesian(r, th + sign * angle(r)).to_vec())
        }
    };
    let phi = SymplecticMapRep::closed_form(2, Some(support), "rot[6(1-r^2)^2]", rotate(1.0), rotate(-1.0));
    Ok((h, phi))
}

/// `a·(1 − |z|²)₊^k·(1 + c·z_0)` as a generating function on `R^{2n}`.
pub fn polynomial_genfun(n: usize, amplitude: f64, power: i32, tilt: f64) -> Result<GeneratingFunction> {
    let value = move |z: &[f64]| {
        let u = (1.0 - z.iter().map(|v| v * v).sum::<f64>()).max(0.0);
        amplitude * u.powi(power) * (1.0 + tilt * z[0])
    };
    let gradient = move |z: &[f64], g: &mut [f64]| {
        let u = (1.0 - z.iter().map(|v| v * v).sum::<f64>()).max(0.0);
        let w = 1.0 + tilt * z[0];
        let d = if power >= 1 { -2.0 * amplitude * power as f64 * u.powi(power - 1) * w } else { 0.0 };
        for (gi, zi) in g.iter_mut().zip(z) {
            *gi = d * zi;
        }
        g[0] += amplitude * u.powi(power) * tilt;
    };
    Ok(GeneratingFunction::from_fn(n, SupportBox::centered(2 * n, 1.0), value, gradient)?
        .with_label(format!("{amplitude}*(1-|z|^2)^{power}*(1+{tilt}*z1)")))
}

/// `a·x·η·(1 − x² − η²)₊³` on the plane.
pub fn saddle_genfun(amplitude: f64) -> Result<GeneratingFunction> {
    Ok(GeneratingFunction::from_fn(
        1,
        SupportBox::centered(2, 1.0),
        move |z| {
            let u = (1.0 - z[0] * z[0] - z[1] * z[1]).max(0.0);
            amplitude * z[0] * z[1] * u.powi(3)
        },
        move |z, g| {
            let u = (1.0 - z[0] * z[0] - z[1] * z[1]).max(0.0);
            g[0] = amplitude * (z[1] * u.powi(3) - 6.0 * z[0] * z[0] * z[1] * u * u);
            g[1] = amplitude * (z[0] * u.powi(3) - 6.0 * z[0] * z[1] * z[1] * u * u);
        },
    )?
    .with_label(format!("{amplitude}*x*eta*(1-r^2)^3")))
}

/// `a·(1 − r²)₊` on the unit disc.
pub fn tent_profile(amplitude: f64) -> Result<AngularProfile> {
    AngularProfile::from_fn(
        move |r: f64| amplitude * (1.0 - r * r).max(0.0),
        1.0,
        ProfileFlags::SMOOTH,
        format!("{amplitude}*(1-r^2)"),
    )
}

/// `a·b(r)` on the unit disc.
pub fn bump_profile(amplitude: f64) -> Result<AngularProfile> {
    AngularProfile::from_fn(move |r: f64| amplitude * bump(r), 1.0, ProfileFlags::SMOOTH, format!("{amplitude}*bump(r)"))
}

/// `−log(r)·b(r)`: unbounded at the origin but integrable, with
/// `r·ρ(r) → 0`.
pub fn log_profile() -> Result<AngularProfile> {
    AngularProfile::from_fn(
        |r: f64| if r > 0.0 { -r.ln() * bump(r) } else { f64::INFINITY },
        1.0,
        ProfileFlags {
            integrable_near_zero: true,
            r_rho_to_zero: true,
            bounded: false,
        },
        "-log(r)*bump(r)",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_gradient_matches_differences() {
        let spec = BumpSpec::centered(4, 0.7).at(&[0.1, -0.2, 0.0, 0.3]).with_radius(0.9).with_drift(0.5, 2);
        let f = spec.field().unwrap();
        let x = [0.2, -0.1, 0.15, 0.4];
        let g = f.gradient(0.6, &x).unwrap();
        for i in 0..4 {
            let h = 1e-6;
            let (mut a, mut b) = (x, x);
            a[i] += h;
            b[i] -= h;
            let fd = (f.value(0.6, &a).unwrap() - f.value(0.6, &b).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn genfun_gradients_match_differences() {
        for s in [polynomial_genfun(1, 0.2, 2, 0.3).unwrap(), saddle_genfun(0.3).unwrap()] {
            let z = [0.3, -0.4];
            let g = s.gradient(&z).unwrap();
            for i in 0..2 {
                let h = 1e-6;
                let (mut a, mut b) = (z, z);
                a[i] += h;
                b[i] -= h;
                let fd = (s.value(&a).unwrap() - s.value(&b).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7);
            }
        }
    }
}
