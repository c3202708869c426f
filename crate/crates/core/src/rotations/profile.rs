use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exprlang::Expression;

/// Hypotheses a profile satisfies near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileFlags {
    /// `∫₀^ε |ρ| dr < ∞`.
    pub integrable_near_zero: bool,
    /// `r·ρ(r) → 0` as `r → 0`.
    pub r_rho_to_zero: bool,
    /// `ρ` is bounded.
    pub bounded: bool,
}

impl ProfileFlags {
    pub const SMOOTH: ProfileFlags = ProfileFlags {
        integrable_near_zero: true,
        r_rho_to_zero: true,
        bounded: true,
    };
}

type RadialFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Angular profile `ρ` of a fibered rotation, vanishing beyond
/// `support_radius`.
#[derive(Clone)]
pub struct AngularProfile {
    rho: RadialFn,
    support_radius: f64,
    flags: ProfileFlags,
    label: String,
}

impl fmt::Debug for AngularProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AngularProfile")
            .field("label", &self.label)
            .field("support_radius", &self.support_radius)
            .field("flags", &self.flags)
            .finish()
    }
}

/// Smooth step: `0` for `s ≤ 0`, `1` for `s ≥ 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

const SUPPORT_SAMPLES: usize = 64;

impl AngularProfile {
    pub fn from_fn<F>(rho: F, support_radius: f64, flags: ProfileFlags, label: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_fallible(Arc::new(move |r| Ok(rho(r))), support_radius, flags, label.into())
    }

    /// Profile from an expression in the variable `r`.
    pub fn from_expression(expr: &Expression, support_radius: f64, flags: ProfileFlags) -> Result<Self> {
        let compiled = expr.compile(&["r"])?;
        let rho = move |r: f64| -> Result<f64> { Ok(compiled.eval(&[r])?) };
        Self::from_fallible(Arc::new(rho), support_radius, flags, expr.source().to_string())
    }

    fn from_fallible(rho: RadialFn, support_radius: f64, flags: ProfileFlags, label: String) -> Result<Self> {
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("support radius must be positive, got {support_radius}")));
        }
        for i in 1..=SUPPORT_SAMPLES {
            let r = support_radius * (1.0 + i as f64 / SUPPORT_SAMPLES as f64);
            let v = rho(r)?;
            if v.abs() > 1e-12 {
                return Err(Error::Support(format!(
                    "profile {label} is {v:.3e} at r = {r:.4} beyond its support radius {support_radius}"
                )));
            }
        }
        Ok(Self {
            rho,
            support_radius,
            flags,
            label,
        })
    }

    pub fn zero(support_radius: f64) -> Self {
        Self {
            rho: Arc::new(|_| Ok(0.0)),
            support_radius,
            flags: ProfileFlags::SMOOTH,
            label: "0".into(),
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn flags(&self) -> ProfileFlags {
        self.flags
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `ρ(r)`; zero for `r ≥ R` and at the origin, which every fibered
    /// rotation fixes.
    pub fn value(&self, r: f64) -> Result<f64> {
        if r >= self.support_radius || r <= 0.0 {
            return Ok(0.0);
        }
        let v = (self.rho)(r)?;
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("profile {} is not finite at r = {r}", self.label)));
        }
        Ok(v)
    }

    /// `ρ` times a smooth step vanishing on `[0, ε]` and equal to one on
    /// `[2ε, ∞)`.
    pub fn smoothed(&self, eps: f64) -> Result<AngularProfile> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("smoothing cutoff must be positive, got {eps}")));
        }
        let inner = self.clone();
        Ok(AngularProfile {
            rho: Arc::new(move |r| {
                let cut = smooth_step((r - eps) / eps);
                if cut == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(cut * inner.value(r)?)
                }
            }),
            support_radius: self.support_radius,
            flags: ProfileFlags::SMOOTH,
            label: format!("{}|eps={eps}", self.label),
        })
    }

    /// `sup |ρ|` over `count` uniform radii in `[r_min, R]`.
    pub fn sup_on(&self, r_min: f64, count: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..=count {
            let r = r_min + (self.support_radius - r_min) * i as f64 / count as f64;
            worst = worst.max(self.value(r)?.abs());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.5), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn support_is_checked() {
        let e = Expression::parse("1-r^2").unwrap();
        assert!(matches!(
            AngularProfile::from_expression(&e, 1.0, ProfileFlags::SMOOTH),
            Err(Error::Support(_))
        ));
        let e = Expression::parse("max(0, 1-r^2)").unwrap();
        let p = AngularProfile::from_expression(&e, 1.0, ProfileFlags::SMOOTH).unwrap();
        assert_eq!(p.value(0.5).unwrap(), 0.75);
        assert_eq!(p.value(1.2).unwrap(), 0.0);
    }

    #[test]
    fn smoothing_vanishes_near_origin() {
        let e = Expression::parse("-log(r)*bump(r)").unwrap();
        let flags = ProfileFlags {
            integrable_near_zero: true,
            r_rho_to_zero: true,
            bounded: false,
        };
        let p = AngularProfile::from_expression(&e, 1.0, flags).unwrap();
        let s = p.smoothed(0.1).unwrap();
        assert_eq!(s.value(0.05).unwrap(), 0.0);
        assert_eq!(s.value(0.5).unwrap(), p.value(0.5).unwrap());
        assert!(s.flags().bounded);
    }
}
