//! Phase-space geometry of `R^{2n}` with `ω = Σ dq_i ∧ dp_i`.
//!
//! Coordinates are always ordered `(q1..qn, p1..pn)`. Volumes are standard
//! Lebesgue volume `dq1 dp1 … dqn dpn`, i.e. the top power of `ω` without a
//! factorial normalisation.

mod interp;
mod liouville;
mod quadrature;
mod sampling;

pub use interp::{lagrange_weights, CubicInterpolator};
pub use liouville::LiouvilleFlow;
pub use quadrature::{
    integrate, integrate_samples, integrate_with_tolerance, QuadratureRule, UniformGrid, BOUNDARY_TOLERANCE,
};
pub use sampling::HaltonSampler;

use crate::error::{check_dim, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    coords: Vec<f64>,
}

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(crate::Error::InvalidArgument(format!(
                "phase point needs an even, positive number of coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    pub fn from_qp(q: &[f64], p: &[f64]) -> Result<Self> {
        check_dim(q.len(), p.len())?;
        let mut coords = q.to_vec();
        coords.extend_from_slice(p);
        Self::new(coords)
    }

    pub fn origin(n: usize) -> Self {
        Self { coords: vec![0.0; 2 * n] }
    }

    /// Half-dimension.
    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn q(&self) -> &[f64] {
        &self.coords[..self.n()]
    }

    pub fn p(&self) -> &[f64] {
        &self.coords[self.n()..]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }
}

/// `Σ_i (u_{q_i} v_{p_i} − u_{p_i} v_{q_i})`.
pub fn omega(u: &[f64], v: &[f64], n: usize) -> Result<f64> {
    check_dim(2 * n, u.len())?;
    check_dim(2 * n, v.len())?;
    Ok((0..n).map(|i| u[i] * v[n + i] - u[n + i] * v[i]).sum())
}

/// Euclidean distance between two coordinate slices of equal length.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn polar_to_cartesian(r: f64, theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [r * c, r * s]
}

/// `(r, θ)` with `θ ∈ (−π, π]`; the origin maps to `(0, 0)`.
pub fn cartesian_to_polar(x: &[f64]) -> (f64, f64) {
    let (q, p) = (x[0], x[1]);
    if q == 0.0 && p == 0.0 {
        (0.0, 0.0)
    } else {
        (q.hypot(p), p.atan2(q))
    }
}

/// Sup-norm ball `|x − center|_∞ ≤ radius`, plus a padding used when laying
/// out quadrature and recovery grids around it.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBox {
    pub center: Vec<f64>,
    pub radius: f64,
    pub padding: f64,
}

pub const DEFAULT_PADDING_FRACTION: f64 = 0.1;

impl SupportBox {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        let padding = DEFAULT_PADDING_FRACTION * radius;
        Self { center, radius, padding }
    }

    pub fn centered(dim: usize, radius: f64) -> Self {
        Self::new(vec![0.0; dim], radius)
    }

    pub fn with_padding(mut self, padding: f64) -> Self {
        self.padding = padding;
        self
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Half-width of the padded box.
    pub fn outer_radius(&self) -> f64 {
        self.radius + self.padding
    }

    pub fn lower(&self) -> Vec<f64> {
        self.center.iter().map(|c| c - self.outer_radius()).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center.iter().map(|c| c + self.outer_radius()).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.center.iter().zip(x).all(|(c, v)| (v - c).abs() <= self.radius)
    }

    pub fn contains_padded(&self, x: &[f64]) -> bool {
        let r = self.outer_radius();
        self.center.iter().zip(x).all(|(c, v)| (v - c).abs() <= r)
    }

    /// Smallest cube containing both boxes; padding is the larger of the two.
    pub fn union(&self, other: &SupportBox) -> SupportBox {
        let mut center = Vec::with_capacity(self.dim());
        let mut half = 0.0f64;
        for i in 0..self.dim() {
            let lo = (self.center[i] - self.radius).min(other.center[i] - other.radius);
            let hi = (self.center[i] + self.radius).max(other.center[i] + other.radius);
            center.push(0.5 * (lo + hi));
            half = half.max(0.5 * (hi - lo));
        }
        SupportBox {
            center,
            radius: half,
            padding: self.padding.max(other.padding),
        }
    }

    /// Image of the box under `x ↦ origin + s (x − origin)`.
    pub fn scaled_about(&self, origin: &[f64], s: f64) -> SupportBox {
        SupportBox {
            center: self.center.iter().zip(origin).map(|(c, o)| o + s * (c - o)).collect(),
            radius: s * self.radius,
            padding: s * self.padding,
        }
    }

    pub fn fits_inside(&self, outer: &SupportBox) -> bool {
        self.center
            .iter()
            .zip(&outer.center)
            .all(|(c, o)| (c - o).abs() + self.radius <= outer.radius + 1e-12)
    }
}
