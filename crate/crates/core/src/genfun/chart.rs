use crate::error::{check_dim, Result};

/// The global chart `((x, y), (ξ, η)) ↦ ((x, η), (y − η, ξ − x))` from a
/// neighbourhood of the diagonal of `R^{2n} × R^{2n}` to `T*R^{2n}`.
///
/// The diagonal goes to the zero section, and the graph of `Ψ(S)` goes to
/// the graph of `dS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeinsteinChart {
    pub n: usize,
}

impl WeinsteinChart {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    /// `(base, fiber)` of the pair `(source, image)`.
    pub fn forward(&self, source: &[f64], image: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n;
        check_dim(2 * n, source.len())?;
        check_dim(2 * n, image.len())?;
        let (x, y) = source.split_at(n);
        let (xi, eta) = image.split_at(n);
        let base = x.iter().chain(eta).copied().collect();
        let fiber = y
            .iter()
            .zip(eta)
            .map(|(a, b)| a - b)
            .chain(xi.iter().zip(x).map(|(a, b)| a - b))
            .collect();
        Ok((base, fiber))
    }

    /// `(source, image)` from `(base, fiber)`.
    pub fn backward(&self, base: &[f64], fiber: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n;
        check_dim(2 * n, base.len())?;
        check_dim(2 * n, fiber.len())?;
        let (x, eta) = base.split_at(n);
        let (dy, dxi) = fiber.split_at(n);
        let source = x.iter().copied().chain(eta.iter().zip(dy).map(|(e, d)| e + d)).collect();
        let image = x.iter().zip(dxi).map(|(a, d)| a + d).chain(eta.iter().copied()).collect();
        Ok((source, image))
    }
}
