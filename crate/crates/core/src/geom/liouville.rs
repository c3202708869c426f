/// Radial Liouville flow `μ_t(x) = c + e^{t/2}(x − c)` about a center `c`.
///
/// It expands the symplectic form conformally, `μ_t^*ω = e^t ω`. A nonzero
/// center gives a different Liouville field for the same `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleFlow {
    pub center: Vec<f64>,
}

impl LiouvilleFlow {
    pub fn new(center: Vec<f64>) -> Self {
        Self { center }
    }

    pub fn standard(dim: usize) -> Self {
        Self { center: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Linear scale factor `e^{t/2}`.
    pub fn factor(t: f64) -> f64 {
        (0.5 * t).exp()
    }

    pub fn apply(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let s = Self::factor(t);
        self.center.iter().zip(x).map(|(c, v)| c + s * (v - c)).collect()
    }

    pub fn apply_in_place(&self, t: f64, x: &mut [f64]) {
        let s = Self::factor(t);
        for (v, c) in x.iter_mut().zip(&self.center) {
            *v = c + s * (*v - c);
        }
    }

    pub fn inverse(&self, t: f64, x: &[f64]) -> Vec<f64> {
        self.apply(-t, x)
    }
}
