use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Halton sequence with a seeded Cranley–Patterson rotation.
#[derive(Debug, Clone)]
pub struct HaltonSampler {
    shift: Vec<f64>,
    seed: u64,
}

impl HaltonSampler {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sampler supports up to {} axes", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        Self { shift, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// The `index`-th point of the rotated sequence in `[0,1)^dim`.
    pub fn unit_point(&self, index: u64) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, base)| (radical_inverse(index + 1, base) + s).fract())
            .collect()
    }

    pub fn points_in_box(&self, lower: &[f64], upper: &[f64], count: usize) -> Vec<Vec<f64>> {
        (0..count as u64)
            .map(|i| {
                self.unit_point(i)
                    .iter()
                    .enumerate()
                    .map(|(a, u)| lower[a] + u * (upper[a] - lower[a]))
                    .collect()
            })
            .collect()
    }
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = HaltonSampler::new(3, 42).points_in_box(&[0.0; 3], &[1.0; 3], 10);
        let b = HaltonSampler::new(3, 42).points_in_box(&[0.0; 3], &[1.0; 3], 10);
        let c = HaltonSampler::new(3, 43).points_in_box(&[0.0; 3], &[1.0; 3], 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn fills_the_box_evenly() {
        let pts = HaltonSampler::new(2, 7).points_in_box(&[-1.0, -1.0], &[1.0, 1.0], 4096);
        let inside = pts.iter().filter(|p| p[0] * p[0] + p[1] * p[1] < 1.0).count();
        let frac = inside as f64 / pts.len() as f64;
        assert!((frac - std::f64::consts::FRAC_PI_4).abs() < 0.01);
    }
}
