use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded, reproducible stream of measurement noise.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for trajectory `index` of an ensemble seeded with `base`.
    pub fn for_trajectory(base: u64, index: u64) -> Self {
        Self::new(base.wrapping_add(index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Wiener increment ~ Normal(0, dt).
    #[inline]
    pub fn wiener(&mut self, dt: f64) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        z * dt.sqrt()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_identical_streams() {
        let mut a = NoiseSource::new(42);
        let mut b = NoiseSource::new(42);
        for _ in 0..1000 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
            assert_eq!(a.wiener(1e-4).to_bits(), b.wiener(1e-4).to_bits());
        }
    }

    #[test]
    fn different_seeds_differ() {
        let mut a = NoiseSource::for_trajectory(10, 0);
        let mut b = NoiseSource::for_trajectory(10, 1);
        assert_eq!(b.seed(), 11);
        assert_ne!(a.uniform(), b.uniform());
    }

    #[test]
    fn wiener_variance() {
        let mut n = NoiseSource::new(7);
        let dt = 0.01;
        let count = 200_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..count {
            let w = n.wiener(dt);
            sum += w;
            sq += w * w;
        }
        let mean = sum / count as f64;
        let var = sq / count as f64 - mean * mean;
        assert!(mean.abs() < 4.0 * (dt / count as f64).sqrt());
        assert!((var - dt).abs() < 4.0 * dt * (2.0 / count as f64).sqrt());
    }
}
