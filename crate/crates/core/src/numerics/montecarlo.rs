use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Estimate, NumericsConfig};

/// Draws per chunk; chunk `k` uses stream `k` of the seeded generator, so the
/// output never depends on how chunks are scheduled.
pub const CHUNK: usize = 1 << 16;

/// Generator for chunk `index` of a seeded run.
pub fn chunk_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }
}

/// Monte-Carlo mean of `sampler` over `cfg.mc_samples` draws.
///
/// `err` is three standard errors. Bit-identical for a fixed seed whatever the
/// thread count.
pub fn mc_mean<F>(sampler: F, cfg: &NumericsConfig) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let n = cfg.mc_samples.max(1);
    let chunks = n.div_ceil(CHUNK);
    let run = |k: usize| {
        let mut rng = chunk_rng(cfg.seed, k as u64);
        let len = CHUNK.min(n - k * CHUNK);
        let mut m = Moments::default();
        for _ in 0..len {
            m.push(sampler(&mut rng));
        }
        m
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Moments> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Moments> = (0..chunks).map(run).collect();
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    let var = if m.n > 1.0 { m.m2 / (m.n - 1.0) } else { 0.0 };
    Estimate::monte_carlo(m.mean, 3.0 * (var / m.n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_sampler_has_zero_error() {
        let cfg = NumericsConfig::default();
        let e = mc_mean(|_| 5.0, &cfg);
        assert_eq!(e.value, 5.0);
        assert_eq!(e.err, 0.0);
    }

    #[test]
    fn gaussian_mean_within_error() {
        let cfg = NumericsConfig::default();
        let e = mc_mean(
            |rng| {
                let x: f64 = StandardNormal.sample(rng);
                x
            },
            &cfg,
        );
        assert!(e.value.abs() <= e.err, "{} > {}", e.value, e.err);
        assert!((e.err - 3e-3).abs() < 1e-4);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = NumericsConfig {
            mc_samples: 200_000,
            seed: 11,
            ..NumericsConfig::default()
        };
        let f = |rng: &mut ChaCha8Rng| {
            let x: f64 = StandardNormal.sample(rng);
            x * x
        };
        let a = mc_mean(f, &cfg);
        let b = mc_mean(f, &cfg);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let c = mc_mean(f, &NumericsConfig { seed: 12, ..cfg });
        assert_ne!(a.value.to_bits(), c.value.to_bits());
    }
}
