//! Seeded sampling of rational chart points. Regularity of a distribution is
//! certified probabilistically by agreement of exact pointwise ranks on such
//! a sample, so reproducibility matters: the sampler is deterministic for a
//! fixed seed.

use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::{ChartRef, RationalPoint};
use crate::Rational;

pub const DEFAULT_SAMPLES: usize = 25;
pub const DEFAULT_SEED: u64 = 0xE47E1;

#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

impl SamplePlan {
    pub fn new(samples: usize, seed: u64) -> Self {
        SamplePlan { samples, seed }
    }

    /// Coordinates with numerators in {-3..3} and denominators in {1,2,3}.
    pub fn points(&self, chart: &ChartRef) -> Vec<RationalPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.samples)
            .map(|_| Self::point_from_rng(chart, &mut rng))
            .collect()
    }

    pub fn point_from_rng(chart: &ChartRef, rng: &mut impl Rng) -> RationalPoint {
        let coords = (0..chart.dim()).map(|_| rational_from_rng(rng)).collect();
        RationalPoint::new(chart.clone(), coords).expect("dim matches chart")
    }

    /// A rational parameter value in [0, 1] with small denominator.
    pub fn unit_rational(rng: &mut impl Rng) -> Rational {
        let den: i64 = rng.gen_range(1..=6);
        let num: i64 = rng.gen_range(0..=den);
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub fn rational_from_rng(rng: &mut impl Rng) -> Rational {
    let num: i64 = rng.gen_range(-3..=3);
    let den: i64 = rng.gen_range(1..=3);
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    #[test]
    fn deterministic_for_fixed_seed() {
        let ch = Chart::new(["x", "y"]).unwrap();
        let a = SamplePlan::new(10, 7).points(&ch);
        let b = SamplePlan::new(10, 7).points(&ch);
        assert_eq!(a, b);
        let c = SamplePlan::new(10, 8).points(&ch);
        assert_ne!(a, c);
    }
}
