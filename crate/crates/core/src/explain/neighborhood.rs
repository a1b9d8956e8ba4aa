use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodConfig {
    pub n_samples: usize,
    pub sigma_sample: f64,
    pub sigma_weight: f64,
}

impl Default for NeighborhoodConfig {
    fn default() -> Self {
        Self {
            n_samples: 100,
            sigma_sample: 0.2,
            sigma_weight: 0.4,
        }
    }
}

/// Perturbed points around an anchor with unnormalized Gaussian proximity
/// weights `v_j = exp(-||z_j - x||^2 / sigma_weight^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSample {
    pub anchor: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl NeighborhoodSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn sample_neighborhood(
    x: &[f64],
    config: &NeighborhoodConfig,
    seed: u64,
) -> Result<NeighborhoodSample> {
    if config.sigma_sample <= 0.0 || config.sigma_weight <= 0.0 {
        return Err(SurvError::InvalidConfig(
            "neighborhood sigmas must be positive".into(),
        ));
    }
    if config.n_samples == 0 {
        return Err(SurvError::InvalidConfig(
            "neighborhood must contain at least one point".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sw2 = config.sigma_weight * config.sigma_weight;
    let mut points = Vec::with_capacity(config.n_samples);
    let mut weights = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        let z: Vec<f64> = x
            .iter()
            .map(|&xi| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                xi + config.sigma_sample * eps
            })
            .collect();
        let sq: f64 = z.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        points.push(z);
        weights.push((-sq / sw2).exp());
    }
    Ok(NeighborhoodSample {
        anchor: x.to_vec(),
        points,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_spread_collapses_onto_anchor() {
        let cfg = NeighborhoodConfig {
            n_samples: 10,
            sigma_sample: 1e-12,
            sigma_weight: 0.4,
        };
        let s = sample_neighborhood(&[1.0, -2.0], &cfg, 0).unwrap();
        for (z, &v) in s.points.iter().zip(&s.weights) {
            assert!((z[0] - 1.0).abs() < 1e-9 && (z[1] + 2.0).abs() < 1e-9);
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fixed_seed_reproduces_sample() {
        let cfg = NeighborhoodConfig {
            n_samples: 3,
            ..Default::default()
        };
        let a = sample_neighborhood(&[0.5; 4], &cfg, 42).unwrap();
        let b = sample_neighborhood(&[0.5; 4], &cfg, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_neighborhood(&[0.5; 4], &cfg, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut cfg = NeighborhoodConfig::default();
        cfg.sigma_sample = 0.0;
        assert!(sample_neighborhood(&[0.0], &cfg, 0).is_err());
        let mut cfg = NeighborhoodConfig::default();
        cfg.n_samples = 0;
        assert!(sample_neighborhood(&[0.0], &cfg, 0).is_err());
    }
}
