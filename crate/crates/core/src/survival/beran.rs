use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};
use crate::survival::{StepFunction, SurvivalDataset};

/// Denominators below this are treated as exhausted weight mass.
const DENOM_EPS: f64 = 1e-12;

/// Nonnegative weights over the training records, summing to one.
/// Indexed in *record order* of the dataset it was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(SurvError::InvalidWeights(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SurvError::InvalidWeights(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// Gaussian-kernel relevance weights: `softmax(-||x - x_i||^2 / tau)`.
pub fn gaussian_weights(x: &[f64], dataset: &SurvivalDataset, tau: f64) -> Result<WeightVector> {
    if tau <= 0.0 {
        return Err(SurvError::NonPositiveKernelParam(tau));
    }
    if x.len() != dataset.dim() {
        return Err(SurvError::InputDimensionMismatch {
            got: x.len(),
            expected: dataset.dim(),
        });
    }
    let logits: Vec<f64> = dataset
        .records()
        .iter()
        .map(|r| {
            let sq: f64 = x
                .iter()
                .zip(&r.features)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            -sq / tau
        })
        .collect();
    Ok(WeightVector {
        weights: softmax(&logits),
    })
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// The Beran estimator of the conditional survival function, in the ratio
/// form `prod ((1 - C_s) / (1 - C_{s-1}))^{delta_s}` over time-ordered
/// records, where `C_s` is the cumulative weight.
pub fn beran_sf(dataset: &SurvivalDataset, alpha: &WeightVector) -> Result<StepFunction> {
    if alpha.len() != dataset.len() {
        return Err(SurvError::WeightLengthMismatch {
            got: alpha.len(),
            expected: dataset.len(),
        });
    }
    let times = dataset.distinct_times();
    let mut values = Vec::with_capacity(times.len());
    let mut s = 1.0f64;
    let mut cum = 0.0f64;
    let mut grid_pos = 0usize;
    let sorted = dataset.sorted_index();
    for (k, &idx) in sorted.iter().enumerate() {
        let r = dataset.record(idx);
        let w = alpha.as_slice()[idx];
        let denom = 1.0 - cum;
        cum += w;
        // Zero-weight factors are identically 1 and are skipped, which also
        // sidesteps 0/0 once the weight mass is exhausted.
        if r.event && w > DENOM_EPS {
            if denom <= DENOM_EPS {
                // Weight mass exhausted at an uncensored step: SF is 0 onward.
                s = 0.0;
            } else {
                s *= ((1.0 - cum) / denom).clamp(0.0, 1.0);
            }
        }
        // Close the value at this distinct time once its tie group ends.
        let last_of_group = k + 1 == sorted.len() || {
            let next = dataset.record(sorted[k + 1]);
            next.time != r.time
        };
        if last_of_group {
            values.push(s);
            grid_pos += 1;
        }
    }
    debug_assert_eq!(grid_pos, times.len());
    StepFunction::new_sf(times, values)
}

/// The Beran cumulative hazard in the log-difference form. Positions where
/// the survival function hits zero evaluate to `+inf`.
pub fn beran_chf(dataset: &SurvivalDataset, alpha: &WeightVector) -> Result<StepFunction> {
    if alpha.len() != dataset.len() {
        return Err(SurvError::WeightLengthMismatch {
            got: alpha.len(),
            expected: dataset.len(),
        });
    }
    let times = dataset.distinct_times();
    let mut values = Vec::with_capacity(times.len());
    let mut h = 0.0f64;
    let mut cum = 0.0f64;
    let sorted = dataset.sorted_index();
    for (k, &idx) in sorted.iter().enumerate() {
        let r = dataset.record(idx);
        let w = alpha.as_slice()[idx];
        let denom = 1.0 - cum;
        cum += w;
        if r.event && w > DENOM_EPS && h.is_finite() {
            if denom <= DENOM_EPS || 1.0 - cum <= 0.0 {
                h = f64::INFINITY;
            } else {
                h += denom.ln() - (1.0 - cum).ln();
            }
        }
        let last_of_group = k + 1 == sorted.len() || {
            let next = dataset.record(sorted[k + 1]);
            next.time != r.time
        };
        if last_of_group {
            values.push(h);
        }
    }
    StepFunction::new_chf(times, values)
}

/// Kaplan-Meier estimator: the Beran estimator under uniform weights.
pub fn kaplan_meier(dataset: &SurvivalDataset) -> Result<StepFunction> {
    beran_sf(dataset, &WeightVector::uniform(dataset.len()))
}

/// Nelson-Aalen cumulative hazard `H(t) = sum_{t_i <= t} d_i / n_i`.
pub fn nelson_aalen(dataset: &SurvivalDataset) -> Result<StepFunction> {
    let times = dataset.distinct_times();
    let n = dataset.len();
    let mut values = Vec::with_capacity(times.len());
    let mut h = 0.0f64;
    let mut at_risk = n as f64;
    let mut k = 0usize;
    let sorted = dataset.sorted_index();
    for &t in &times {
        let mut deaths = 0.0;
        let mut leaving = 0.0;
        while k < sorted.len() && dataset.record(sorted[k]).time == t {
            if dataset.record(sorted[k]).event {
                deaths += 1.0;
            }
            leaving += 1.0;
            k += 1;
        }
        if deaths > 0.0 {
            h += deaths / at_risk;
        }
        at_risk -= leaving;
        values.push(h);
    }
    StepFunction::new_chf(times, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survival::SurvivalRecord;
    use approx::assert_relative_eq;

    fn ds(rows: &[(f64, bool)]) -> SurvivalDataset {
        SurvivalDataset::new(
            rows.iter()
                .map(|&(t, e)| SurvivalRecord::new(vec![t], e, t))
                .collect(),
        )
        .unwrap()
    }

    /// Naive product-limit oracle over the sorted records.
    fn beran_oracle(dataset: &SurvivalDataset, alpha: &WeightVector, t: f64) -> f64 {
        let mut s = 1.0;
        let mut seen: Vec<usize> = Vec::new();
        for &idx in dataset.sorted_index() {
            let r = dataset.record(idx);
            if r.time > t {
                break;
            }
            let prior: f64 = seen.iter().map(|&j| alpha.as_slice()[j]).sum();
            if r.event {
                s *= 1.0 - alpha.as_slice()[idx] / (1.0 - prior);
            }
            seen.push(idx);
        }
        s
    }

    #[test]
    fn km_hand_product_limit() {
        let d = ds(&[(1.0, true), (2.0, false), (3.0, true)]);
        let km = kaplan_meier(&d).unwrap();
        assert_eq!(km.eval(0.5), 1.0);
        assert_relative_eq!(km.eval(1.0), 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(km.eval(2.5), 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(km.eval(3.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn km_single_event() {
        let d = ds(&[(5.0, true)]);
        let km = kaplan_meier(&d).unwrap();
        assert_eq!(km.eval(4.999), 1.0);
        assert_eq!(km.eval(5.0), 0.0);
    }

    #[test]
    fn single_atom_weight_on_first_event() {
        let d = ds(&[(1.0, true), (2.0, true), (3.0, true)]);
        let alpha = WeightVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let sf = beran_sf(&d, &alpha).unwrap();
        assert_eq!(sf.eval(0.9), 1.0);
        assert_eq!(sf.eval(1.0), 0.0);
    }

    #[test]
    fn random_alpha_matches_double_loop_oracle() {
        let d = ds(&[
            (1.0, true),
            (2.0, false),
            (3.0, true),
            (4.0, true),
            (5.0, false),
        ]);
        let raw = [0.3, 0.1, 0.25, 0.2, 0.15];
        let alpha = WeightVector::new(raw.to_vec()).unwrap();
        let sf = beran_sf(&d, &alpha).unwrap();
        for t in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 9.0] {
            assert_relative_eq!(sf.eval(t), beran_oracle(&d, &alpha, t), epsilon = 1e-12);
        }
    }

    #[test]
    fn chf_zero_when_weight_on_censored_only() {
        let d = ds(&[(1.0, true), (2.0, false), (3.0, true)]);
        let alpha = WeightVector::new(vec![0.0, 1.0, 0.0]).unwrap();
        let chf = beran_chf(&d, &alpha).unwrap();
        assert!(chf.values().iter().all(|&v| v == 0.0));
        let sf = beran_sf(&d, &alpha).unwrap();
        assert!(sf.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn exp_minus_chf_matches_sf() {
        let d = ds(&[
            (1.0, true),
            (1.0, false),
            (2.5, true),
            (4.0, true),
            (6.0, false),
        ]);
        let alpha = WeightVector::new(vec![0.15, 0.2, 0.3, 0.1, 0.25]).unwrap();
        let sf = beran_sf(&d, &alpha).unwrap();
        let chf = beran_chf(&d, &alpha).unwrap();
        for (s, h) in sf.values().iter().zip(chf.values()) {
            if *s > 1e-12 {
                assert_relative_eq!(*s, (-h).exp(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn gaussian_weights_symmetry_and_limits() {
        let d = SurvivalDataset::new(vec![
            SurvivalRecord::new(vec![1.0, 0.0], true, 1.0),
            SurvivalRecord::new(vec![-1.0, 0.0], true, 2.0),
        ])
        .unwrap();
        let w = gaussian_weights(&[0.0, 0.0], &d, 1.0).unwrap();
        assert_relative_eq!(w.as_slice()[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(w.as_slice()[1], 0.5, epsilon = 1e-12);

        // Flat-softmax limit.
        let w = gaussian_weights(&[0.3, 0.7], &d, 1e12).unwrap();
        assert_relative_eq!(w.as_slice()[0], 0.5, epsilon = 1e-6);

        // Tiny tau concentrates on the coincident point.
        let w = gaussian_weights(&[1.0, 0.0], &d, 1e-6).unwrap();
        assert!(w.as_slice()[0] > 1.0 - 1e-6);

        assert!(gaussian_weights(&[0.0, 0.0], &d, 0.0).is_err());
    }

    #[test]
    fn nelson_aalen_hand_case() {
        // n=3: events at 1 and 3, censored at 2.
        let d = ds(&[(1.0, true), (2.0, false), (3.0, true)]);
        let na = nelson_aalen(&d).unwrap();
        assert_relative_eq!(na.eval(1.0), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(na.eval(2.0), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(na.eval(3.0), 1.0 / 3.0 + 1.0, epsilon = 1e-12);
    }
}
