use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SurvError};
use crate::explain::common::{grid_values, IntervalGrid};
use crate::explain::neighborhood::sample_neighborhood;
use crate::explain::result::{Diagnostics, ExplainConfig, ExplanationResult, Method};
use crate::explain::BlackBox;
use crate::survival::{nelson_aalen, StepFunction, SurvivalDataset};

/// Intervals where either CHF falls at or below this are excluded from the
/// log-ratio regression.
pub(crate) const LOG_EPS: f64 = 1e-6;

/// Singular values below this (relative to the largest) are treated as zero,
/// which turns the normal-equation solve into the minimum-norm solution.
const SVD_EPS: f64 = 1e-10;

/// Cox-surrogate explanation: weighted least squares of
/// `ln H^(i)(z_j) - ln H_0^(i)` on `z_j` over intervals and perturbations,
/// solved in closed form.
pub fn fit_survlime(
    blackbox: &dyn BlackBox,
    dataset: &SurvivalDataset,
    x: &[f64],
    cfg: &ExplainConfig,
) -> Result<ExplanationResult> {
    cfg.validate()?;
    let d = dataset.dim();
    let grid = IntervalGrid::from_dataset(dataset);
    let baseline = grid_values(&nelson_aalen(dataset)?, &grid)?;
    let sample = sample_neighborhood(x, &cfg.neighborhood, cfg.seed)?;

    let mut m = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut sq_sum = 0.0;
    let mut used = 0usize;
    for (j, z) in sample.points.iter().enumerate() {
        let chf = grid_values(&blackbox.predict_chf(z)?, &grid)?;
        let mut a_sum = 0.0;
        let mut ay_sum = 0.0;
        for i in 0..grid.len() {
            if chf[i] <= LOG_EPS || baseline[i] <= LOG_EPS {
                continue;
            }
            let a = sample.weights[j] * grid.widths[i];
            let y = chf[i].ln() - baseline[i].ln();
            a_sum += a;
            ay_sum += a * y;
            sq_sum += a * y * y;
            used += 1;
        }
        if a_sum == 0.0 {
            continue;
        }
        let zv = DVector::from_column_slice(z);
        m += &zv * zv.transpose() * a_sum;
        rhs += &zv * ay_sum;
    }
    if used == 0 {
        return Err(SurvError::AllIntervalsExcluded);
    }

    let svd = m.clone().svd(true, true);
    let b = svd
        .solve(&rhs, SVD_EPS * svd.singular_values.max().max(1.0))
        .map_err(|e| SurvError::InvalidConfig(e.to_string()))?;

    // Loss value at the solution; the sum of squares of `y` is the loss at
    // b = 0 and serves as the reported starting point.
    let final_loss = sq_sum - 2.0 * b.dot(&rhs) + (&m * &b).dot(&b);
    let importance: Vec<f64> = b.iter().copied().collect();
    let fitted_sf = cox_surrogate_sf(&grid, &baseline, &importance, x)?;
    let result = ExplanationResult {
        method: Method::Survlime,
        importance,
        curves: None,
        fitted_sf,
        diagnostics: Diagnostics {
            initial_loss: sq_sum,
            final_loss,
            epochs: 0,
            seed: cfg.seed,
        },
    };
    result.validate()?;
    Ok(result)
}

fn cox_surrogate_sf(
    grid: &IntervalGrid,
    baseline: &[f64],
    b: &[f64],
    x: &[f64],
) -> Result<StepFunction> {
    let risk = b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>().exp();
    let values = baseline.iter().map(|h| (-h * risk).exp()).collect();
    StepFunction::new_sf(grid.times.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::testutil::{cox_blackbox, toy_dataset, ConstantBlackBox};
    use crate::explain::NeighborhoodConfig;

    #[test]
    fn recovers_planted_cox_coefficients() {
        let ds = toy_dataset(30, 4, 3);
        let b_true = vec![0.5, -0.3, 0.2, 0.0];
        let bb = cox_blackbox(&ds, b_true.clone());
        let cfg = ExplainConfig {
            seed: 11,
            ..Default::default()
        };
        let r = fit_survlime(&bb, &ds, &[0.2, -0.1, 0.3, 0.4], &cfg).unwrap();
        for (got, want) in r.importance.iter().zip(&b_true) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
        assert!(r.curves.is_none());
    }

    // A collapsed neighborhood makes the design rank one; the solver must
    // return the minimum-norm solution, which is proportional to the anchor.
    #[test]
    fn degenerate_design_yields_minimum_norm_solution() {
        let ds = toy_dataset(25, 3, 13);
        let b_true = vec![0.4, -0.2, 0.3];
        let bb = cox_blackbox(&ds, b_true.clone());
        let cfg = ExplainConfig {
            neighborhood: NeighborhoodConfig {
                n_samples: 20,
                sigma_sample: 1e-9,
                sigma_weight: 0.4,
            },
            seed: 17,
            ..Default::default()
        };
        let x = [0.5, -0.25, 0.1];
        let r = fit_survlime(&bb, &ds, &x, &cfg).unwrap();
        let y: f64 = b_true.iter().zip(&x).map(|(b, v)| b * v).sum();
        let nx: f64 = x.iter().map(|v| v * v).sum();
        for (got, &xi) in r.importance.iter().zip(&x) {
            let want = y * xi / nx;
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn all_small_hazards_are_rejected() {
        let ds = toy_dataset(10, 2, 23);
        let grid = IntervalGrid::from_dataset(&ds);
        let values = vec![1e-9; grid.len()];
        let bb = ConstantBlackBox::from_chf(
            StepFunction::new_chf(grid.times.clone(), values).unwrap(),
        );
        let cfg = ExplainConfig::default();
        let err = fit_survlime(&bb, &ds, &[0.0, 0.0], &cfg).unwrap_err();
        assert!(matches!(err, SurvError::AllIntervalsExcluded));
    }

    #[test]
    fn deterministic_per_seed() {
        let ds = toy_dataset(15, 3, 33);
        let bb = cox_blackbox(&ds, vec![0.3, 0.1, -0.2]);
        let cfg = ExplainConfig::default();
        let x = [0.1, 0.2, 0.3];
        let a = fit_survlime(&bb, &ds, &x, &cfg).unwrap();
        let b = fit_survlime(&bb, &ds, &x, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
