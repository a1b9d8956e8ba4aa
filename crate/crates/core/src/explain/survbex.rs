use crate::error::Result;
use crate::explain::benim::{group_loss_tape, train_params, AnchorGroup};
use crate::explain::common::{IntervalGrid, SortedView};
use crate::explain::neighborhood::sample_neighborhood;
use crate::explain::result::{ExplainConfig, ExplanationResult, Method};
use crate::explain::BlackBox;
use crate::survival::{beran_sf, SurvivalDataset};

/// Fit a fixed d-vector `b` whose squares act as per-feature scales in the
/// Beran kernel: weights are `softmax(-||b (.) (z - x_i)||^2 / tau)`.
pub fn fit_survbex(
    blackbox: &dyn BlackBox,
    dataset: &SurvivalDataset,
    x: &[f64],
    cfg: &ExplainConfig,
) -> Result<ExplanationResult> {
    cfg.validate()?;
    let grid = IntervalGrid::from_dataset(dataset);
    let view = SortedView::from_dataset(dataset);
    let sample = sample_neighborhood(x, &cfg.neighborhood, cfg.seed)?;
    let group = AnchorGroup::build(blackbox, sample, &view, &grid, &cfg.kernel)?;

    let mut b = vec![1.0f64; dataset.dim()];
    let diagnostics = train_params(&mut b, cfg, cfg.train.epochs_local, |tape, leaves| {
        group_loss_tape(tape, &group, &view, &grid, &mut |t, _z| {
            leaves.iter().map(|&l| t.square(l)).collect()
        })
    })?;

    let scales: Vec<f64> = b.iter().map(|v| v * v).collect();
    let weights = super::benim::benim_kernel_weights(dataset, x, &scales, cfg.kernel.tau)?;
    let fitted_sf = beran_sf(dataset, &weights)?;
    let result = ExplanationResult {
        method: Method::Survbex,
        importance: b,
        curves: None,
        fitted_sf,
        diagnostics,
    };
    result.validate()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::benim::benim_kernel_weights;
    use crate::explain::testutil::{cox_blackbox, toy_dataset};
    use crate::explain::NeighborhoodConfig;
    use crate::survival::gaussian_weights;

    fn small_cfg() -> ExplainConfig {
        ExplainConfig {
            neighborhood: NeighborhoodConfig {
                n_samples: 6,
                ..Default::default()
            },
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn unit_b_reduces_to_plain_beran() {
        let ds = toy_dataset(12, 3, 2);
        let x = [0.3, -0.2, 0.1];
        let w = benim_kernel_weights(&ds, &x, &[1.0; 3], 1.0).unwrap();
        let g = gaussian_weights(&x, &ds, 1.0).unwrap();
        let a = beran_sf(&ds, &w).unwrap();
        let b = beran_sf(&ds, &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_improves_loss_and_is_deterministic() {
        let ds = toy_dataset(18, 3, 12);
        let bb = cox_blackbox(&ds, vec![0.9, -0.6, 0.1]);
        let mut cfg = small_cfg();
        cfg.train.epochs_local = 40;
        let x = [0.2, 0.0, -0.3];
        let a = fit_survbex(&bb, &ds, &x, &cfg).unwrap();
        assert!(a.diagnostics.final_loss <= a.diagnostics.initial_loss);
        assert!(a.curves.is_none());
        assert_eq!(a.importance.len(), 3);
        let b = fit_survbex(&bb, &ds, &x, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        use crate::explain::benim::{group_loss_tape, AnchorGroup};
        use crate::explain::common::beran_sf_values;
        use crate::explain::sample_neighborhood;
        use crate::nn::Tape;
        use crate::survival::softmax;

        let ds = toy_dataset(6, 3, 22);
        let bb = cox_blackbox(&ds, vec![0.4, -0.2, 0.1]);
        let mut cfg = small_cfg();
        cfg.neighborhood.n_samples = 4;
        let grid = IntervalGrid::from_dataset(&ds);
        let view = SortedView::from_dataset(&ds);
        let sample = sample_neighborhood(&[0.1, -0.1, 0.2], &cfg.neighborhood, 5).unwrap();
        let group = AnchorGroup::build(&bb, sample, &view, &grid, &cfg.kernel).unwrap();

        let b0 = [1.1, 0.7, -0.4];
        let mut tape = Tape::new();
        let leaves: Vec<_> = b0.iter().map(|&v| tape.leaf(v)).collect();
        let loss = group_loss_tape(&mut tape, &group, &view, &grid, &mut |t, _z| {
            leaves.iter().map(|&l| t.square(l)).collect()
        });
        let grad = tape.gradient(loss, &leaves);

        // Plain re-evaluation of the same objective at arbitrary b.
        let loss_at = |b: &[f64]| {
            let mut total = 0.0;
            for (j, _z) in group.points.iter().enumerate() {
                let coefs = &group.logit_coefs[j];
                let n = view.n();
                let logits: Vec<f64> = (0..n)
                    .map(|s| {
                        (0..3)
                            .map(|k| b[k] * b[k] * coefs[s * 3 + k])
                            .sum()
                    })
                    .collect();
                let w = softmax(&logits);
                let sf = beran_sf_values(&w, &view);
                for i in 0..grid.len() {
                    let diff = sf[i] - group.bb_sf[j][i];
                    total += group.v[j] * grid.widths[i] * diff * diff;
                }
            }
            total
        };
        let h = 1e-5;
        let mut b = b0;
        for i in 0..3 {
            let orig = b[i];
            b[i] = orig + h;
            let up = loss_at(&b);
            b[i] = orig - h;
            let down = loss_at(&b);
            b[i] = orig;
            let fd = (up - down) / (2.0 * h);
            if grad[i].abs() < 1e-8 && fd.abs() < 1e-8 {
                continue;
            }
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs());
            assert!(rel < 1e-4, "coord {i}: analytic {} vs fd {}", grad[i], fd);
        }
    }
}
