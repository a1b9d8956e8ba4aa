use crate::error::{Result, SurvError};
use crate::explain::benim::{feature_curves, train_params};
use crate::explain::common::{grid_values, IntervalGrid};
use crate::explain::neighborhood::{sample_neighborhood, NeighborhoodSample};
use crate::explain::result::{Diagnostics, ExplainConfig, ExplanationResult, Method};
use crate::explain::BlackBox;
use crate::nn::{ImportanceNetwork, Tape, Var};
use crate::survival::{nelson_aalen, StepFunction, SurvivalDataset};

use super::survlime;

/// One neighborhood reduced to per-perturbation quadratic coefficients: the
/// log-form loss restricted to perturbation `j` is
/// `a_j g(z_j)^2 - 2 b_j g(z_j) + c_j`.
struct NamGroup {
    points: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl NamGroup {
    fn build(
        blackbox: &dyn BlackBox,
        sample: NeighborhoodSample,
        grid: &IntervalGrid,
        baseline: &[f64],
    ) -> Result<Self> {
        let mut a = Vec::with_capacity(sample.len());
        let mut b = Vec::with_capacity(sample.len());
        let mut c = Vec::with_capacity(sample.len());
        for (j, z) in sample.points.iter().enumerate() {
            let chf = grid_values(&blackbox.predict_chf(z)?, grid)?;
            let (mut aj, mut bj, mut cj) = (0.0, 0.0, 0.0);
            for i in 0..grid.len() {
                if chf[i] <= survlime::LOG_EPS || baseline[i] <= survlime::LOG_EPS {
                    continue;
                }
                let w = sample.weights[j] * grid.widths[i];
                let y = chf[i].ln() - baseline[i].ln();
                aj += w;
                bj += w * y;
                cj += w * y * y;
            }
            a.push(aj);
            b.push(bj);
            c.push(cj);
        }
        if a.iter().all(|&v| v == 0.0) {
            return Err(SurvError::AllIntervalsExcluded);
        }
        Ok(Self {
            points: sample.points,
            a,
            b,
            c,
        })
    }

    fn loss_tape(
        &self,
        tape: &mut Tape,
        leaves: &[Var],
        net: &ImportanceNetwork,
    ) -> Var {
        let terms: Vec<Var> = self
            .points
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let parts: Vec<Var> = (0..z.len())
                    .map(|k| net.eval_tape(k, z[k], leaves, tape))
                    .collect();
                let g = tape.sum(&parts);
                let sq = tape.square(g);
                tape.affine(&[sq, g], &[self.a[j], -2.0 * self.b[j]], self.c[j])
            })
            .collect();
        tape.sum(&terms)
    }
}

/// Generalized-additive-model explanation: trains `d` shape subnets `g_k`
/// so that `sum_k g_k(z^(k))` matches the black box's log CHF ratio over
/// the neighborhood of `x`.
pub fn fit_survnam(
    blackbox: &dyn BlackBox,
    dataset: &SurvivalDataset,
    x: &[f64],
    cfg: &ExplainConfig,
) -> Result<ExplanationResult> {
    cfg.validate()?;
    let grid = IntervalGrid::from_dataset(dataset);
    let baseline = grid_values(&nelson_aalen(dataset)?, &grid)?;
    let sample = sample_neighborhood(x, &cfg.neighborhood, cfg.seed)?;
    let group = NamGroup::build(blackbox, sample, &grid, &baseline)?;

    let mut net = ImportanceNetwork::new(dataset.dim(), cfg.shape_mlp())?;
    let mut params = net.params().to_vec();
    let net_arch = net.clone();
    let diagnostics = train_params(&mut params, cfg, cfg.train.epochs_local, |tape, leaves| {
        group.loss_tape(tape, leaves, &net_arch)
    })?;
    net.params_mut().copy_from_slice(&params);

    finish_nam_result(&net, dataset, x, &group.points, &grid, &baseline, cfg, diagnostics)
}

/// One shared NAM trained over the neighborhoods of all anchors, read off
/// per anchor afterwards.
pub fn fit_survnam_global(
    blackbox: &dyn BlackBox,
    dataset: &SurvivalDataset,
    anchors: &[Vec<f64>],
    cfg: &ExplainConfig,
) -> Result<Vec<ExplanationResult>> {
    cfg.validate()?;
    if anchors.is_empty() {
        return Err(SurvError::InvalidConfig("no anchors given".into()));
    }
    let grid = IntervalGrid::from_dataset(dataset);
    let baseline = grid_values(&nelson_aalen(dataset)?, &grid)?;
    let groups: Vec<NamGroup> = anchors
        .iter()
        .enumerate()
        .map(|(r, x)| {
            let sample =
                sample_neighborhood(x, &cfg.neighborhood, cfg.seed.wrapping_add(r as u64))?;
            NamGroup::build(blackbox, sample, &grid, &baseline)
        })
        .collect::<Result<_>>()?;

    let mut net = ImportanceNetwork::new(dataset.dim(), cfg.shape_mlp())?;
    let mut params = net.params().to_vec();
    let net_arch = net.clone();
    let diagnostics = train_params(&mut params, cfg, cfg.train.epochs_global, |tape, leaves| {
        let terms: Vec<Var> = groups
            .iter()
            .map(|g| g.loss_tape(tape, leaves, &net_arch))
            .collect();
        tape.sum(&terms)
    })?;
    net.params_mut().copy_from_slice(&params);

    anchors
        .iter()
        .zip(&groups)
        .map(|(x, g)| {
            finish_nam_result(
                &net,
                dataset,
                x,
                &g.points,
                &grid,
                &baseline,
                cfg,
                diagnostics.clone(),
            )
        })
        .collect()
}

/// Loss value and gradient with respect to the shape-network parameters of
/// the log-form SurvNAM loss for one neighborhood.
pub fn survnam_loss_grad(
    blackbox: &dyn BlackBox,
    dataset: &SurvivalDataset,
    sample: &NeighborhoodSample,
    net: &ImportanceNetwork,
) -> Result<(f64, Vec<f64>)> {
    let grid = IntervalGrid::from_dataset(dataset);
    let baseline = grid_values(&nelson_aalen(dataset)?, &grid)?;
    let group = NamGroup::build(blackbox, sample.clone(), &grid, &baseline)?;
    let mut tape = Tape::new();
    let leaves: Vec<Var> = net.params().iter().map(|&p| tape.leaf(p)).collect();
    let loss = group.loss_tape(&mut tape, &leaves, net);
    Ok((tape.val(loss), tape.gradient(loss, &leaves)))
}

#[allow(clippy::too_many_arguments)]
fn finish_nam_result(
    net: &ImportanceNetwork,
    dataset: &SurvivalDataset,
    x: &[f64],
    points: &[Vec<f64>],
    grid: &IntervalGrid,
    baseline: &[f64],
    cfg: &ExplainConfig,
    diagnostics: Diagnostics,
) -> Result<ExplanationResult> {
    let d = dataset.dim();
    // b^model_k: standard deviation of g_k over the neighborhood.
    let mut importance = vec![0.0; d];
    for k in 0..d {
        let vals: Vec<f64> = points.iter().map(|z| net.eval(k, z[k])).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / vals.len() as f64;
        importance[k] = var.sqrt();
    }
    let curves = feature_curves(dataset, cfg, |k, v| net.eval(k, v));
    let g: f64 = (0..d).map(|k| net.eval(k, x[k])).sum();
    let risk = g.exp();
    let values = baseline.iter().map(|h| (-h * risk).exp()).collect();
    let fitted_sf = StepFunction::new_sf(grid.times.clone(), values)?;
    let result = ExplanationResult {
        method: Method::Survnam,
        importance,
        curves: Some(curves),
        fitted_sf,
        diagnostics,
    };
    result.validate()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::testutil::{cox_blackbox, toy_dataset, ConstantBlackBox};
    use crate::explain::NeighborhoodConfig;
    use crate::survival::kaplan_meier;

    fn cfg(seed: u64, epochs: usize) -> ExplainConfig {
        ExplainConfig {
            neighborhood: NeighborhoodConfig {
                n_samples: 40,
                ..Default::default()
            },
            hidden_layers: vec![8],
            train: crate::explain::TrainConfig {
                epochs_local: epochs,
                epochs_global: epochs,
                ..Default::default()
            },
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn linear_cox_blackbox_gives_matching_slope_signs() {
        let ds = toy_dataset(30, 3, 4);
        let b_true = [1.0, -1.0, 0.0];
        let bb = cox_blackbox(&ds, b_true.to_vec());
        let x = [0.1, -0.2, 0.3];
        let r = fit_survnam(&bb, &ds, &x, &cfg(5, 400)).unwrap();
        let curves = r.curves.as_ref().unwrap();
        for k in 0..2 {
            let c = &curves[k];
            // Slope across the neighborhood's reach around the anchor.
            let lo = c
                .grid
                .iter()
                .position(|&g| g >= x[k] - 0.3)
                .unwrap_or(0);
            let hi = c
                .grid
                .iter()
                .rposition(|&g| g <= x[k] + 0.3)
                .unwrap_or(c.grid.len() - 1);
            let slope = c.values[hi] - c.values[lo];
            assert!(
                slope * b_true[k] > 0.0,
                "feature {k}: slope {slope} vs coefficient {}",
                b_true[k]
            );
        }
        // The inert feature contributes far less spread than the active ones.
        assert!(r.importance[2] < 0.5 * r.importance[0]);
        assert!(r.importance[2] < 0.5 * r.importance[1]);
    }

    #[test]
    fn constant_blackbox_gives_near_zero_importance() {
        let ds = toy_dataset(20, 3, 14);
        let km = kaplan_meier(&ds).unwrap();
        let chf = km.map(|s| -(s.max(1e-12)).ln());
        let bb = ConstantBlackBox {
            sf: km.clone(),
            chf: StepFunction::new_chf(km.times().to_vec(), chf.values().to_vec()).unwrap(),
        };
        let r = fit_survnam(&bb, &ds, &[0.1, 0.2, -0.1], &cfg(7, 400)).unwrap();
        for &v in &r.importance {
            assert!(v < 0.05, "importance {v} should be near zero");
        }
    }

    #[test]
    fn deterministic_and_loss_improves() {
        let ds = toy_dataset(15, 2, 24);
        let bb = cox_blackbox(&ds, vec![0.5, -0.5]);
        let x = [0.0, 0.1];
        let a = fit_survnam(&bb, &ds, &x, &cfg(9, 50)).unwrap();
        assert!(a.diagnostics.final_loss <= a.diagnostics.initial_loss);
        let b = fit_survnam(&bb, &ds, &x, &cfg(9, 50)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn global_single_anchor_matches_local() {
        let ds = toy_dataset(15, 2, 34);
        let bb = cox_blackbox(&ds, vec![0.4, 0.3]);
        let x = vec![0.2, -0.2];
        let c = cfg(3, 30);
        let local = fit_survnam(&bb, &ds, &x, &c).unwrap();
        let global = fit_survnam_global(&bb, &ds, &[x], &c).unwrap();
        assert_eq!(global.len(), 1);
        assert_eq!(global[0].importance, local.importance);
        assert_eq!(
            global[0].diagnostics.final_loss,
            local.diagnostics.final_loss
        );
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        use crate::nn::Tape;

        let ds = toy_dataset(6, 3, 44);
        let bb = cox_blackbox(&ds, vec![0.4, -0.2, 0.1]);
        let grid = IntervalGrid::from_dataset(&ds);
        let baseline = grid_values(&nelson_aalen(&ds).unwrap(), &grid).unwrap();
        let mut c = cfg(13, 1);
        c.neighborhood.n_samples = 4;
        let sample = sample_neighborhood(&[0.1, 0.0, -0.1], &c.neighborhood, 3).unwrap();
        let group = NamGroup::build(&bb, sample, &grid, &baseline).unwrap();
        let net = ImportanceNetwork::new(3, c.shape_mlp()).unwrap();

        let mut tape = Tape::new();
        let leaves: Vec<Var> = net.params().iter().map(|&p| tape.leaf(p)).collect();
        let loss = group.loss_tape(&mut tape, &leaves, &net);
        let grad = tape.gradient(loss, &leaves);

        let loss_at = |params: &[f64]| {
            let mut n = net.clone();
            n.params_mut().copy_from_slice(params);
            let mut total = 0.0;
            for (j, z) in group.points.iter().enumerate() {
                let g: f64 = (0..3).map(|k| n.eval(k, z[k])).sum();
                total += group.a[j] * g * g - 2.0 * group.b[j] * g + group.c[j];
            }
            total
        };
        let h = 1e-5;
        let mut params = net.params().to_vec();
        for i in (0..params.len()).step_by(5) {
            let orig = params[i];
            params[i] = orig + h;
            let up = loss_at(&params);
            params[i] = orig - h;
            let down = loss_at(&params);
            params[i] = orig;
            let fd = (up - down) / (2.0 * h);
            if grad[i].abs() < 1e-8 && fd.abs() < 1e-8 {
                continue;
            }
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs());
            assert!(rel < 1e-4, "param {i}: analytic {} vs fd {}", grad[i], fd);
        }
    }
}
