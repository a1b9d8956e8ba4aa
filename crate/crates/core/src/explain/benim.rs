use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};
use crate::explain::common::{beran_sf_values, grid_values, IntervalGrid, SortedView};
use crate::explain::neighborhood::{sample_neighborhood, NeighborhoodSample};
use crate::explain::result::{
    Diagnostics, ExplainConfig, ExplanationResult, FeatureCurve, KernelConfig, Method,
};
use crate::explain::BlackBox;
use crate::nn::{ImportanceNetwork, Optimizer, Tape, Var};
use crate::survival::{beran_sf, StepFunction, SurvivalDataset, WeightVector};

/// Expectation-centred interval weights for the time-weighted loss variant.
/// `weights[j][i]` is the softmax weight of interval `i` for perturbation
/// `j`; each perturbation's weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeWeighting {
    pub expectations: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

/// Expected event time per perturbation (`m_j = sum_i dt_i S^(i)`) and the
/// Gaussian-kernel interval weights centred on it.
pub fn time_weights(bb_sfs: &[Vec<f64>], grid: &IntervalGrid, varkappa: f64) -> TimeWeighting {
    let mut expectations = Vec::with_capacity(bb_sfs.len());
    let mut weights = Vec::with_capacity(bb_sfs.len());
    for sf in bb_sfs {
        let m: f64 = grid
            .widths
            .iter()
            .zip(sf)
            .map(|(dt, s)| dt * s)
            .sum();
        let logits: Vec<f64> = grid
            .midpoints
            .iter()
            .map(|&mid| -((m - mid) * (m - mid)) / varkappa)
            .collect();
        expectations.push(m);
        weights.push(crate::survival::softmax(&logits));
    }
    TimeWeighting {
        expectations,
        weights,
    }
}

/// Importance-kernel weights over the training points: softmax over `i` of
/// `-tau^{-1} sum_k h_k (z^(k) - x_i^(k))^2`, in record order.
pub fn benim_kernel_weights(
    dataset: &SurvivalDataset,
    z: &[f64],
    h_values: &[f64],
    tau: f64,
) -> Result<WeightVector> {
    if tau <= 0.0 {
        return Err(SurvError::NonPositiveKernelParam(tau));
    }
    if z.len() != dataset.dim() || h_values.len() != dataset.dim() {
        return Err(SurvError::InputDimensionMismatch {
            got: z.len().max(h_values.len()),
            expected: dataset.dim(),
        });
    }
    let logits: Vec<f64> = dataset
        .records()
        .iter()
        .map(|r| {
            let a: f64 = r
                .features
                .iter()
                .zip(z)
                .zip(h_values)
                .map(|((xi, zi), h)| h * (zi - xi) * (zi - xi))
                .sum();
            -a / tau
        })
        .collect();
    WeightVector::new(crate::survival::softmax(&logits))
}

/// Beran surrogate SF at `z` with the network's importance values in the
/// kernel. Equals `beran_sf` under the explicitly computed weights.
pub fn benim_surrogate_sf(
    dataset: &SurvivalDataset,
    z: &[f64],
    net: &ImportanceNetwork,
    kernel: &KernelConfig,
) -> Result<StepFunction> {
    let h = net.eval_vector(z);
    let weights = benim_kernel_weights(dataset, z, &h, kernel.tau)?;
    beran_sf(dataset, &weights)
}

/// The local SurvBeNIM loss evaluated in plain arithmetic:
/// `sum_j v_j sum_i [p_ij] (S^(i)(z_j) - S_B^(i))^2 (t_i - t_{i-1})`.
pub fn benim_local_loss(
    net: &ImportanceNetwork,
    sample: &NeighborhoodSample,
    bb_sfs: &[Vec<f64>],
    dataset: &SurvivalDataset,
    kernel: &KernelConfig,
) -> Result<f64> {
    let grid = IntervalGrid::from_dataset(dataset);
    let view = SortedView::from_dataset(dataset);
    if bb_sfs.len() != sample.len() || bb_sfs.iter().any(|s| s.len() != grid.len()) {
        return Err(SurvError::GridMismatch);
    }
    let tw = kernel.use_time_weighting.then(|| {
        time_weights(bb_sfs, &grid, kernel.resolved_varkappa(grid.horizon()))
    });
    let mut loss = 0.0;
    for (j, z) in sample.points.iter().enumerate() {
        let h = net.eval_vector(z);
        let weights = benim_kernel_weights(dataset, z, &h, kernel.tau)?;
        let sorted: Vec<f64> = dataset
            .sorted_index()
            .iter()
            .map(|&i| weights.as_slice()[i])
            .collect();
        let sf = beran_sf_values(&sorted, &view);
        let mut inner = 0.0;
        for i in 0..grid.len() {
            let diff = sf[i] - bb_sfs[j][i];
            let p = tw.as_ref().map_or(1.0, |t| t.weights[j][i]);
            inner += p * diff * diff * grid.widths[i];
        }
        loss += sample.weights[j] * inner;
    }
    Ok(loss)
}

/// One anchor's share of a training problem: its perturbations, proximity
/// weights, black-box SF values and optional time weights.
pub(crate) struct AnchorGroup {
    pub points: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub bb_sf: Vec<Vec<f64>>,
    pub p: Option<Vec<Vec<f64>>>,
    /// Per perturbation: `-(z^(k) - x_s^(k))^2 / tau` for sorted record `s`,
    /// flattened `n x d`; these are the affine coefficients of the kernel
    /// logits in the subnet outputs.
    pub logit_coefs: Vec<Vec<f64>>,
}

impl AnchorGroup {
    pub fn build(
        blackbox: &dyn BlackBox,
        sample: NeighborhoodSample,
        view: &SortedView,
        grid: &IntervalGrid,
        kernel: &KernelConfig,
    ) -> Result<Self> {
        let mut bb_sf = Vec::with_capacity(sample.len());
        for z in &sample.points {
            bb_sf.push(grid_values(&blackbox.predict_sf(z)?, grid)?);
        }
        let p = kernel.use_time_weighting.then(|| {
            time_weights(&bb_sf, grid, kernel.resolved_varkappa(grid.horizon())).weights
        });
        let n = view.n();
        let d = view.d;
        let logit_coefs = sample
            .points
            .iter()
            .map(|z| {
                let mut c = Vec::with_capacity(n * d);
                for s in 0..n {
                    let row = view.feature_row(s);
                    for k in 0..d {
                        let diff = z[k] - row[k];
                        c.push(-(diff * diff) / kernel.tau);
                    }
                }
                c
            })
            .collect();
        Ok(Self {
            points: sample.points,
            v: sample.weights,
            bb_sf,
            p,
            logit_coefs,
        })
    }
}

/// Appends the loss of one anchor group to the tape. `h_of` maps a
/// perturbation point to the `d` kernel importance values as tape nodes.
pub(crate) fn group_loss_tape(
    tape: &mut Tape,
    group: &AnchorGroup,
    view: &SortedView,
    grid: &IntervalGrid,
    h_of: &mut dyn FnMut(&mut Tape, &[f64]) -> Vec<Var>,
) -> Var {
    let n = view.n();
    let d = view.d;
    let m = grid.len();
    let mut terms = Vec::with_capacity(group.points.len());
    for (j, z) in group.points.iter().enumerate() {
        let h = h_of(tape, z);
        let coefs = &group.logit_coefs[j];
        let logits: Vec<Var> = (0..n)
            .map(|s| tape.affine(&h, &coefs[s * d..(s + 1) * d], 0.0))
            .collect();
        let weights = tape.softmax(&logits);
        let sf = super::common::beran_sf_tape(tape, &weights, view);
        let sq: Vec<Var> = (0..m)
            .map(|i| {
                let diff = tape.add_const(sf[i], -group.bb_sf[j][i]);
                tape.square(diff)
            })
            .collect();
        let coef: Vec<f64> = (0..m)
            .map(|i| {
                group.v[j]
                    * grid.widths[i]
                    * group.p.as_ref().map_or(1.0, |p| p[j][i])
            })
            .collect();
        terms.push(tape.affine(&sq, &coef, 0.0));
    }
    tape.sum(&terms)
}

/// Gradient-descent driver shared by SurvBeNIM and SurvBeX: `loss_of`
/// rebuilds the loss graph from parameter leaves each epoch.
pub(crate) fn train_params(
    params: &mut Vec<f64>,
    cfg: &ExplainConfig,
    epochs: usize,
    mut loss_of: impl FnMut(&mut Tape, &[Var]) -> Var,
) -> Result<Diagnostics> {
    let mut opt = Optimizer::new(cfg.train.method, cfg.train.learning_rate, params.len())?;
    let mut tape = Tape::new();
    let mut initial_loss = f64::NAN;
    let mut final_loss = f64::NAN;
    for epoch in 0..epochs {
        tape.clear();
        let leaves: Vec<Var> = params.iter().map(|&p| tape.leaf(p)).collect();
        let loss = loss_of(&mut tape, &leaves);
        let value = tape.val(loss);
        if !value.is_finite() {
            return Err(SurvError::DivergedLoss { epoch });
        }
        if epoch == 0 {
            initial_loss = value;
        }
        final_loss = value;
        let grad = tape.gradient(loss, &leaves);
        opt.step(params, &grad)?;
    }
    Ok(Diagnostics {
        initial_loss,
        final_loss,
        epochs,
        seed: cfg.seed,
    })
}

pub(crate) fn feature_curves(
    dataset: &SurvivalDataset,
    cfg: &ExplainConfig,
    eval: impl Fn(usize, f64) -> f64,
) -> Vec<FeatureCurve> {
    dataset
        .feature_ranges()
        .iter()
        .enumerate()
        .map(|(k, &(lo, hi))| {
            let span = if hi > lo { hi - lo } else { 1.0 };
            let grid: Vec<f64> = (0..cfg.curve_points)
                .map(|i| lo + span * i as f64 / (cfg.curve_points - 1) as f64)
                .collect();
            let values = grid.iter().map(|&x| eval(k, x)).collect();
            FeatureCurve {
                feature: k,
                grid,
                values,
            }
        })
        .collect()
}

/// Loss value and gradient with respect to the network parameters of the
/// local SurvBeNIM loss for one neighborhood, via the reverse-mode tape.
pub fn benim_loss_grad(
    blackbox: &dyn BlackBox,
    dataset: &SurvivalDataset,
    sample: &NeighborhoodSample,
    kernel: &KernelConfig,
    net: &ImportanceNetwork,
) -> Result<(f64, Vec<f64>)> {
    let grid = IntervalGrid::from_dataset(dataset);
    let view = SortedView::from_dataset(dataset);
    let group = AnchorGroup::build(blackbox, sample.clone(), &view, &grid, kernel)?;
    let mut tape = Tape::new();
    let leaves: Vec<Var> = net.params().iter().map(|&p| tape.leaf(p)).collect();
    let loss = group_loss_tape(&mut tape, &group, &view, &grid, &mut |t, z| {
        (0..z.len())
            .map(|k| net.eval_tape(k, z[k], &leaves, t))
            .collect()
    });
    Ok((tape.val(loss), tape.gradient(loss, &leaves)))
}

/// Loss value and gradient of the SurvBeX objective in the coefficient
/// vector `b` for one neighborhood.
pub fn survbex_loss_grad(
    blackbox: &dyn BlackBox,
    dataset: &SurvivalDataset,
    sample: &NeighborhoodSample,
    kernel: &KernelConfig,
    b: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let grid = IntervalGrid::from_dataset(dataset);
    let view = SortedView::from_dataset(dataset);
    let group = AnchorGroup::build(blackbox, sample.clone(), &view, &grid, kernel)?;
    let mut tape = Tape::new();
    let leaves: Vec<Var> = b.iter().map(|&v| tape.leaf(v)).collect();
    let loss = group_loss_tape(&mut tape, &group, &view, &grid, &mut |t, _z| {
        leaves.iter().map(|&l| t.square(l)).collect()
    });
    Ok((tape.val(loss), tape.gradient(loss, &leaves)))
}

fn check_blackbox_grid(
    blackbox: &dyn BlackBox,
    dataset: &SurvivalDataset,
    grid: &IntervalGrid,
) -> Result<()> {
    let probe = blackbox.predict_sf(&dataset.record(0).features)?;
    if probe.times() != grid.times.as_slice() {
        return Err(SurvError::GridMismatch);
    }
    Ok(())
}

/// Train an importance network for a single explained instance.
pub fn fit_survbenim_local(
    blackbox: &dyn BlackBox,
    dataset: &SurvivalDataset,
    x: &[f64],
    cfg: &ExplainConfig,
) -> Result<ExplanationResult> {
    cfg.validate()?;
    let grid = IntervalGrid::from_dataset(dataset);
    let view = SortedView::from_dataset(dataset);
    check_blackbox_grid(blackbox, dataset, &grid)?;
    let sample = sample_neighborhood(x, &cfg.neighborhood, cfg.seed)?;
    let group = AnchorGroup::build(blackbox, sample, &view, &grid, &cfg.kernel)?;

    let mut net = ImportanceNetwork::new(dataset.dim(), cfg.importance_mlp())?;
    let mut params = net.params().to_vec();
    let net_arch = net.clone();
    let diagnostics = train_params(&mut params, cfg, cfg.train.epochs_local, |tape, leaves| {
        group_loss_tape(tape, &group, &view, &grid, &mut |t, z| {
            (0..z.len())
                .map(|k| net_arch.eval_tape(k, z[k], leaves, t))
                .collect()
        })
    })?;
    net.params_mut().copy_from_slice(&params);

    finish_benim_result(
        Method::SurvbenimLocal,
        &net,
        dataset,
        x,
        &group.points,
        cfg,
        diagnostics,
    )
}

/// Train one importance network over neighborhoods of all anchors, then
/// read an explanation off it for each anchor without retraining.
pub fn fit_survbenim_global(
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
    let view = SortedView::from_dataset(dataset);
    check_blackbox_grid(blackbox, dataset, &grid)?;
    let groups: Vec<AnchorGroup> = anchors
        .iter()
        .enumerate()
        .map(|(r, x)| {
            let sample =
                sample_neighborhood(x, &cfg.neighborhood, cfg.seed.wrapping_add(r as u64))?;
            AnchorGroup::build(blackbox, sample, &view, &grid, &cfg.kernel)
        })
        .collect::<Result<_>>()?;

    let mut net = ImportanceNetwork::new(dataset.dim(), cfg.importance_mlp())?;
    let mut params = net.params().to_vec();
    let net_arch = net.clone();
    let diagnostics = train_params(&mut params, cfg, cfg.train.epochs_global, |tape, leaves| {
        let terms: Vec<Var> = groups
            .iter()
            .map(|g| {
                group_loss_tape(tape, g, &view, &grid, &mut |t, z| {
                    (0..z.len())
                        .map(|k| net_arch.eval_tape(k, z[k], leaves, t))
                        .collect()
                })
            })
            .collect();
        tape.sum(&terms)
    })?;
    net.params_mut().copy_from_slice(&params);

    anchors
        .iter()
        .zip(&groups)
        .map(|(x, g)| {
            finish_benim_result(
                Method::SurvbenimGlobal,
                &net,
                dataset,
                x,
                &g.points,
                cfg,
                diagnostics.clone(),
            )
        })
        .collect()
}

fn finish_benim_result(
    method: Method,
    net: &ImportanceNetwork,
    dataset: &SurvivalDataset,
    x: &[f64],
    points: &[Vec<f64>],
    cfg: &ExplainConfig,
    diagnostics: Diagnostics,
) -> Result<ExplanationResult> {
    let d = dataset.dim();
    // b^model_k: average importance over the generated neighborhood.
    let mut importance = vec![0.0; d];
    for z in points {
        for k in 0..d {
            importance[k] += net.eval(k, z[k]);
        }
    }
    for b in &mut importance {
        *b /= points.len() as f64;
    }
    let curves = feature_curves(dataset, cfg, |k, v| net.eval(k, v));
    let fitted_sf = benim_surrogate_sf(dataset, x, net, &cfg.kernel)?;
    let result = ExplanationResult {
        method,
        importance,
        curves: Some(curves),
        fitted_sf,
        diagnostics,
    };
    result.validate()?;
    Ok(result)
}
