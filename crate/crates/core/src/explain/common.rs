use crate::error::{Result, SurvError};
use crate::nn::{Tape, Var};
use crate::survival::{StepFunction, SurvivalDataset};

/// Guard against exactly-zero Beran denominators inside differentiable
/// ratio products.
const RATIO_EPS: f64 = 1e-12;

/// The time discretization shared by surrogate losses and metrics: the
/// dataset's distinct times `t_1 < ... < t_m`, interval widths
/// `t_i - t_{i-1}` (with `t_0 = 0`) and interval midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    pub times: Vec<f64>,
    pub widths: Vec<f64>,
    pub midpoints: Vec<f64>,
}

impl IntervalGrid {
    pub fn from_dataset(dataset: &SurvivalDataset) -> Self {
        Self::from_times(dataset.distinct_times())
    }

    pub fn from_times(times: Vec<f64>) -> Self {
        let mut widths = Vec::with_capacity(times.len());
        let mut midpoints = Vec::with_capacity(times.len());
        let mut prev = 0.0;
        for &t in &times {
            widths.push(t - prev);
            midpoints.push(0.5 * (t + prev));
            prev = t;
        }
        Self {
            times,
            widths,
            midpoints,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// Values of a step function at the grid points, requiring an exact grid
/// match with the function's own grid.
pub fn grid_values(f: &StepFunction, grid: &IntervalGrid) -> Result<Vec<f64>> {
    if f.times() != grid.times.as_slice() {
        return Err(SurvError::GridMismatch);
    }
    Ok(f.values().to_vec())
}

/// Static (non-differentiable) facts about the dataset in time order, shared
/// by the differentiable Beran pipelines.
#[derive(Debug, Clone)]
pub struct SortedView {
    /// `events[s]` for the `s`-th record in time order.
    pub events: Vec<bool>,
    /// `true` when the sorted record closes its tie group.
    pub group_end: Vec<bool>,
    /// Features of the sorted records, flattened row-major (`n x d`).
    pub features: Vec<f64>,
    pub d: usize,
}

impl SortedView {
    pub fn from_dataset(dataset: &SurvivalDataset) -> Self {
        let n = dataset.len();
        let d = dataset.dim();
        let mut events = Vec::with_capacity(n);
        let mut group_end = Vec::with_capacity(n);
        let mut features = Vec::with_capacity(n * d);
        let sorted: Vec<_> = dataset.sorted_records().collect();

        for (s, r) in sorted.iter().enumerate() {
            events.push(r.event);
            group_end.push(s + 1 == n || sorted[s + 1].time != r.time);
            features.extend_from_slice(&r.features);
        }
        Self {
            events,
            group_end,
            features,
            d,
        }
    }

    pub fn n(&self) -> usize {
        self.events.len()
    }

    pub fn feature_row(&self, s: usize) -> &[f64] {
        &self.features[s * self.d..(s + 1) * self.d]
    }
}

/// Differentiable Beran estimator in the ratio form: given softmax weights
/// for the sorted records, returns the SF value at each distinct time.
pub fn beran_sf_tape(tape: &mut Tape, weights_sorted: &[Var], view: &SortedView) -> Vec<Var> {
    let n = view.n();
    debug_assert_eq!(weights_sorted.len(), n);
    let one = tape.leaf(1.0);
    let mut cum_prev = tape.leaf(0.0);
    let mut surv = one;
    let mut out = Vec::new();
    for s in 0..n {
        let cum = tape.add(cum_prev, weights_sorted[s]);
        if view.events[s] {
            // ((1 - C_s) + eps) / ((1 - C_{s-1}) + eps)
            let num = tape.affine(&[cum], &[-1.0], 1.0 + RATIO_EPS);
            let den = tape.affine(&[cum_prev], &[-1.0], 1.0 + RATIO_EPS);
            let ratio = tape.div(num, den);
            surv = tape.mul(surv, ratio);
        }
        if view.group_end[s] {
            out.push(surv);
        }
        cum_prev = cum;
    }
    out
}

/// Plain-arithmetic counterpart of [`beran_sf_tape`]; mirrors the same
/// clamped ratio form, for use where gradients are not needed.
pub fn beran_sf_values(weights_sorted: &[f64], view: &SortedView) -> Vec<f64> {
    let mut cum_prev = 0.0f64;
    let mut surv = 1.0f64;
    let mut out = Vec::new();
    for s in 0..view.n() {
        let cum = cum_prev + weights_sorted[s];
        if view.events[s] {
            surv *= (1.0 - cum + RATIO_EPS) / (1.0 - cum_prev + RATIO_EPS);
        }
        if view.group_end[s] {
            out.push(surv.clamp(0.0, 1.0));
        }
        cum_prev = cum;
    }
    out
}
