use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};
use crate::forest::logrank::logrank_from_rows;
use crate::survival::{StepFunction, SurvivalDataset};

pub const RSF_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Defaults to `max(1, round(sqrt(d)))` when absent.
    #[serde(default)]
    pub features_per_split: Option<usize>,
    #[serde(default = "default_min_leaf_events")]
    pub min_leaf_events: usize,
    #[serde(default = "default_true")]
    pub bootstrap: bool,
    pub seed: u64,
}

fn default_min_leaf_events() -> usize {
    3
}

fn default_true() -> bool {
    true
}

impl ForestConfig {
    pub fn paper_default(seed: u64) -> Self {
        Self {
            n_trees: 100,
            max_depth: 8,
            features_per_split: None,
            min_leaf_events: 3,
            bootstrap: true,
            seed,
        }
    }

    fn resolve_mtry(&self, d: usize) -> Result<usize> {
        let mtry = self
            .features_per_split
            .unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1));
        if mtry == 0 || mtry > d {
            return Err(SurvError::InvalidConfig(format!(
                "features_per_split {mtry} out of range for d = {d}"
            )));
        }
        if self.n_trees == 0 {
            return Err(SurvError::InvalidConfig("n_trees must be >= 1".into()));
        }
        if self.min_leaf_events == 0 {
            return Err(SurvError::InvalidConfig(
                "min_leaf_events must be >= 1".into(),
            ));
        }
        Ok(mtry)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Nelson-Aalen CHF of the leaf samples on the model's shared grid.
        chf: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalTree {
    pub nodes: Vec<TreeNode>,
}

impl SurvivalTree {
    fn leaf_chf<'a>(&'a self, x: &[f64]) -> &'a [f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { chf } => return chf,
            }
        }
    }
}

/// Random survival forest. Prediction averages the per-tree leaf CHFs on the
/// shared grid and exponentiates for the survival function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RSFModel {
    pub format_version: u32,
    pub config: ForestConfig,
    pub d: usize,
    pub time_grid: Vec<f64>,
    pub trees: Vec<SurvivalTree>,
}

struct TrainingView<'a> {
    dataset: &'a SurvivalDataset,
    grid: &'a [f64],
    mtry: usize,
    max_depth: usize,
    min_leaf_events: usize,
}

impl RSFModel {
    pub fn predict_chf(&self, x: &[f64]) -> Result<StepFunction> {
        let values = self.mean_chf(x)?;
        StepFunction::new_chf(self.time_grid.clone(), values)
    }

    pub fn predict_sf(&self, x: &[f64]) -> Result<StepFunction> {
        let chf = self.mean_chf(x)?;
        StepFunction::new_sf(
            self.time_grid.clone(),
            chf.into_iter().map(|h| (-h).exp()).collect(),
        )
    }

    fn mean_chf(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(SurvError::InputDimensionMismatch {
                got: x.len(),
                expected: self.d,
            });
        }
        let mut acc = vec![0.0; self.time_grid.len()];
        for tree in &self.trees {
            for (a, &v) in acc.iter_mut().zip(tree.leaf_chf(x)) {
                *a += v;
            }
        }
        let inv = 1.0 / self.trees.len() as f64;
        for a in &mut acc {
            *a *= inv;
        }
        Ok(acc)
    }

    /// Restricted-mean survival time under the predicted SF.
    pub fn expected_time(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_sf(x)?.restricted_mean())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.format_version != RSF_FORMAT_VERSION {
            return Err(SurvError::InvalidConfig(format!(
                "unsupported model format_version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}

pub fn fit_rsf(dataset: &SurvivalDataset, config: &ForestConfig) -> Result<RSFModel> {
    let mtry = config.resolve_mtry(dataset.dim())?;
    let grid = dataset.distinct_times();
    let view = TrainingView {
        dataset,
        grid: &grid,
        mtry,
        max_depth: config.max_depth,
        min_leaf_events: config.min_leaf_events,
    };
    let trees: Vec<SurvivalTree> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                config
                    .seed
                    .wrapping_add((t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            );
            let n = dataset.len();
            let indices: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(&view, indices, &mut rng)
        })
        .collect();
    Ok(RSFModel {
        format_version: RSF_FORMAT_VERSION,
        config: config.clone(),
        d: dataset.dim(),
        time_grid: grid,
        trees,
    })
}

fn grow_tree(view: &TrainingView, indices: Vec<usize>, rng: &mut ChaCha8Rng) -> SurvivalTree {
    let mut nodes = Vec::new();
    grow_node(view, indices, 0, rng, &mut nodes);
    SurvivalTree { nodes }
}

fn grow_node(
    view: &TrainingView,
    indices: Vec<usize>,
    depth: usize,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let events = indices
        .iter()
        .filter(|&&i| view.dataset.record(i).event)
        .count();
    let id = nodes.len();
    if depth >= view.max_depth || events < 2 * view.min_leaf_events {
        nodes.push(TreeNode::Leaf {
            chf: nelson_aalen_on_grid(view, &indices),
        });
        return id;
    }
    match best_split(view, &indices, rng) {
        None => {
            nodes.push(TreeNode::Leaf {
                chf: nelson_aalen_on_grid(view, &indices),
            });
            id
        }
        Some((feature, threshold)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .into_iter()
                .partition(|&i| view.dataset.record(i).features[feature] <= threshold);
            nodes.push(TreeNode::Split {
                feature,
                threshold,
                left: 0,
                right: 0,
            });
            let left = grow_node(view, left_idx, depth + 1, rng, nodes);
            let right = grow_node(view, right_idx, depth + 1, rng, nodes);
            if let TreeNode::Split {
                left: l, right: r, ..
            } = &mut nodes[id]
            {
                *l = left;
                *r = right;
            }
            id
        }
    }
}

/// Best (feature, threshold) by log-rank statistic among `mtry` randomly
/// chosen features; thresholds are midpoints between consecutive distinct
/// sorted feature values. Candidates leaving either child short of
/// `min_leaf_events` events are rejected.
fn best_split(
    view: &TrainingView,
    indices: &[usize],
    rng: &mut ChaCha8Rng,
) -> Option<(usize, f64)> {
    let d = view.dataset.dim();
    let mut features: Vec<usize> = (0..d).collect();
    features.shuffle(rng);
    features.truncate(view.mtry);
    features.sort_unstable(); // deterministic tie-breaking by feature index

    let mut best: Option<(f64, usize, f64)> = None;
    let mut rows: Vec<(f64, bool, bool)> = Vec::with_capacity(indices.len());
    for &feature in &features {
        let mut values: Vec<f64> = indices
            .iter()
            .map(|&i| view.dataset.record(i).features[feature])
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for pair in values.windows(2) {
            let threshold = 0.5 * (pair[0] + pair[1]);
            let mut left_events = 0usize;
            let mut right_events = 0usize;
            rows.clear();
            for &i in indices {
                let r = view.dataset.record(i);
                let in_left = r.features[feature] <= threshold;
                if r.event {
                    if in_left {
                        left_events += 1;
                    } else {
                        right_events += 1;
                    }
                }
                rows.push((r.time, r.event, in_left));
            }
            if left_events < view.min_leaf_events || right_events < view.min_leaf_events {
                continue;
            }
            let stat = logrank_from_rows(&mut rows);
            if stat > 0.0 && best.map_or(true, |(b, _, _)| stat > b) {
                best = Some((stat, feature, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Nelson-Aalen CHF of the given (possibly repeated) sample indices,
/// evaluated at every point of the shared grid.
fn nelson_aalen_on_grid(view: &TrainingView, indices: &[usize]) -> Vec<f64> {
    let mut rows: Vec<(f64, bool)> = indices
        .iter()
        .map(|&i| {
            let r = view.dataset.record(i);
            (r.time, r.event)
        })
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut at_risk = rows.len() as f64;
    let mut h = 0.0;
    let mut steps: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let t = rows[i].0;
        let mut deaths = 0.0;
        let mut leaving = 0.0;
        while i < rows.len() && rows[i].0 == t {
            if rows[i].1 {
                deaths += 1.0;
            }
            leaving += 1.0;
            i += 1;
        }
        if deaths > 0.0 {
            h += deaths / at_risk;
            steps.push((t, h));
        }
        at_risk -= leaving;
    }
    let mut out = Vec::with_capacity(view.grid.len());
    let mut k = 0;
    let mut current = 0.0;
    for &t in view.grid {
        while k < steps.len() && steps[k].0 <= t {
            current = steps[k].1;
            k += 1;
        }
        out.push(current);
    }
    out
}
