use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};
use crate::nn::{MlpConfig, OptMethod};
use crate::survival::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SurvbenimLocal,
    SurvbenimGlobal,
    Survbex,
    Survlime,
    Survnam,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::SurvbenimLocal,
        Method::SurvbenimGlobal,
        Method::Survbex,
        Method::Survlime,
        Method::Survnam,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::SurvbenimLocal => "survbenim-local",
            Method::SurvbenimGlobal => "survbenim-global",
            Method::Survbex => "survbex",
            Method::Survlime => "survlime",
            Method::Survnam => "survnam",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| SurvError::UnknownMethod(s.to_string()))
    }

    pub fn has_curves(&self) -> bool {
        matches!(
            self,
            Method::SurvbenimLocal | Method::SurvbenimGlobal | Method::Survnam
        )
    }
}

/// Kernel parameters of the Beran-based surrogates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// Beran kernel temperature.
    pub tau: f64,
    /// Time-weighting kernel parameter; defaults to `(t_max / 4)^2`.
    #[serde(default)]
    pub varkappa: Option<f64>,
    #[serde(default)]
    pub use_time_weighting: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            varkappa: None,
            use_time_weighting: false,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(SurvError::NonPositiveKernelParam(self.tau));
        }
        if let Some(v) = self.varkappa {
            if v <= 0.0 {
                return Err(SurvError::NonPositiveKernelParam(v));
            }
        }
        Ok(())
    }

    pub fn resolved_varkappa(&self, horizon: f64) -> f64 {
        self.varkappa
            .unwrap_or_else(|| (horizon / 4.0) * (horizon / 4.0))
    }
}

/// Optimization schedule for the gradient-fitted surrogates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub method: OptMethod,
    pub learning_rate: f64,
    pub epochs_local: usize,
    pub epochs_global: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: OptMethod::Adam,
            learning_rate: 1e-2,
            epochs_local: 200,
            epochs_global: 500,
        }
    }
}

/// Everything an explanation fit needs besides the black box and data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainConfig {
    pub neighborhood: super::NeighborhoodConfig,
    pub kernel: KernelConfig,
    pub train: TrainConfig,
    pub hidden_layers: Vec<usize>,
    pub init_scale: f64,
    pub curve_points: usize,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            neighborhood: super::NeighborhoodConfig::default(),
            kernel: KernelConfig::default(),
            train: TrainConfig::default(),
            hidden_layers: vec![16, 16],
            init_scale: 0.5,
            curve_points: 64,
            seed: 0,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if self.curve_points < 2 {
            return Err(SurvError::InvalidConfig(
                "curve_points must be at least 2".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn importance_mlp(&self) -> MlpConfig {
        MlpConfig {
            hidden_layers: self.hidden_layers.clone(),
            ..MlpConfig::importance_default(self.seed)
        }
    }

    pub(crate) fn shape_mlp(&self) -> MlpConfig {
        MlpConfig {
            hidden_layers: self.hidden_layers.clone(),
            ..MlpConfig::shape_default(self.seed)
        }
    }
}

/// Per-feature importance (`h_j`) or shape (`g_j`) function sampled on an
/// even grid over the observed feature range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCurve {
    pub feature: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs: usize,
    pub seed: u64,
}

/// Outcome of one explanation fit for one anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationResult {
    pub method: Method,
    /// Raw per-feature importance vector `b^model`.
    pub importance: Vec<f64>,
    /// Present only for the function-valued methods.
    pub curves: Option<Vec<FeatureCurve>>,
    /// Surrogate SF at the anchor.
    pub fitted_sf: StepFunction,
    pub diagnostics: Diagnostics,
}

impl ExplanationResult {
    pub fn validate(&self) -> Result<()> {
        if self.importance.iter().any(|v| !v.is_finite()) {
            return Err(SurvError::InvalidConfig(
                "non-finite importance vector".into(),
            ));
        }
        if self.curves.is_some() != self.method.has_curves() {
            return Err(SurvError::InvalidConfig(
                "curves must be present exactly for function-valued methods".into(),
            ));
        }
        Ok(())
    }
}
