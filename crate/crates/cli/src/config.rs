//! JSON run configuration shared by every subcommand.
//!
//! A config file may specify any subset of the fields; everything else
//! falls back to the demonstration defaults (n = 51 balanced two-block
//! model with B11 = B22 = 0.9, B12 = 0.1, cubic-decay assessment, the
//! standard kappa and tau grids). Unknown keys are rejected with the
//! JSON-pointer path of the offending key, so typos never silently
//! fall back to a default. The canonical serialization of the
//! effective config (after command-line overrides) is hashed into
//! every output file.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use egl_core::model::{BlockModel, FeatureModel};
use egl_core::optimize::{linear_grid, SurfaceEvaluator};
use egl_core::sim::graph::conditioned_counts;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// An inclusive arithmetic grid; the last point is clamped to `max` so
/// the endpoint is hit exactly even when the span is not an integer
/// multiple of the step.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridConfig {
    pub fn points(&self) -> anyhow::Result<Vec<f64>> {
        Ok(linear_grid(self.min, self.max, self.step)?)
    }
}

/// Blockmodel parameters. `pi` entries are positive weights and are
/// normalized to sum to one, so priors can be written as ratios.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub n: usize,
    pub b: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n: 51,
            b: vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            pi: vec![0.5, 0.5],
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> anyhow::Result<BlockModel> {
        let total: f64 = self.pi.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            bail!("model prior weights must have a positive finite sum, got {total}");
        }
        let pi: Vec<f64> = self.pi.iter().map(|w| w / total).collect();
        Ok(BlockModel::new(self.n, self.b.clone(), pi)?)
    }
}

/// Edge-feature family. The single built-in family draws features
/// from Beta(2, kappa) off edges and Beta(kappa, 2) on edges and
/// assesses each pair with probability (2/kappa)^3.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    BetaCubic,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub family: FeatureFamily,
    pub kappa_min: Option<f64>,
    pub kappa_max: Option<f64>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            family: FeatureFamily::BetaCubic,
            kappa_min: None,
            kappa_max: None,
        }
    }
}

impl FeatureConfig {
    pub fn build(&self) -> anyhow::Result<FeatureModel> {
        let FeatureFamily::BetaCubic = self.family;
        match (self.kappa_min, self.kappa_max) {
            (None, None) => Ok(FeatureModel::beta_cubic()),
            (lo, hi) => {
                let default = FeatureModel::beta_cubic().kappa_domain();
                Ok(FeatureModel::beta_cubic_with_domain(
                    lo.unwrap_or(default.0),
                    hi.unwrap_or(default.1),
                )?)
            }
        }
    }
}

/// Which evaluator scores a surface cell.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorChoice {
    /// Exact enumeration at the prior-proportional block split of the
    /// n - 1 labeled vertices.
    Exact,
    /// Closed form for the balanced symmetric two-block model.
    Balanced,
    /// Large-sample normal approximation of the same quantity.
    Normal,
}

impl fmt::Display for EvaluatorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvaluatorChoice::Exact => "exact",
            EvaluatorChoice::Balanced => "balanced",
            EvaluatorChoice::Normal => "normal",
        })
    }
}

/// Settings for the side-by-side optimum comparison.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    /// Row spacing of the comparison CSV (coarser than the optimum
    /// search so the Monte Carlo column stays affordable).
    pub tau_step: f64,
    /// Threshold spacing used when locating each reported optimum.
    pub optimum_tau_step: f64,
    /// Monte Carlo trials per threshold for the embedding-pipeline
    /// column; 0 omits the column entirely.
    pub embedding_trials: u64,
    /// Embedding dimension for the pipeline column and the spectral
    /// projection optimum.
    pub embedding_dimension: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            tau_step: 0.025,
            optimum_tau_step: 0.001,
            embedding_trials: 0,
            embedding_dimension: 2,
        }
    }
}

/// Inputs for the quantity-versus-quality connectome experiment. With
/// both file paths present the named dataset is loaded; otherwise one
/// graph is sampled from the surrogate blockmodel.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CelegansConfig {
    pub edges: Option<String>,
    pub labels: Option<String>,
    pub assess_grid: Vec<f64>,
    pub accuracy_grid: Vec<f64>,
    pub q_list: Vec<f64>,
    pub surrogate: ModelConfig,
}

impl Default for CelegansConfig {
    fn default() -> Self {
        CelegansConfig {
            edges: None,
            labels: None,
            assess_grid: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            accuracy_grid: vec![0.7, 0.8, 0.9, 1.0],
            q_list: vec![3.0, 5.0, 9.0],
            // Three neuron classes of the gap-junction connectome:
            // published block-probability and membership estimates (the
            // displayed prior rounds to 0.98 and is renormalized).
            surrogate: ModelConfig {
                n: 279,
                b: vec![
                    vec![0.015, 0.017, 0.002],
                    vec![0.017, 0.027, 0.012],
                    vec![0.002, 0.012, 0.011],
                ],
                pi: vec![0.42, 0.29, 0.27],
            },
        }
    }
}

/// Which rule the plain Monte Carlo run scores.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierChoice {
    /// Largest block-degree ratio, exact rational comparison.
    Gamma,
    /// Likelihood rule at the analytic observed-graph block matrix.
    Plugin,
    /// Likelihood rule that conditions on which pairs were assessed.
    McarLr,
}

impl fmt::Display for ClassifierChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierChoice::Gamma => "gamma",
            ClassifierChoice::Plugin => "plugin",
            ClassifierChoice::McarLr => "mcar_lr",
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub classifier: ClassifierChoice,
    pub kappa: f64,
    pub tau: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            classifier: ClassifierChoice::Gamma,
            kappa: 3.5,
            tau: 0.6,
        }
    }
}

/// The full run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub features: FeatureConfig,
    pub kappa_grid: GridConfig,
    pub tau_grid: GridConfig,
    pub evaluator: EvaluatorChoice,
    /// Fixed quality parameter for the single-kappa commands (path,
    /// curves, compare).
    pub kappa: f64,
    pub seed: u64,
    /// Monte Carlo trial count for the sampling commands (celegans,
    /// simulate).
    pub trials: u64,
    pub compare: CompareConfig,
    pub celegans: CelegansConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            features: FeatureConfig::default(),
            kappa_grid: GridConfig { min: 2.0, max: 8.0, step: 0.05 },
            tau_grid: GridConfig { min: 0.0, max: 1.0, step: 0.005 },
            evaluator: EvaluatorChoice::Balanced,
            kappa: 3.5,
            seed: 1,
            trials: 1000,
            compare: CompareConfig::default(),
            celegans: CelegansConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a config file. Unknown keys and type
    /// mismatches are reported with the JSON-pointer path to the
    /// offending element.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("config {} is not valid JSON", path.display()))?;
        match serde_path_to_error::deserialize::<_, RunConfig>(&value) {
            Ok(cfg) => Ok(cfg),
            Err(e) => bail!(
                "config {}: invalid value at {}: {}",
                path.display(),
                pointer_of(&e.path().to_string()),
                e.inner()
            ),
        }
    }

    /// SHA-256 of the canonical serialization; every output file
    /// carries it so artifacts can be traced to their exact inputs.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let hash = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in hash {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn block_model(&self) -> anyhow::Result<BlockModel> {
        self.model.build().context("config /model")
    }

    pub fn feature_model(&self) -> anyhow::Result<FeatureModel> {
        self.features.build().context("config /features")
    }

    /// The evaluator requested by the config, with the exact
    /// enumerator conditioned on the prior-proportional split of the
    /// n - 1 labeled vertices.
    pub fn surface_evaluator(&self, bm: &BlockModel) -> SurfaceEvaluator {
        match self.evaluator {
            EvaluatorChoice::Exact => SurfaceEvaluator::Exact {
                counts: conditioned_counts(bm.pi(), bm.n() - 1),
            },
            EvaluatorChoice::Balanced => SurfaceEvaluator::Balanced,
            EvaluatorChoice::Normal => SurfaceEvaluator::Normal,
        }
    }
}

/// Converts serde_path_to_error's dotted path ("compare.tau_step",
/// "celegans.assess_grid[2]") to a JSON pointer
/// ("/compare/tau_step", "/celegans/assess_grid/2").
fn pointer_of(dotted: &str) -> String {
    if dotted.is_empty() || dotted == "." {
        return "/".to_string();
    }
    let mut pointer = String::new();
    for segment in dotted.split('.') {
        let mut rest = segment;
        // Split off any [idx] suffixes.
        while let Some(open) = rest.find('[') {
            let (name, tail) = rest.split_at(open);
            if !name.is_empty() {
                pointer.push('/');
                pointer.push_str(name);
            }
            let close = tail.find(']').unwrap_or(tail.len());
            pointer.push('/');
            pointer.push_str(&tail[1..close]);
            rest = &tail[(close + 1).min(tail.len())..];
        }
        if !rest.is_empty() {
            pointer.push('/');
            pointer.push_str(rest);
        }
    }
    pointer
}
