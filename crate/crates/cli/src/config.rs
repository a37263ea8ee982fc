//! JSON experiment configuration.

use serde::{Deserialize, Serialize};

use quantid_core::SignalSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Design,
    Simulate,
    Compare,
    Bounds,
    Asymptotics,
}

impl std::fmt::Display for CommandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CommandKind::Design => "design",
            CommandKind::Simulate => "simulate",
            CommandKind::Compare => "compare",
            CommandKind::Bounds => "bounds",
            CommandKind::Asymptotics => "asymptotics",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizerMode {
    FixedRate,
    VariableRate,
    Uniform,
    CoarseN1,
    CoarseGeneral,
    CoarseNinf,
}

impl QuantizerMode {
    pub fn is_coarse(self) -> bool {
        matches!(
            self,
            QuantizerMode::Uniform
                | QuantizerMode::CoarseN1
                | QuantizerMode::CoarseGeneral
                | QuantizerMode::CoarseNinf
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepsRuleSpec {
    Midpoint,
    BiasFree,
}

impl From<RepsRuleSpec> for quantid_core::RepsRule {
    fn from(r: RepsRuleSpec) -> Self {
        match r {
            RepsRuleSpec::Midpoint => quantid_core::RepsRule::Midpoint,
            RepsRuleSpec::BiasFree => quantid_core::RepsRule::BiasFree,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerSpec {
    pub mode: QuantizerMode,
    pub m: u32,
    /// representative rule; defaults to midpoint for companded designs and
    /// bias-free for coarse/uniform ones
    pub reps: Option<RepsRuleSpec>,
    /// overrides the model-derived spread with sigma^2(x) = x^2 + offset
    /// (the figure profiles)
    pub sigma_offset: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub n_data: usize,
    #[serde(default)]
    pub trials: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub sigma_w: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub beta1: f64,
    pub beta2: f64,
    pub k_bits: f64,
    pub ms: Vec<u32>,
    #[serde(default)]
    pub sigma_w: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsSpec {
    pub m_prime_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub stem: Option<String>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub source: Option<SignalSource>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub quantizer: Option<QuantizerSpec>,
    #[serde(default)]
    pub data: Option<DataSpec>,
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
    #[serde(default)]
    pub asymptotics: Option<AsymptoticsSpec>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    /// Structural validation beyond what serde enforces. Field positivity of
    /// the core types is re-checked by their constructors at run time.
    pub fn validate(&self) -> Result<(), String> {
        if let Some(src) = &self.source {
            let ok = match src {
                SignalSource::Uniform { kappa } => *kappa > 0.0,
                SignalSource::Normal { sigma } => *sigma > 0.0,
                SignalSource::PowerLaw { core_width } => *core_width > 0.0,
                SignalSource::Tabulated { .. } => true,
            };
            if !ok {
                return Err("source: scale parameter must be positive".into());
            }
        }
        if let Some(model) = &self.model {
            if model.theta.is_empty() {
                return Err("model.theta: must not be empty".into());
            }
            if model.theta.iter().any(|t| !t.is_finite()) {
                return Err("model.theta: entries must be finite".into());
            }
        }
        if let Some(q) = &self.quantizer {
            if q.m < 2 {
                return Err("quantizer.m: must be at least 2".into());
            }
            if q.sigma_offset.is_some_and(|c| c < 0.0) {
                return Err("quantizer.sigma_offset: must be >= 0".into());
            }
            if q.mode.is_coarse() && q.mode != QuantizerMode::Uniform {
                match &self.source {
                    Some(SignalSource::Uniform { .. }) => {}
                    _ => {
                        return Err("quantizer.mode: coarse designs require a uniform source".into())
                    }
                }
            }
        }
        if let Some(d) = &self.data {
            if d.n_data == 0 {
                return Err("data.n_data: must be positive".into());
            }
            if d.trials == Some(0) {
                return Err("data.trials: must be positive".into());
            }
            if d.sigma_w.is_some_and(|s| s < 0.0) {
                return Err("data.sigma_w: must be >= 0".into());
            }
        }
        if let Some(b) = &self.bounds {
            let margin = 1.0 - b.beta1 - b.beta2;
            if b.beta1 <= 0.0 || b.beta2 <= 0.0 || margin <= 0.0 || margin.is_nan() {
                return Err("bounds: need beta1, beta2 > 0 with 1 - beta1 - beta2 > 0".into());
            }
            if b.k_bits <= 0.0 || b.k_bits.is_nan() {
                return Err("bounds.k_bits: must be positive".into());
            }
            if b.ms.is_empty() || b.ms.iter().any(|&m| m < 2) {
                return Err("bounds.ms: need candidate M values >= 2".into());
            }
            if b.sigma_w.is_some_and(|s| s < 0.0) {
                return Err("bounds.sigma_w: must be >= 0".into());
            }
        }
        if let Some(a) = &self.asymptotics {
            if a.m_prime_max < 50 {
                return Err("asymptotics.m_prime_max: need at least 50 for the tail fit".into());
            }
        }
        Ok(())
    }

    pub fn stem(&self) -> String {
        self.output
            .as_ref()
            .and_then(|o| o.stem.clone())
            .unwrap_or_else(|| self.command.to_string())
    }

    pub fn format(&self) -> OutputFormat {
        self.output
            .as_ref()
            .and_then(|o| o.format)
            .unwrap_or_default()
    }
}
