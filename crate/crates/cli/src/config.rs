//! Experiment configuration file (TOML). Every section is optional and every
//! table rejects unknown keys.

use std::path::{Path, PathBuf};

use l1ds_core::certificate::CertificateInputs;
use l1ds_core::disturbance::{DisturbanceSpec, HoldWindow};
use l1ds_core::dtw::DtwParams;
use l1ds_core::plant::PidGains;
use l1ds_core::rbf::FitOptions;
use l1ds_core::shapes::{ShapeKind, ShapeParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Repetition seeds; each seeds demo generation and center placement.
    pub seeds: Vec<u64>,
    pub demos: DemoSection,
    pub preprocess: PreprocessSection,
    pub model: FitOptions,
    pub start: StartSection,
    pub clf: ClfSection,
    pub l1: L1Section,
    pub selector: SelectorSection,
    pub dtw: DtwParams,
    pub certificate: CertificateSection,
    pub regime: RegimeSection,
    pub output: OutputSection,
    pub batch: BatchSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2],
            demos: DemoSection::default(),
            preprocess: PreprocessSection::default(),
            model: FitOptions::default(),
            start: StartSection::default(),
            clf: ClfSection::default(),
            l1: L1Section::default(),
            selector: SelectorSection::default(),
            dtw: DtwParams::default(),
            certificate: CertificateSection::default(),
            regime: RegimeSection::default(),
            output: OutputSection::default(),
            batch: BatchSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn first_seed(&self) -> u64 {
        self.seeds.first().copied().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoSource {
    Synthetic,
    Directory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoSection {
    pub source: DemoSource,
    /// Generator parameters when `source = "synthetic"`.
    pub shape: ShapeParams,
    /// Directory of `*.csv` demos when `source = "directory"`.
    pub path: Option<PathBuf>,
}

impl Default for DemoSection {
    fn default() -> Self {
        Self {
            source: DemoSource::Synthetic,
            shape: ShapeParams::new(ShapeKind::Sine),
            path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    /// Samples per resampled demo and per run (`dt = 1/(n−1)`).
    pub n: usize,
    /// Use only the first `max_demos` demos.
    pub max_demos: Option<usize>,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        Self {
            n: 1000,
            max_demos: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartSection {
    /// Executed start `z0 = z*0 + offset`.
    pub offset: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClfSection {
    pub enabled: bool,
    /// Decay rate `c`.
    pub c: f64,
    /// Diagonal of `P`; identity when absent.
    pub p_diag: Option<Vec<f64>>,
}

impl Default for ClfSection {
    fn default() -> Self {
        Self {
            enabled: true,
            c: 40.0,
            p_diag: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct L1Section {
    pub enabled: bool,
    /// Low-pass filter bandwidth ω.
    pub omega: f64,
    /// Adaptation period `T_s`; defaults to the outer step.
    pub t_sample: Option<f64>,
    /// Isotropic predictor pole used when `a_s_diag` is absent.
    pub a_s: f64,
    pub a_s_diag: Option<Vec<f64>>,
}

impl Default for L1Section {
    fn default() -> Self {
        Self {
            enabled: true,
            omega: 100.0,
            t_sample: None,
            a_s: -10.0,
            a_s_diag: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorMode {
    Dtw,
    TimeIndexed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorSection {
    pub mode: SelectorMode,
    pub window_w: usize,
    pub history_h: usize,
    /// Defaults to `history_h`.
    pub target_history: Option<usize>,
}

impl Default for SelectorSection {
    fn default() -> Self {
        Self {
            mode: SelectorMode::Dtw,
            window_w: 50,
            history_h: 40,
            target_history: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    /// Bounds measured from simulation of the configured experiment.
    Auto,
    /// Inputs given verbatim in `certificate.inputs`.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateSection {
    pub mode: CertificateMode,
    /// Tube margin ε.
    pub epsilon: f64,
    /// `t₁ − t₀` at which the ultimate bound is evaluated.
    pub t1: f64,
    /// Safety factor applied to measured bounds in auto mode.
    pub inflation: f64,
    pub inputs: Option<CertificateInputs<f64>>,
}

impl Default for CertificateSection {
    fn default() -> Self {
        Self {
            mode: CertificateMode::Auto,
            epsilon: 0.5,
            t1: 0.3,
            inflation: 1.2,
            inputs: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Perfect,
    Imperfect,
}

impl RegimeKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Perfect => "perfect",
            Self::Imperfect => "imperfect",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeSection {
    pub kind: RegimeKind,
    pub pid: PidGains<f64>,
    /// Integral clamp is `windup_scale` times the largest plant disturbance
    /// bound (at least 1).
    pub windup_scale: f64,
    pub disturbances: Vec<DisturbanceSpec<f64>>,
    /// Rows of `G` in the state-dependent task term `σ = … + G·z`.
    pub task_gain: Option<Vec<Vec<f64>>>,
    pub hold: Option<HoldWindow<f64>>,
}

impl Default for RegimeSection {
    fn default() -> Self {
        Self {
            kind: RegimeKind::Perfect,
            pid: PidGains {
                kp: 400.0,
                ki: 100.0,
                kd: 40.0,
            },
            windup_scale: 10.0,
            disturbances: Vec::new(),
            task_gain: None,
            hold: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write an SVG plot next to the trace.
    pub plot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plot: true,
        }
    }
}

/// Sweep definition for `batch`. An empty `rows` list means the built-in
/// five-row disturbance suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSection {
    pub shapes: Vec<ShapeKind>,
    pub rows: Vec<BatchRow>,
    pub controllers: Vec<ControllerKind>,
}

impl Default for BatchSection {
    fn default() -> Self {
        Self {
            shapes: ShapeKind::ALL.to_vec(),
            rows: Vec::new(),
            controllers: ControllerKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchRow {
    pub name: String,
    pub regime: RegimeKind,
    #[serde(default)]
    pub disturbances: Vec<DisturbanceSpec<f64>>,
    #[serde(default)]
    pub hold: Option<HoldWindow<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Nominal,
    ClfOnly,
    L1,
}

impl ControllerKind {
    pub const ALL: [Self; 3] = [Self::Nominal, Self::ClfOnly, Self::L1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Nominal => "nominal",
            Self::ClfOnly => "clf_only",
            Self::L1 => "l1",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_toml("[clf]\nenabeld = true\n").unwrap_err();
        assert!(err.to_string().contains("enabeld"), "{err}");
    }

    #[test]
    fn partial_sections_take_defaults() {
        let cfg = ExperimentConfig::from_toml("[l1]\nomega = 30.0\n").unwrap();
        assert_eq!(cfg.l1.omega, 30.0);
        assert!(cfg.l1.enabled);
        assert_eq!(cfg.preprocess.n, 1000);
    }
}
