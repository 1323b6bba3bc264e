//! TOML pipeline configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{AnalysisOptions, BaselineOptions, Estimator, FitOptions, KernelChoice};
use crate::error::{Error, Result};
use crate::rep_theory::Partition;
use crate::simulator::{ExperimentConfig, NoiseSpec, Scenario, SequenceDesign, SpamSpec};

pub const TOOL: &str = "immrb";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which irreps to analyse.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IrrepSelection {
    #[default]
    #[serde(with = "all_literal")]
    All,
    Labels(Vec<Partition>),
}

mod all_literal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("all")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "all" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected \"all\", got \"{s}\"")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub irreps: IrrepSelection,
    #[serde(default)]
    pub kernel: KernelChoice,
    #[serde(default = "yes")]
    pub conjugate: bool,
    #[serde(default)]
    pub estimator: Estimator,
    /// Inclusive `[g_min, g_max]`.
    #[serde(default)]
    pub fit_window: Option<(u32, u32)>,
    #[serde(default)]
    pub bootstrap: usize,
    /// Run the projector-based reference filter as well.
    #[serde(default)]
    pub baseline: bool,
    #[serde(default = "default_baseline_samples")]
    pub baseline_samples: usize,
    #[serde(default = "default_cutoff")]
    pub baseline_cutoff: f64,
    #[serde(default = "default_imag")]
    pub max_imag_ratio: f64,
}

fn yes() -> bool {
    true
}

fn default_baseline_samples() -> usize {
    5000
}

fn default_cutoff() -> f64 {
    1e-6
}

fn default_imag() -> f64 {
    0.05
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            irreps: IrrepSelection::All,
            kernel: KernelChoice::Auto,
            conjugate: true,
            estimator: Estimator::Covariance,
            fit_window: None,
            bootstrap: 0,
            baseline: false,
            baseline_samples: default_baseline_samples(),
            baseline_cutoff: default_cutoff(),
            max_imag_ratio: default_imag(),
        }
    }
}

/// Everything a `run` needs. Depths are either listed or given as `max_depth`
/// (meaning `1..=max_depth`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub photons: u32,
    pub modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<u32>>,
    pub sequences: u32,
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub design: SequenceDesign,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub spam: SpamSpec,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolved()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Same config with `depths` filled in and `max_depth` dropped.
    pub fn resolved(&self) -> Result<Self> {
        let depths = match (&self.depths, self.max_depth) {
            (Some(_), Some(_)) => return Err(Error::Config("give either depths or max_depth, not both".into())),
            (Some(d), None) => d.clone(),
            (None, Some(l)) => (1..=l).collect(),
            (None, None) => return Err(Error::Config("missing depths or max_depth".into())),
        };
        let mut out = self.clone();
        out.depths = Some(depths);
        out.max_depth = None;
        out.experiment().validate()?;
        Ok(out)
    }

    pub fn depths(&self) -> Vec<u32> {
        match (&self.depths, self.max_depth) {
            (Some(d), _) => d.clone(),
            (None, Some(l)) => (1..=l).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            photons: self.photons,
            modes: self.modes,
            depths: self.depths(),
            sequences: self.sequences,
            shots: self.shots,
            seed: self.seed,
            design: self.design,
            scenario: self.scenario.clone(),
            noise: self.noise.clone(),
            spam: self.spam.clone(),
        }
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            kernel: self.analysis.kernel,
            conjugate: self.analysis.conjugate,
            estimator: self.analysis.estimator,
            fit: FitOptions {
                window: self.analysis.fit_window,
                max_imag_ratio: self.analysis.max_imag_ratio,
                ..FitOptions::default()
            },
            bootstrap: self.analysis.bootstrap,
            bootstrap_seed: self.seed ^ 0xB007_5742_u64,
        }
    }

    pub fn baseline_options(&self) -> BaselineOptions {
        BaselineOptions {
            samples: self.analysis.baseline_samples,
            seed: self.seed ^ 0x5A3B_1E00_u64,
            cutoff: self.analysis.baseline_cutoff,
        }
    }

    /// SHA-256 of the canonical JSON form of the resolved config.
    pub fn sha256(&self) -> Result<String> {
        let resolved = self.resolved()?;
        let json = serde_json::to_string(&resolved).map_err(|e| Error::Config(e.to_string()))?;
        let digest = Sha256::digest(json.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Demo setup: one photon, two modes, 5% depolarizing noise.
    pub fn demo() -> Self {
        PipelineConfig {
            photons: 1,
            modes: 2,
            max_depth: None,
            depths: Some((1..=20).collect()),
            sequences: 200,
            shots: 0,
            seed: 2024,
            design: SequenceDesign::SharedTarget,
            scenario: Scenario::default(),
            noise: NoiseSpec::Depolarizing { q: 0.05 },
            spam: SpamSpec::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
photons = 1
modes = 2
max_depth = 20
sequences = 200
seed = 7

[noise]
kind = "depolarizing"
q = 0.05

[spam.prep]
kind = "depolarizing"
q = 0.1

[analysis]
irreps = [[2, 0]]
fit_window = [1, 15]
baseline = true
"#;

    #[test]
    fn parse_and_resolve() {
        let c = PipelineConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.depths(), (1..=20).collect::<Vec<_>>());
        assert_eq!(c.max_depth, None);
        assert_eq!(c.noise, NoiseSpec::Depolarizing { q: 0.05 });
        assert_eq!(c.spam.prep, NoiseSpec::Depolarizing { q: 0.1 });
        assert_eq!(c.spam.meas, NoiseSpec::Ideal);
        assert_eq!(
            c.analysis.irreps,
            IrrepSelection::Labels(vec![Partition::new(vec![2, 0]).unwrap()])
        );
        assert_eq!(c.analysis.fit_window, Some((1, 15)));
        assert!(c.analysis.baseline);
        assert_eq!(c.analysis.estimator, Estimator::Covariance);
    }

    #[test]
    fn toml_roundtrip_and_hash() {
        let c = PipelineConfig::from_toml_str(SAMPLE).unwrap();
        let back = PipelineConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.sha256().unwrap(), c.sha256().unwrap());
        let mut other = c.clone();
        other.seed = 8;
        assert_ne!(other.sha256().unwrap(), c.sha256().unwrap());
        let demo = PipelineConfig::demo();
        let text = demo.to_toml_string().unwrap();
        assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), demo);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(PipelineConfig::from_toml_str("photons = 1\nmodes = 2\nsequences = 3").is_err());
        let unknown = format!("{SAMPLE}\nbogus = 1");
        assert!(PipelineConfig::from_toml_str(&unknown).is_err());
        let both = SAMPLE.replace("max_depth = 20", "max_depth = 20\ndepths = [1, 2, 3]");
        assert!(PipelineConfig::from_toml_str(&both).is_err());
        let all = SAMPLE.replace("irreps = [[2, 0]]", "irreps = \"some\"");
        assert!(PipelineConfig::from_toml_str(&all).is_err());
    }

    #[test]
    fn coherent_scenario_table() {
        let text = r#"
photons = 1
modes = 2
depths = [1, 2, 4, 8]
sequences = 10

[scenario]
kind = "coherent"
alpha = 0.1
truncation = 1
mode = 0
"#;
        let c = PipelineConfig::from_toml_str(text).unwrap();
        assert!(matches!(c.scenario, Scenario::Coherent { .. }));
        assert_eq!(c.analysis.irreps, IrrepSelection::All);
    }
}
