use std::path::{Path, PathBuf};

use fmlp_core::{Grid, TrainConfig, Variant};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Waveform,
    Tecator,
    TecatorD2,
    TeacherStudent,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Waveform => "waveform",
            Experiment::Tecator => "tecator",
            Experiment::TecatorD2 => "tecator-d2",
            Experiment::TeacherStudent => "teacher-student",
        }
    }

    pub fn default_grid(self) -> Grid {
        match self {
            Experiment::Tecator | Experiment::TecatorD2 => Grid::spectra(),
            _ => Grid::waveform(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSettings {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub m: usize,
    pub noise_sd: f64,
}

impl Default for WaveformSettings {
    fn default() -> Self {
        Self {
            train_per_class: 150,
            test_per_class: 250,
            m: 101,
            noise_sd: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TecatorSettings {
    pub n_train: usize,
    pub stratified: bool,
    /// Cubic basis size used to differentiate the spectra.
    pub derivative_basis_size: usize,
}

impl Default for TecatorSettings {
    fn default() -> Self {
        Self {
            n_train: 160,
            stratified: false,
            derivative_basis_size: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherSettings {
    pub hidden: usize,
    pub basis_size: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub m: usize,
    pub noise_sd: f64,
}

impl Default for TeacherSettings {
    fn default() -> Self {
        Self {
            hidden: 2,
            basis_size: 5,
            n_train: 500,
            n_test: 500,
            m: 101,
            noise_sd: 0.0,
        }
    }
}

/// JSON experiment description accepted by `fmlp run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Defaults to the experiment's standard grid.
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub seed: u64,
    /// JSON-lines record file; summaries are written next to it.
    pub output: PathBuf,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub train: TrainConfig,
    /// Record wall-clock times. Off gives byte-identical output per seed.
    #[serde(default = "default_timing")]
    pub timing: bool,
    /// Spectra CSV for the Tecator experiments.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub waveform: WaveformSettings,
    #[serde(default)]
    pub tecator: TecatorSettings,
    #[serde(default)]
    pub teacher: TeacherSettings,
}

fn default_replications() -> usize {
    10
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Naive, Variant::Functional, Variant::Projection]
}

fn default_folds() -> usize {
    5
}

fn default_timing() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, output: impl Into<PathBuf>) -> Self {
        Self {
            experiment,
            replications: default_replications(),
            variants: default_variants(),
            grid: None,
            seed: 0,
            output: output.into(),
            folds: default_folds(),
            train: TrainConfig::default(),
            timing: default_timing(),
            data: None,
            waveform: WaveformSettings::default(),
            tecator: TecatorSettings::default(),
            teacher: TeacherSettings::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn grid(&self) -> Grid {
        self.grid.clone().unwrap_or_else(|| self.experiment.default_grid())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.variants.is_empty() {
            return bad("variants must not be empty".into());
        }
        let mut seen = self.variants.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.variants.len() {
            return bad("variants must not repeat".into());
        }
        if self.folds < 2 {
            return bad("folds must be at least 2".into());
        }
        self.grid().validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match self.experiment {
            Experiment::Waveform => {
                let w = &self.waveform;
                if w.train_per_class == 0 || w.test_per_class == 0 || w.m < 2 || !(w.noise_sd >= 0.0) {
                    return bad("waveform settings need positive class sizes, m >= 2 and noise_sd >= 0".into());
                }
            }
            Experiment::Tecator | Experiment::TecatorD2 => {
                if self.data.is_none() {
                    return bad(format!(
                        "experiment `{}` needs `data`: a CSV with a header, 100 absorbance columns and a fat column",
                        self.experiment.name()
                    ));
                }
                if self.tecator.derivative_basis_size < 4 {
                    return bad("derivative_basis_size must be at least 4".into());
                }
            }
            Experiment::TeacherStudent => {
                let t = &self.teacher;
                if t.hidden == 0 || t.basis_size < 4 || t.n_train == 0 || t.n_test == 0 || t.m < 2 {
                    return bad(
                        "teacher settings need hidden >= 1, basis_size >= 4, n_train, n_test >= 1, m >= 2".into(),
                    );
                }
                if !(t.noise_sd >= 0.0) {
                    return bad("teacher noise_sd must be nonnegative".into());
                }
            }
        }
        Ok(())
    }

    /// Records path and the two summary CSVs derived from it.
    pub fn summary_paths(&self) -> (PathBuf, PathBuf) {
        let stem = self.output.with_extension("");
        let name = stem
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        (
            stem.with_file_name(format!("{name}.summary.csv")),
            stem.with_file_name(format!("{name}.pairs.csv")),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"experiment": "waveform", "output": "out.jsonl"}"#).unwrap();
        assert_eq!(c.replications, 10);
        assert_eq!(c.variants.len(), 3);
        assert_eq!(c.grid(), Grid::waveform());
        assert_eq!(c.train.restarts, 10);
        c.validate().unwrap();
        let (summary, pairs) = c.summary_paths();
        assert_eq!(summary, PathBuf::from("out.summary.csv"));
        assert_eq!(pairs, PathBuf::from("out.pairs.csv"));
    }

    #[test]
    fn spectra_use_their_own_grid() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"experiment": "tecator-d2", "output": "o.jsonl", "data": "t.csv"}"#).unwrap();
        assert_eq!(c.grid().basis_sizes, vec![15, 20]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let parse = |s: &str| serde_json::from_str::<ExperimentConfig>(s);
        assert!(parse(r#"{"experiment": "nope", "output": "o"}"#).is_err());
        assert!(parse(r#"{"experiment": "waveform", "output": "o", "extra": 1}"#).is_err());
        let zero = parse(r#"{"experiment": "waveform", "output": "o", "replications": 0}"#).unwrap();
        assert!(zero.validate().is_err());
        let none = parse(r#"{"experiment": "waveform", "output": "o", "variants": []}"#).unwrap();
        assert!(none.validate().is_err());
        let nodata = parse(r#"{"experiment": "tecator", "output": "o"}"#).unwrap();
        assert!(nodata.validate().is_err());
    }
}
