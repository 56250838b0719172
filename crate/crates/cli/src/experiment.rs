use std::io::Write;
use std::time::Instant;

use fmlp_core::data::{gen_waveform, load_tecator, second_derivative_preprocess, split_train_test, Teacher, WaveSpec};
use fmlp_core::select::{derive_seed, evaluate, grid_search};
use fmlp_core::train::{empirical_error, train, Architecture, TrainConfig};
use fmlp_core::{BSplineBasis, DatasetF64, Interval, Variant};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::summary::{Record, Summary};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<Record>,
    pub summary: Summary,
}

/// Spectra loaded (and differentiated) once and shared by all replications.
enum Source {
    Synthetic,
    Spectra(DatasetF64),
}

fn prepare(config: &ExperimentConfig) -> Result<Source, CliError> {
    match config.experiment {
        Experiment::Waveform | Experiment::TeacherStudent => Ok(Source::Synthetic),
        Experiment::Tecator | Experiment::TecatorD2 => {
            let path = config.data.as_ref().expect("validated config has a data path");
            let ds = load_tecator(path).map_err(|e| {
                CliError::Data(format!(
                    "{e}; expected {} to be a CSV with a header row, 100 absorbance columns (850-1048 nm) and a fat column",
                    path.display()
                ))
            })?;
            if config.tecator.n_train >= ds.len() {
                return Err(CliError::Config(format!(
                    "n_train {} leaves no test spectra out of {}",
                    config.tecator.n_train,
                    ds.len()
                )));
            }
            if config.experiment == Experiment::TecatorD2 {
                let basis = BSplineBasis::cubic(config.tecator.derivative_basis_size, ds.domain())?;
                return Ok(Source::Spectra(second_derivative_preprocess(&ds, &basis)?));
            }
            Ok(Source::Spectra(ds))
        }
    }
}

/// Seed of replication `r`: the master seed offset by the replication index.
pub fn replication_seed(config: &ExperimentConfig, r: usize) -> u64 {
    config.seed.wrapping_add(r as u64)
}

fn classification_split(
    config: &ExperimentConfig,
    source: &Source,
    seed: u64,
) -> Result<(DatasetF64, DatasetF64), CliError> {
    match source {
        Source::Spectra(ds) => Ok(split_train_test(
            ds,
            config.tecator.n_train,
            seed,
            config.tecator.stratified,
        )?),
        Source::Synthetic => {
            let w = &config.waveform;
            let spec = |n_per_class, stream| WaveSpec {
                n_per_class,
                m: w.m,
                noise_sd: w.noise_sd,
                seed: derive_seed(seed, stream),
            };
            Ok((
                gen_waveform(&spec(w.train_per_class, 0))?,
                gen_waveform(&spec(w.test_per_class, 1))?,
            ))
        }
    }
}

fn run_replication(config: &ExperimentConfig, source: &Source, r: usize) -> Result<Vec<Record>, CliError> {
    let seed = replication_seed(config, r);
    let train_cfg = TrainConfig { seed, ..config.train };
    let record = |variant: Variant, error: f64, hidden, basis_size, weight_decay, param_count, start: Instant| Record {
        experiment: config.experiment.name().to_string(),
        replication: r,
        variant,
        seed,
        error,
        hidden,
        basis_size,
        weight_decay,
        param_count,
        wall_ms: if config.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        },
    };

    if config.experiment == Experiment::TeacherStudent {
        let t = &config.teacher;
        let domain = Interval::new(0.0, 1.0)?;
        let teacher = Teacher::random(
            t.hidden,
            BSplineBasis::cubic(t.basis_size, domain)?,
            derive_seed(seed, 2),
        )?;
        let train_set = teacher.sample(
            &teacher.draw_coefficients(t.n_train, derive_seed(seed, 3)),
            t.m,
            t.noise_sd,
            false,
            derive_seed(seed, 5),
        )?;
        let test_set = teacher.sample(
            &teacher.draw_coefficients(t.n_test, derive_seed(seed, 4)),
            t.m,
            0.0,
            false,
            derive_seed(seed, 6),
        )?;
        return config
            .variants
            .iter()
            .map(|&variant| {
                let start = Instant::now();
                let basis = variant.uses_basis().then(|| teacher.basis().clone());
                let arch = Architecture {
                    variant,
                    hidden: t.hidden,
                    basis,
                };
                let outcome = train(&arch, &train_set, &train_cfg)?;
                let mse = empirical_error(&outcome.model, &test_set, 0.0)?.data_term;
                Ok(record(
                    variant,
                    mse,
                    t.hidden,
                    arch.basis_size(),
                    train_cfg.weight_decay,
                    outcome.model.param_count(),
                    start,
                ))
            })
            .collect();
    }

    let (train_set, test_set) = classification_split(config, source, seed)?;
    let grid = config.grid();
    config
        .variants
        .iter()
        .map(|&variant| {
            let start = Instant::now();
            let report = grid_search(variant, &train_set, &grid, config.folds, &train_cfg)?;
            let error = evaluate(&report.model, &test_set)?;
            let cell = report.selected_cell();
            Ok(record(
                variant,
                error,
                cell.hidden,
                cell.basis_size,
                cell.weight_decay,
                report.param_count,
                start,
            ))
        })
        .collect()
}

/// Run every replication, write the JSON-lines records and the CSV summaries.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let source = prepare(config)?;
    let per_rep: Vec<Result<Vec<Record>, CliError>> = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, &source, r))
        .collect();
    let mut records = Vec::new();
    for rep in per_rep {
        records.extend(rep?);
    }

    let io = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", config.output.display()));
    if let Some(dir) = config.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(&config.output).map_err(io)?);
    for r in &records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)?;

    let summary = Summary::from_records(&records)?;
    let (summary_path, pairs_path) = config.summary_paths();
    summary.write_csv(&summary_path, &pairs_path)?;
    Ok(RunOutput { records, summary })
}
