//! Result records and the statistics computed from them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use fmlp_core::Variant;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One trained-and-tested model: a (replication, variant) cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub experiment: String,
    pub replication: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Test misclassification rate, or test MSE for regression experiments.
    pub error: f64,
    pub hidden: usize,
    pub basis_size: Option<usize>,
    pub weight_decay: f64,
    pub param_count: usize,
    pub wall_ms: u64,
}

/// Parse a JSON-lines record stream; blank lines are skipped.
pub fn parse_records(text: &str) -> Result<Vec<Record>, CliError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: Record = serde_json::from_str(line)
            .map_err(|e| CliError::Data(format!("record {} (line {}): {e}", records.len(), i + 1)))?;
        records.push(r);
    }
    if records.is_empty() {
        return Err(CliError::Data("no records".into()));
    }
    Ok(records)
}

pub fn read_records(path: &Path) -> Result<Vec<Record>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_records(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (zero for a single value).
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "statistics of an empty sample");
        let n = values.len();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        // linear interpolation between order statistics
        let q = |p: f64| {
            let h = p * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        };
        Self {
            n,
            mean,
            sd,
            min: sorted[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: sorted[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub error: Stats,
    pub params: Stats,
    /// (hidden, basis size) selections with their counts.
    pub architectures: Vec<((usize, Option<usize>), usize)>,
}

/// Paired comparison over replications; a win is a strictly lower error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCount {
    pub a: Variant,
    pub b: Variant,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub replications: usize,
    pub variants: Vec<VariantSummary>,
    pub pairs: Vec<PairCount>,
}

const TIE: f64 = 1e-12;

impl Summary {
    /// Requires exactly one record per (replication, variant) and the same
    /// replications for every variant.
    pub fn from_records(records: &[Record]) -> Result<Self, CliError> {
        let first = records.first().ok_or_else(|| CliError::Data("no records".into()))?;
        let mut table: BTreeMap<Variant, BTreeMap<usize, &Record>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if r.experiment != first.experiment {
                return Err(CliError::Data(format!(
                    "record {i}: experiment `{}` mixed with `{}`",
                    r.experiment, first.experiment
                )));
            }
            if !r.error.is_finite() {
                return Err(CliError::Data(format!("record {i}: non-finite error")));
            }
            if table.entry(r.variant).or_default().insert(r.replication, r).is_some() {
                return Err(CliError::Data(format!(
                    "record {i}: duplicate replication {} for {}",
                    r.replication, r.variant
                )));
            }
        }
        let reps: Vec<usize> = table
            .values()
            .next()
            .map(|m| m.keys().copied().collect())
            .unwrap_or_default();
        for (v, m) in &table {
            if m.keys().copied().collect::<Vec<_>>() != reps {
                return Err(CliError::Data(format!(
                    "variant {v} does not cover the same replications"
                )));
            }
        }

        let variants = table
            .iter()
            .map(|(&variant, m)| {
                let errors: Vec<f64> = m.values().map(|r| r.error).collect();
                let params: Vec<f64> = m.values().map(|r| r.param_count as f64).collect();
                let mut arch: BTreeMap<(usize, Option<usize>), usize> = BTreeMap::new();
                for r in m.values() {
                    *arch.entry((r.hidden, r.basis_size)).or_default() += 1;
                }
                VariantSummary {
                    variant,
                    error: Stats::of(&errors),
                    params: Stats::of(&params),
                    architectures: arch.into_iter().collect(),
                }
            })
            .collect();

        let keys: Vec<Variant> = table.keys().copied().collect();
        let mut pairs = Vec::new();
        for (i, &a) in keys.iter().enumerate() {
            for &b in &keys[i + 1..] {
                let mut pc = PairCount {
                    a,
                    b,
                    wins: 0,
                    ties: 0,
                    losses: 0,
                };
                for rep in &reps {
                    let (ea, eb) = (table[&a][rep].error, table[&b][rep].error);
                    if (ea - eb).abs() <= TIE {
                        pc.ties += 1;
                    } else if ea < eb {
                        pc.wins += 1;
                    } else {
                        pc.losses += 1;
                    }
                }
                pairs.push(pc);
            }
        }
        Ok(Self {
            experiment: first.experiment.clone(),
            replications: reps.len(),
            variants,
            pairs,
        })
    }

    pub fn variant(&self, v: Variant) -> Option<&VariantSummary> {
        self.variants.iter().find(|s| s.variant == v)
    }

    /// `a` versus `b`, oriented as asked.
    pub fn pair(&self, a: Variant, b: Variant) -> Option<PairCount> {
        self.pairs.iter().find_map(|p| {
            if (p.a, p.b) == (a, b) {
                Some(*p)
            } else if (p.a, p.b) == (b, a) {
                Some(PairCount {
                    a,
                    b,
                    wins: p.losses,
                    ties: p.ties,
                    losses: p.wins,
                })
            } else {
                None
            }
        })
    }

    pub fn write_csv(&self, summary: &Path, pairs: &Path) -> Result<(), CliError> {
        let io = |p: &Path, e: csv::Error| CliError::Data(format!("cannot write {}: {e}", p.display()));
        let mut w = csv::Writer::from_path(summary).map_err(|e| io(summary, e))?;
        w.write_record([
            "variant",
            "replications",
            "mean",
            "sd",
            "min",
            "q1",
            "median",
            "q3",
            "max",
            "mean_param_count",
        ])
        .map_err(|e| io(summary, e))?;
        for s in &self.variants {
            let e = s.error;
            let row = [e.mean, e.sd, e.min, e.q1, e.median, e.q3, e.max, s.params.mean];
            let mut fields = vec![s.variant.to_string(), e.n.to_string()];
            fields.extend(row.iter().map(f64::to_string));
            w.write_record(&fields).map_err(|e| io(summary, e))?;
        }
        w.flush().map_err(|e| io(summary, e.into()))?;

        let mut w = csv::Writer::from_path(pairs).map_err(|e| io(pairs, e))?;
        w.write_record(["a", "b", "wins", "ties", "losses"])
            .map_err(|e| io(pairs, e))?;
        for p in &self.pairs {
            w.write_record([
                p.a.to_string(),
                p.b.to_string(),
                p.wins.to_string(),
                p.ties.to_string(),
                p.losses.to_string(),
            ])
            .map_err(|e| io(pairs, e))?;
        }
        w.flush().map_err(|e| io(pairs, e.into()))?;
        Ok(())
    }

    /// Plain-text comparison tables.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "experiment: {}  replications: {}",
            self.experiment, self.replications
        );
        let _ = writeln!(out, "\nTest error");
        let _ = writeln!(
            out,
            "{:<8}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}",
            "variant", "mean", "sd", "min", "q1", "median", "q3", "max"
        );
        for s in &self.variants {
            let e = s.error;
            let _ = writeln!(
                out,
                "{:<8}{:>9.4}{:>9.4}{:>9.4}{:>9.4}{:>9.4}{:>9.4}{:>9.4}",
                s.variant.to_string(),
                e.mean,
                e.sd,
                e.min,
                e.q1,
                e.median,
                e.q3,
                e.max
            );
        }
        for s in &self.variants {
            let _ = writeln!(out, "\nSelected architectures: {}", s.variant);
            let _ = writeln!(out, "{:>8}{:>8}{:>8}", "hidden", "basis", "count");
            for ((k, p), count) in &s.architectures {
                let basis = p.map_or("-".to_string(), |p| p.to_string());
                let _ = writeln!(out, "{k:>8}{basis:>8}{count:>8}");
            }
        }
        let _ = writeln!(out, "\nParameter counts");
        let _ = writeln!(out, "{:<8}{:>10}{:>8}{:>8}", "variant", "mean", "min", "max");
        for s in &self.variants {
            let p = s.params;
            let _ = writeln!(
                out,
                "{:<8}{:>10.1}{:>8}{:>8}",
                s.variant.to_string(),
                p.mean,
                p.min,
                p.max
            );
        }
        if !self.pairs.is_empty() {
            let _ = writeln!(out, "\nPaired comparison (wins = first variant has lower error)");
            let _ = writeln!(out, "{:<8}{:<8}{:>6}{:>6}{:>8}", "a", "b", "wins", "ties", "losses");
            for p in &self.pairs {
                let _ = writeln!(
                    out,
                    "{:<8}{:<8}{:>6}{:>6}{:>8}",
                    p.a.to_string(),
                    p.b.to_string(),
                    p.wins,
                    p.ties,
                    p.losses
                );
            }
        }
        out
    }
}
