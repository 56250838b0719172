//! k-fold cross-validated grid search over hidden width, basis size and
//! weight decay.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::BSplineBasis;
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::fmodel::{argmax, Model, ModelDocument, Perceptron, Variant};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::train::{train_features, FeatureSet, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub hidden_widths: Vec<usize>,
    /// Ignored by the naive MLP.
    pub basis_sizes: Vec<usize>,
    pub weight_decays: Vec<f64>,
    pub spline_order: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self::waveform()
    }
}

impl Grid {
    pub fn waveform() -> Self {
        Self {
            hidden_widths: vec![2, 3, 4],
            basis_sizes: vec![5, 7, 10, 15, 20],
            weight_decays: vec![1e-4, 1e-3, 1e-2, 1e-1],
            spline_order: 4,
        }
    }

    pub fn spectra() -> Self {
        Self {
            basis_sizes: vec![15, 20],
            ..Self::waveform()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_widths.is_empty() || self.basis_sizes.is_empty() || self.weight_decays.is_empty() {
            return Err(Error::Config("every grid axis needs at least one value".into()));
        }
        if self.hidden_widths.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        if self.weight_decays.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::Config("weight decays must be finite and nonnegative".into()));
        }
        if self.basis_sizes.iter().any(|&p| p < self.spline_order) {
            return Err(Error::Config(format!(
                "basis sizes must be at least the spline order {}",
                self.spline_order
            )));
        }
        Ok(())
    }

    /// Cells evaluated for `variant`, in report order.
    pub fn cells(&self, variant: Variant) -> Vec<(usize, Option<usize>, f64)> {
        let sizes: Vec<Option<usize>> = if variant.uses_basis() {
            self.basis_sizes.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let mut cells = Vec::new();
        for &p in &sizes {
            for &k in &self.hidden_widths {
                for &l in &self.weight_decays {
                    cells.push((k, p, l));
                }
            }
        }
        cells
    }
}

/// Mix a base seed with a stream index (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::Config(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(deal(&idx, k))
}

/// Like [`kfold_split`], with each class spread as evenly as possible.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::Config(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(n);
    for c in 0..classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        order.extend(members);
    }
    Ok(deal(&order, k))
}

fn deal(order: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::with_capacity(order.len() / k + 1); k];
    for (pos, &i) in order.iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds
}

fn misclassification<T: Real>(net: &Perceptron<T>, set: &FeatureSet<T>, labels: &[usize]) -> f64 {
    let wrong = (0..set.len())
        .filter(|&i| argmax(&net.forward(set.features.row(i))) != labels[i])
        .count();
    wrong as f64 / set.len() as f64
}

/// Fraction of curves whose argmax decision differs from the label.
pub fn evaluate<T: Real>(model: &Model<T>, test: &LabeledDataset<T>) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = test
        .labels()
        .ok_or_else(|| Error::Config("evaluation needs class labels".into()))?;
    let set = FeatureSet::extract(model.variant(), model.basis(), test)?;
    Ok(misclassification(model.net(), &set, labels))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub hidden: usize,
    pub basis_size: Option<usize>,
    pub weight_decay: f64,
    pub param_count: usize,
    pub fold_errors: Vec<f64>,
    pub mean_error: f64,
    /// Some fold had every restart fail; those folds score 1.0.
    pub failed: bool,
}

#[derive(Debug, Clone)]
pub struct CvReport<T> {
    pub variant: Variant,
    pub folds: usize,
    pub cells: Vec<CellReport>,
    pub selected: usize,
    /// Selected architecture retrained on the full training set.
    pub model: Model<T>,
    pub param_count: usize,
    pub wall_ms: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReportDocument {
    pub variant: Variant,
    pub folds: usize,
    pub cells: Vec<CellReport>,
    pub selected: usize,
    pub model: ModelDocument,
    pub param_count: usize,
    pub wall_ms: u64,
}

impl<T: Real> CvReport<T> {
    pub fn selected_cell(&self) -> &CellReport {
        &self.cells[self.selected]
    }

    pub fn to_document(&self) -> CvReportDocument {
        CvReportDocument {
            variant: self.variant,
            folds: self.folds,
            cells: self.cells.clone(),
            selected: self.selected,
            model: ModelDocument::from_model(&self.model, Some(self.seed)),
            param_count: self.param_count,
            wall_ms: self.wall_ms,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    /// Per-cell table: `hidden,basis,decay,fold_1..fold_k,mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hidden,basis,decay");
        for f in 1..=self.folds {
            out.push_str(&format!(",fold_{f}"));
        }
        out.push_str(",mean\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{}",
                c.hidden,
                c.basis_size.map_or(String::new(), |p| p.to_string()),
                c.weight_decay
            ));
            for e in &c.fold_errors {
                out.push_str(&format!(",{e}"));
            }
            out.push_str(&format!(",{}\n", c.mean_error));
        }
        out
    }
}

/// Index of the best cell: lowest mean error, then fewest parameters, then
/// lowest weight decay.
fn select_cell(cells: &[CellReport]) -> usize {
    const TIE: f64 = 1e-12;
    let mut best = 0;
    for (i, c) in cells.iter().enumerate().skip(1) {
        let b = &cells[best];
        let better = if c.mean_error < b.mean_error - TIE {
            true
        } else if (c.mean_error - b.mean_error).abs() <= TIE {
            (c.param_count, c.weight_decay) < (b.param_count, b.weight_decay)
        } else {
            false
        };
        if better {
            best = i;
        }
    }
    best
}

/// Cross-validated grid search with stratified folds; the winning cell is
/// retrained on the whole dataset.
pub fn grid_search<T: Real>(
    variant: Variant,
    dataset: &LabeledDataset<T>,
    grid: &Grid,
    k: usize,
    config: &TrainConfig,
) -> Result<CvReport<T>> {
    let start = Instant::now();
    grid.validate()?;
    config.validate()?;
    let labels = dataset
        .labels()
        .ok_or_else(|| Error::Config("grid search needs class labels".into()))?;
    if dataset.len() < k {
        return Err(Error::Config(format!(
            "{} examples cannot fill {k} folds",
            dataset.len()
        )));
    }
    let folds = stratified_kfold(labels, k, derive_seed(config.seed, u64::MAX))?;

    let mut bases: Vec<(Option<usize>, Option<BSplineBasis<T>>, FeatureSet<T>)> = Vec::new();
    if variant.uses_basis() {
        for &p in &grid.basis_sizes {
            let basis = BSplineBasis::new(p, grid.spline_order, dataset.domain())?;
            let set = FeatureSet::extract(variant, Some(&basis), dataset)?;
            bases.push((Some(p), Some(basis), set));
        }
    } else {
        bases.push((None, None, FeatureSet::extract(variant, None, dataset)?));
    }
    let set_for = |p: Option<usize>| bases.iter().position(|b| b.0 == p).expect("feature set per basis size");

    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let train: Vec<usize> = (0..k)
                .filter(|&g| g != f)
                .flat_map(|g| folds[g].iter().copied())
                .collect();
            (train, folds[f].clone())
        })
        .collect();

    let cells = grid.cells(variant);
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..k).map(move |f| (c, f))).collect();
    let outcomes: Vec<Option<f64>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (hidden, p, decay) = cells[c];
            let full = &bases[set_for(p)].2;
            let (train_idx, test_idx) = &splits[f];
            let cfg = TrainConfig {
                weight_decay: decay,
                seed: derive_seed(config.seed, (c * k + f) as u64),
                ..*config
            };
            let (net, _, _) = train_features(&full.subset(train_idx), hidden, &cfg).ok()?;
            let test_labels: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
            Some(misclassification(&net, &full.subset(test_idx), &test_labels))
        })
        .collect();

    let mut reports = Vec::with_capacity(cells.len());
    for (c, &(hidden, p, decay)) in cells.iter().enumerate() {
        let errs: Vec<Option<f64>> = outcomes[c * k..(c + 1) * k].to_vec();
        let failed = errs.iter().any(Option::is_none);
        let fold_errors: Vec<f64> = errs.into_iter().map(|e| e.unwrap_or(1.0)).collect();
        let mean_error = fold_errors.iter().sum::<f64>() / k as f64;
        let inputs = bases[set_for(p)].2.inputs();
        reports.push(CellReport {
            hidden,
            basis_size: p,
            weight_decay: decay,
            param_count: crate::fmodel::param_count_for(inputs, hidden, dataset.outputs())?,
            fold_errors,
            mean_error,
            failed,
        });
    }

    let selected = select_cell(&reports);
    let (hidden, p, decay) = cells[selected];
    let (_, basis, set) = &bases[set_for(p)];
    let cfg = TrainConfig {
        weight_decay: decay,
        ..*config
    };
    let (net, _, _) = train_features(set, hidden, &cfg)?;
    let model = Model::assemble(variant, basis.clone(), net)?;
    Ok(CvReport {
        variant,
        folds: k,
        param_count: model.param_count(),
        cells: reports,
        selected,
        model,
        wall_ms: start.elapsed().as_millis() as u64,
        seed: config.seed,
    })
}

/// Targets of a classification set as a label vector (argmax of each row).
pub fn labels_of<T: Real>(targets: &Matrix<T>) -> Vec<usize> {
    (0..targets.rows()).map(|i| argmax(targets.row(i))).collect()
}
