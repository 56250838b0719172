//! Labeled functional datasets and the generators/loaders that produce them.

mod preprocess;
mod sampling;
mod teacher;
mod tecator;
mod waveform;

pub use preprocess::{presmooth, second_derivative_preprocess};
pub use sampling::{sample_under_he, split_train_test, stratified_split};
pub use teacher::Teacher;
pub use tecator::{load_labeled_csv, load_tecator, write_labeled_csv, TECATOR_CHANNELS};
pub use waveform::{gen_waveform, wave_h, waveform_curve, WaveSpec, WAVE_CLASSES};

use crate::error::{Error, Result};
use crate::sample::{Interval, SampledFunction};
use crate::scalar::Real;

/// Curves paired with target vectors; class labels when the targets are one-hot.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    domain: Interval<T>,
    functions: Vec<SampledFunction<T>>,
    targets: Vec<Vec<T>>,
    labels: Option<Vec<usize>>,
    outputs: usize,
}

impl<T: Real> LabeledDataset<T> {
    /// Classification data; targets are the one-hot encodings of `labels`.
    pub fn classification(
        domain: Interval<T>,
        functions: Vec<SampledFunction<T>>,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self> {
        if functions.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} functions but {} labels",
                functions.len(),
                labels.len()
            )));
        }
        if classes == 0 {
            return Err(Error::Config("at least one class is required".into()));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Dimension(format!("label {l} with only {classes} classes")));
        }
        let targets = labels
            .iter()
            .map(|&l| {
                let mut t = vec![T::zero(); classes];
                t[l] = T::one();
                t
            })
            .collect();
        Ok(Self {
            domain,
            functions,
            targets,
            labels: Some(labels),
            outputs: classes,
        })
    }

    /// Regression data with arbitrary real target vectors.
    pub fn regression(domain: Interval<T>, functions: Vec<SampledFunction<T>>, targets: Vec<Vec<T>>) -> Result<Self> {
        if functions.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} functions but {} targets",
                functions.len(),
                targets.len()
            )));
        }
        let outputs = targets.first().map_or(1, Vec::len);
        if outputs == 0 || targets.iter().any(|t| t.len() != outputs) {
            return Err(Error::Dimension("targets must share one nonzero length".into()));
        }
        Ok(Self {
            domain,
            functions,
            targets,
            labels: None,
            outputs,
        })
    }

    pub fn domain(&self) -> Interval<T> {
        self.domain
    }

    pub fn functions(&self) -> &[SampledFunction<T>] {
        &self.functions
    }

    pub fn targets(&self) -> &[Vec<T>] {
        &self.targets
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Target dimension (number of classes for classification data).
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            domain: self.domain,
            functions: indices.iter().map(|&i| self.functions[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            outputs: self.outputs,
        }
    }

    /// Replace every curve, keeping targets and labels.
    pub fn map_functions(&self, mut f: impl FnMut(&SampledFunction<T>) -> Result<SampledFunction<T>>) -> Result<Self> {
        let functions = self.functions.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            functions,
            ..self.clone()
        })
    }

    /// Number of examples per class (empty for regression data).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; if self.labels.is_some() { self.outputs } else { 0 }];
        for &l in self.labels.iter().flatten() {
            counts[l] += 1;
        }
        counts
    }

    pub fn cast<U: Real>(&self) -> LabeledDataset<U> {
        LabeledDataset {
            domain: self.domain.cast(),
            functions: self.functions.iter().map(SampledFunction::cast).collect(),
            targets: self
                .targets
                .iter()
                .map(|t| t.iter().map(|v| U::lit(v.as_f64())).collect())
                .collect(),
            labels: self.labels.clone(),
            outputs: self.outputs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_targets_match_labels() {
        let d = Interval::new(0.0, 1.0).unwrap();
        let fs = (0..5)
            .map(|i| SampledFunction::on_uniform_grid(d, vec![i as f64; 3]).unwrap())
            .collect();
        let ds = LabeledDataset::classification(d, fs, vec![0, 2, 1, 2, 0], 3).unwrap();
        for (t, &l) in ds.targets().iter().zip(ds.labels().unwrap()) {
            assert_eq!(crate::fmodel::argmax(t), l);
            assert_eq!(t.iter().sum::<f64>(), 1.0);
        }
        assert_eq!(ds.class_counts(), vec![2, 1, 2]);
        let sub = ds.subset(&[4, 1]);
        assert_eq!(sub.labels().unwrap(), &[0, 2]);
    }

    #[test]
    fn rejects_out_of_range_label() {
        let d = Interval::new(0.0, 1.0).unwrap();
        let fs = vec![SampledFunction::on_uniform_grid(d, vec![0.0; 3]).unwrap()];
        assert!(LabeledDataset::classification(d, fs, vec![3], 3).is_err());
    }
}
