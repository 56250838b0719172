//! Regression data labelled by a fixed random functional perceptron.
//!
//! Curves lie in the span of the teacher's basis, so the teacher's output
//! with exact integrals is available in closed form through the Gram matrix:
//! the hidden pre-activation for coefficient vector `beta` is `w' M beta`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::LabeledDataset;
use crate::bspline::{BSplineBasis, Measure};
use crate::error::{Error, Result};
use crate::fmodel::{FunctionalMlp, Perceptron};
use crate::linalg::Matrix;
use crate::sample::SampledFunction;

/// Hidden weight scale of a random teacher; puts typical pre-activations
/// around one, where tanh is visibly curved.
const TEACHER_WEIGHT_SD: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct Teacher {
    model: FunctionalMlp<f64>,
    gram: Matrix<f64>,
}

impl Teacher {
    pub fn new(model: FunctionalMlp<f64>) -> Result<Self> {
        let gram = model.basis().gram_matrix(&Measure::uniform(model.basis().domain()))?;
        Ok(Self { model, gram })
    }

    /// Random single-output teacher with `hidden` units on `basis`.
    pub fn random(hidden: usize, basis: BSplineBasis<f64>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Perceptron::zeros(basis.size(), hidden, 1)?;
        for unit in 0..hidden {
            for w in net.hidden_weights_mut(unit) {
                *w = TEACHER_WEIGHT_SD * rng.sample::<f64, _>(StandardNormal);
            }
            net.set_hidden_bias(unit, 0.5 * rng.sample::<f64, _>(StandardNormal));
            net.set_output_weight(0, unit, rng.sample(StandardNormal));
        }
        Self::new(FunctionalMlp::new(basis, net)?)
    }

    pub fn model(&self) -> &FunctionalMlp<f64> {
        &self.model
    }

    pub fn basis(&self) -> &BSplineBasis<f64> {
        self.model.basis()
    }

    /// `n` coefficient vectors with i.i.d. standard normal entries.
    pub fn draw_coefficients(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.basis().size();
        (0..n)
            .map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    }

    /// Output of `model` on the curve with coefficients `beta`, using exact
    /// integrals against the uniform probability measure.
    pub fn exact_output(&self, model: &FunctionalMlp<f64>, beta: &[f64]) -> Result<Vec<f64>> {
        if model.basis() != self.basis() {
            return Err(Error::InvalidModel("exact outputs need the teacher's basis".into()));
        }
        if beta.len() != self.basis().size() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a basis of size {}",
                beta.len(),
                self.basis().size()
            )));
        }
        Ok(model.net().forward(&self.gram.mul_vec(beta)))
    }

    pub fn target(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.exact_output(&self.model, beta)
    }

    /// Sampled curves with exact teacher targets. Points are i.i.d. uniform
    /// when `random_points`, otherwise the shared uniform grid of size `m`.
    pub fn sample(
        &self,
        betas: &[Vec<f64>],
        m: usize,
        noise_sd: f64,
        random_points: bool,
        seed: u64,
    ) -> Result<LabeledDataset<f64>> {
        let basis = self.basis();
        let domain = basis.domain();
        let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = domain.uniform_grid(m);
        let mut functions = Vec::with_capacity(betas.len());
        let mut targets = Vec::with_capacity(betas.len());
        for beta in betas {
            let points = if random_points {
                (0..m).map(|_| rng.random_range(domain.lo..=domain.hi)).collect()
            } else {
                grid.clone()
            };
            let values = points
                .iter()
                .map(|&x| Ok(basis.eval_combination(beta, x, 0)? + noise.sample(&mut rng)))
                .collect::<Result<Vec<f64>>>()?;
            functions.push(SampledFunction::new(domain, points, values)?);
            targets.push(self.target(beta)?);
        }
        LabeledDataset::regression(domain, functions, targets)
    }

    /// Mean squared distance between student and teacher exact outputs.
    pub fn test_mse(&self, student: &FunctionalMlp<f64>, betas: &[Vec<f64>]) -> Result<f64> {
        if betas.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut acc = 0.0;
        for beta in betas {
            let s = self.exact_output(student, beta)?;
            let t = self.target(beta)?;
            acc += s.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        Ok(acc / betas.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Interval;

    fn teacher() -> Teacher {
        let basis = BSplineBasis::cubic(5, Interval::new(0.0, 1.0).unwrap()).unwrap();
        Teacher::random(2, basis, 7).unwrap()
    }

    #[test]
    fn teacher_has_zero_error_against_itself() {
        let t = teacher();
        let betas = t.draw_coefficients(20, 1);
        assert_eq!(t.test_mse(t.model(), &betas).unwrap(), 0.0);
    }

    #[test]
    fn targets_vary_across_curves() {
        let t = teacher();
        let betas = t.draw_coefficients(200, 2);
        let ys: Vec<f64> = betas.iter().map(|b| t.target(b).unwrap()[0]).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64;
        assert!(var > 0.05, "variance {var}");
    }

    #[test]
    fn sampled_targets_are_exact_teacher_outputs() {
        let t = teacher();
        let betas = t.draw_coefficients(5, 3);
        let ds = t.sample(&betas, 30, 0.0, true, 4).unwrap();
        assert_eq!(ds.len(), 5);
        for (beta, target) in betas.iter().zip(ds.targets()) {
            assert_eq!(&t.target(beta).unwrap(), target);
        }
        let grid = t.sample(&betas, 30, 0.0, false, 4).unwrap();
        assert_eq!(grid.functions()[0].points(), grid.functions()[1].points());
    }
}
