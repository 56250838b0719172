//! Empirical error, analytic gradients and multi-restart conjugate-gradient
//! training.
//!
//! The loss is the mean squared Euclidean distance between model outputs
//! and targets plus `weight_decay * ||w||^2` over every non-bias weight.
//! Training first turns each curve into the feature vector its model family
//! consumes (functional moments, raw values or spline coordinates) and then
//! optimizes the shared perceptron head on that fixed matrix.

mod cg;

pub use cg::{minimize_cg, CgOptions, CgResult, CgStatus};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::BSplineBasis;
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::fmodel::{functional_moments, Layout, Model, Perceptron, Variant};
use crate::linalg::{dot, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub weight_decay: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            weight_decay: 0.0,
            restarts: 10,
            max_iters: 500,
            grad_tol: 1e-6,
            init_scale: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config("weight_decay must be finite and nonnegative".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::Config("grad_tol must be nonnegative".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Config("init_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn cg_options<T: Real>(&self) -> CgOptions<T> {
        CgOptions {
            max_iters: self.max_iters,
            grad_tol: T::lit(self.grad_tol),
            ..CgOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue<T> {
    pub data_term: T,
    pub penalty: T,
    pub total: T,
}

/// Model family, hidden width and (for the spline-based families) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture<T> {
    pub variant: Variant,
    pub hidden: usize,
    pub basis: Option<BSplineBasis<T>>,
}

impl<T: Real> Architecture<T> {
    pub fn functional(basis: BSplineBasis<T>, hidden: usize) -> Self {
        Self {
            variant: Variant::Functional,
            hidden,
            basis: Some(basis),
        }
    }

    pub fn naive(hidden: usize) -> Self {
        Self {
            variant: Variant::Naive,
            hidden,
            basis: None,
        }
    }

    pub fn projection(basis: BSplineBasis<T>, hidden: usize) -> Self {
        Self {
            variant: Variant::Projection,
            hidden,
            basis: Some(basis),
        }
    }

    pub fn basis_size(&self) -> Option<usize> {
        self.basis.as_ref().map(BSplineBasis::size)
    }
}

/// Per-example feature vectors (rows) with their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet<T> {
    pub features: Matrix<T>,
    pub targets: Matrix<T>,
}

impl<T: Real> FeatureSet<T> {
    /// Feature vectors of `dataset` for the given model family.
    pub fn extract(variant: Variant, basis: Option<&BSplineBasis<T>>, dataset: &LabeledDataset<T>) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let rows: Vec<Vec<T>> = match (variant, basis) {
            (Variant::Naive, _) => {
                let m = dataset.functions()[0].len();
                dataset
                    .functions()
                    .iter()
                    .map(|f| {
                        if f.len() == m {
                            Ok(f.values().to_vec())
                        } else {
                            Err(Error::Dimension(format!(
                                "naive MLP needs a shared grid: found curves with {m} and {} points",
                                f.len()
                            )))
                        }
                    })
                    .collect::<Result<_>>()?
            }
            (Variant::Functional, Some(b)) => dataset
                .functions()
                .iter()
                .map(|f| functional_moments(b, f))
                .collect::<Result<_>>()?,
            (Variant::Projection, Some(b)) => dataset
                .functions()
                .iter()
                .map(|f| b.fit_coefficients(f))
                .collect::<Result<_>>()?,
            (v, None) => return Err(Error::InvalidModel(format!("variant {v} needs a basis"))),
        };
        let d = rows[0].len();
        let features = Matrix::from_row_major(rows.len(), d, rows.concat())?;
        let targets = Matrix::from_row_major(dataset.len(), dataset.outputs(), dataset.targets().concat())?;
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn inputs(&self) -> usize {
        self.features.cols()
    }

    pub fn outputs(&self) -> usize {
        self.targets.cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let pick = |m: &Matrix<T>| {
            let data = indices.iter().flat_map(|&i| m.row(i).iter().copied()).collect();
            Matrix::from_row_major(indices.len(), m.cols(), data).expect("subset shape")
        };
        Self {
            features: pick(&self.features),
            targets: pick(&self.targets),
        }
    }
}

/// Loss of the perceptron with parameters `params` on `set`; writes the
/// gradient when `grad` is given.
pub(crate) fn objective<T: Real>(
    layout: &Layout,
    params: &[T],
    set: &FeatureSet<T>,
    weight_decay: T,
    grad: Option<&mut [T]>,
) -> LossValue<T> {
    let Layout {
        inputs,
        hidden,
        outputs,
        ..
    } = *layout;
    let n = set.len();
    let w = &params[..layout.hidden_bias];
    let b = &params[layout.hidden_bias..layout.output_weights];
    let v = &params[layout.output_weights..layout.output_bias];
    let c = &params[layout.output_bias..];

    let mut act = vec![T::zero(); hidden];
    let mut dout = vec![T::zero(); outputs];
    let mut dh = vec![T::zero(); hidden];
    let mut sq = T::zero();
    let scale = T::lit(2.0) / T::from_usize_lossy(n);

    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.fill(T::zero());
    }

    for row in 0..n {
        let x = set.features.row(row);
        let t = set.targets.row(row);
        for i in 0..hidden {
            act[i] = (b[i] + dot(&w[i * inputs..(i + 1) * inputs], x)).tanh();
        }
        for r in 0..outputs {
            let res = c[r] + dot(&v[r * hidden..(r + 1) * hidden], &act) - t[r];
            sq += res * res;
            dout[r] = scale * res;
        }
        if let Some(g) = grad.as_deref_mut() {
            let (gw, rest) = g.split_at_mut(layout.hidden_bias);
            let (gb, rest) = rest.split_at_mut(hidden);
            let (gv, gc) = rest.split_at_mut(outputs * hidden);
            for i in 0..hidden {
                dh[i] = T::zero();
            }
            for r in 0..outputs {
                let dr = dout[r];
                gc[r] += dr;
                let vr = &v[r * hidden..(r + 1) * hidden];
                let gvr = &mut gv[r * hidden..(r + 1) * hidden];
                for i in 0..hidden {
                    gvr[i] += dr * act[i];
                    dh[i] += dr * vr[i];
                }
            }
            for i in 0..hidden {
                let di = dh[i] * (T::one() - act[i] * act[i]);
                gb[i] += di;
                for (gwi, &xj) in gw[i * inputs..(i + 1) * inputs].iter_mut().zip(x) {
                    *gwi += di * xj;
                }
            }
        }
    }

    let data_term = sq / T::from_usize_lossy(n);
    let mut norm = T::zero();
    for &p in w.iter().chain(v) {
        norm += p * p;
    }
    let penalty = weight_decay * norm;
    if let Some(g) = grad {
        let two_lambda = T::lit(2.0) * weight_decay;
        for (gi, &p) in g[..layout.hidden_bias].iter_mut().zip(w) {
            *gi += two_lambda * p;
        }
        for (gi, &p) in g[layout.output_weights..layout.output_bias].iter_mut().zip(v) {
            *gi += two_lambda * p;
        }
    }
    LossValue {
        data_term,
        penalty,
        total: data_term + penalty,
    }
}

fn compatible_features<T: Real>(model: &Model<T>, dataset: &LabeledDataset<T>) -> Result<FeatureSet<T>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.outputs() != model.outputs() {
        return Err(Error::Dimension(format!(
            "model has {} outputs, targets have length {}",
            model.outputs(),
            dataset.outputs()
        )));
    }
    let set = FeatureSet::extract(model.variant(), model.basis(), dataset)?;
    if set.inputs() != model.net().inputs() {
        return Err(Error::Dimension(format!(
            "model expects {} inputs, curves give {}",
            model.net().inputs(),
            set.inputs()
        )));
    }
    Ok(set)
}

/// Empirical error of `model` on `dataset`.
pub fn empirical_error<T: Real>(
    model: &Model<T>,
    dataset: &LabeledDataset<T>,
    weight_decay: T,
) -> Result<LossValue<T>> {
    let set = compatible_features(model, dataset)?;
    let net = model.net();
    Ok(objective(&net.layout(), net.params(), &set, weight_decay, None))
}

/// Gradient of the empirical error with respect to the flat parameter vector.
pub fn gradient<T: Real>(model: &Model<T>, dataset: &LabeledDataset<T>, weight_decay: T) -> Result<Vec<T>> {
    let set = compatible_features(model, dataset)?;
    let net = model.net();
    let mut g = vec![T::zero(); net.param_count()];
    objective(&net.layout(), net.params(), &set, weight_decay, Some(&mut g));
    Ok(g)
}

/// Random starting point for restart `restart`: each parameter uniform in
/// `+-init_scale / sqrt(fan_in)` of its layer. Restart streams are derived
/// from `seed` by counter.
pub fn initial_perceptron<T: Real>(
    inputs: usize,
    hidden: usize,
    outputs: usize,
    init_scale: f64,
    seed: u64,
    restart: usize,
) -> Result<Perceptron<T>> {
    let mut net = Perceptron::zeros(inputs, hidden, outputs)?;
    let layout = net.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let first = init_scale / (inputs as f64).sqrt();
    let second = init_scale / (hidden as f64).sqrt();
    for (idx, p) in net.params_mut().iter_mut().enumerate() {
        let bound = if idx < layout.output_weights { first } else { second };
        *p = T::lit(rng.random_range(-bound..bound));
    }
    Ok(net)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartReport<T> {
    pub loss: Option<LossValue<T>>,
    pub iterations: usize,
    pub status: Option<CgStatus>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub model: Model<T>,
    pub loss: LossValue<T>,
    pub restarts: Vec<RestartReport<T>>,
}

/// Multi-restart training of a perceptron head on precomputed features.
/// Returns the best head, its loss and one report per restart.
pub fn train_features<T: Real>(
    set: &FeatureSet<T>,
    hidden: usize,
    config: &TrainConfig,
) -> Result<(Perceptron<T>, LossValue<T>, Vec<RestartReport<T>>)> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (inputs, outputs) = (set.inputs(), set.outputs());
    let lambda = T::lit(config.weight_decay);
    let opts = config.cg_options::<T>();

    let runs: Vec<Option<(Perceptron<T>, LossValue<T>, CgResult<T>)>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let init = initial_perceptron::<T>(inputs, hidden, outputs, config.init_scale, config.seed, r).ok()?;
            let layout = init.layout();
            let res = minimize_cg(
                |p, g| objective(&layout, p, set, lambda, Some(g)).total,
                init.params(),
                &opts,
            )
            .ok()?;
            let loss = objective(&layout, &res.x, set, lambda, None);
            if !loss.total.is_finite() {
                return None;
            }
            let net = Perceptron::from_params(inputs, hidden, outputs, res.x.clone()).ok()?;
            Some((net, loss, res))
        })
        .collect();

    let reports = runs
        .iter()
        .map(|run| match run {
            Some((_, loss, res)) => RestartReport {
                loss: Some(*loss),
                iterations: res.iterations,
                status: Some(res.status),
            },
            None => RestartReport {
                loss: None,
                iterations: 0,
                status: None,
            },
        })
        .collect();

    let mut best: Option<(Perceptron<T>, LossValue<T>)> = None;
    for (net, loss, _) in runs.into_iter().flatten() {
        if best.as_ref().is_none_or(|(_, b)| loss.total < b.total) {
            best = Some((net, loss));
        }
    }
    let (net, loss) = best.ok_or(Error::AllRestartsFailed)?;
    Ok((net, loss, reports))
}

/// Train a model of the given architecture on `dataset`.
pub fn train<T: Real>(
    arch: &Architecture<T>,
    dataset: &LabeledDataset<T>,
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    let set = FeatureSet::extract(arch.variant, arch.basis.as_ref(), dataset)?;
    let (net, loss, restarts) = train_features(&set, arch.hidden, config)?;
    let model = Model::assemble(arch.variant, arch.basis.clone(), net)?;
    Ok(TrainOutcome { model, loss, restarts })
}
