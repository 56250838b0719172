//! Forward evaluation of the three model families.
//!
//! All three share the same numeric head, a one-hidden-layer tanh
//! [`Perceptron`] with an affine output layer. They differ only in the
//! vector the head sees for a curve `g` observed at `(x_j, y_j)`:
//!
//! - [`FunctionalMlp`]: the empirical moments `(1/m) sum_j phi_l(x_j) y_j`,
//!   so hidden unit `i` computes `tanh(b_i + (1/m) sum_j F(w_i, x_j) y_j)`
//!   with weight function `F(w, x) = sum_l w_l phi_l(x)`.
//! - [`NaiveMlp`]: the raw values `y_j`, which requires a shared grid.
//! - [`ProjectionMlp`]: the least-squares B-spline coefficients of the curve.

use serde::{Deserialize, Serialize};

use crate::bspline::{BSplineBasis, Measure};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky};
use crate::sample::{Interval, SampledFunction};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Raw sampled values fed to a numerical MLP.
    #[serde(rename = "mlp")]
    Naive,
    #[serde(rename = "fmlp")]
    Functional,
    /// B-spline coefficients fed to a numerical MLP.
    #[serde(rename = "fpmlp")]
    Projection,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Naive => "mlp",
            Variant::Functional => "fmlp",
            Variant::Projection => "fpmlp",
        }
    }

    pub fn uses_basis(self) -> bool {
        !matches!(self, Variant::Naive)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(Variant::Naive),
            "fmlp" => Ok(Variant::Functional),
            "fpmlp" => Ok(Variant::Projection),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// Number of numerical parameters of a one-hidden-layer net with `inputs`
/// inputs, `hidden` tanh units and `outputs` affine outputs.
pub fn param_count_for(inputs: usize, hidden: usize, outputs: usize) -> Result<usize> {
    if hidden == 0 {
        return Err(Error::InvalidModel("hidden layer must have at least one unit".into()));
    }
    if inputs == 0 || outputs == 0 {
        return Err(Error::InvalidModel("inputs and outputs must be nonempty".into()));
    }
    Ok(hidden * (inputs + 1) + outputs * (hidden + 1))
}

/// One-hidden-layer tanh perceptron with an affine output layer.
///
/// Parameters live in one flat vector laid out as
/// `[hidden weights (hidden x inputs, row-major) | hidden biases |
///   output weights (outputs x hidden, row-major) | output biases]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perceptron<T> {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    params: Vec<T>,
}

impl<T: Real> Perceptron<T> {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Result<Self> {
        let n = param_count_for(inputs, hidden, outputs)?;
        Ok(Self {
            inputs,
            hidden,
            outputs,
            params: vec![T::zero(); n],
        })
    }

    pub fn from_params(inputs: usize, hidden: usize, outputs: usize, params: Vec<T>) -> Result<Self> {
        let n = param_count_for(inputs, hidden, outputs)?;
        if params.len() != n {
            return Err(Error::Dimension(format!(
                "{} parameters for a {inputs}-{hidden}-{outputs} perceptron (expected {n})",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        Ok(Self {
            inputs,
            hidden,
            outputs,
            params,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<T> {
        self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout::new(self.inputs, self.hidden, self.outputs)
    }

    pub fn hidden_weights(&self, unit: usize) -> &[T] {
        let l = self.layout();
        &self.params[unit * l.inputs..(unit + 1) * l.inputs]
    }

    pub fn hidden_weights_mut(&mut self, unit: usize) -> &mut [T] {
        let l = self.layout();
        &mut self.params[unit * l.inputs..(unit + 1) * l.inputs]
    }

    pub fn hidden_bias(&self, unit: usize) -> T {
        self.params[self.layout().hidden_bias + unit]
    }

    pub fn set_hidden_bias(&mut self, unit: usize, v: T) {
        let at = self.layout().hidden_bias + unit;
        self.params[at] = v;
    }

    pub fn output_weight(&self, out: usize, unit: usize) -> T {
        self.params[self.layout().output_weights + out * self.hidden + unit]
    }

    pub fn set_output_weight(&mut self, out: usize, unit: usize, v: T) {
        let at = self.layout().output_weights + out * self.hidden + unit;
        self.params[at] = v;
    }

    pub fn output_bias(&self, out: usize) -> T {
        self.params[self.layout().output_bias + out]
    }

    pub fn set_output_bias(&mut self, out: usize, v: T) {
        let at = self.layout().output_bias + out;
        self.params[at] = v;
    }

    /// Hidden pre-activations `b_i + w_i . x`.
    pub fn pre_activations(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.inputs, "perceptron input length");
        (0..self.hidden)
            .map(|i| self.hidden_bias(i) + dot(self.hidden_weights(i), x))
            .collect()
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let act: Vec<T> = self.pre_activations(x).into_iter().map(T::tanh).collect();
        let l = self.layout();
        (0..self.outputs)
            .map(|r| {
                let row = &self.params[l.output_weights + r * self.hidden..][..self.hidden];
                self.output_bias(r) + dot(row, &act)
            })
            .collect()
    }

    pub fn cast<U: Real>(&self) -> Perceptron<U> {
        Perceptron {
            inputs: self.inputs,
            hidden: self.hidden,
            outputs: self.outputs,
            params: self.params.iter().map(|p| U::lit(p.as_f64())).collect(),
        }
    }
}

/// Offsets of the parameter blocks inside a flat perceptron vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub hidden_bias: usize,
    pub output_weights: usize,
    pub output_bias: usize,
}

impl Layout {
    pub fn new(inputs: usize, hidden: usize, outputs: usize) -> Self {
        let hidden_bias = hidden * inputs;
        let output_weights = hidden_bias + hidden;
        let output_bias = output_weights + outputs * hidden;
        Self {
            inputs,
            hidden,
            outputs,
            hidden_bias,
            output_weights,
            output_bias,
        }
    }

    #[cfg(test)]
    pub fn is_bias(&self, idx: usize) -> bool {
        (self.hidden_bias..self.output_weights).contains(&idx) || idx >= self.output_bias
    }
}

fn check_basis_domain<T: Real>(basis: &BSplineBasis<T>, f: &SampledFunction<T>) -> Result<()> {
    let d = basis.domain();
    if let Some(&x) = f.points().iter().find(|&&x| !d.contains(x)) {
        return Err(Error::OutOfDomain {
            x: x.as_f64(),
            lo: d.lo.as_f64(),
            hi: d.hi.as_f64(),
        });
    }
    Ok(())
}

/// Empirical-mean approximation `(1/m) sum_j F(w, x_j) y_j` of the integral
/// of the weight function `F(w, .) = sum_i w_i phi_i` against the curve.
pub fn approx_integral<T: Real>(basis: &BSplineBasis<T>, w: &[T], f: &SampledFunction<T>) -> Result<T> {
    if w.len() != basis.size() {
        return Err(Error::Dimension(format!(
            "{} weight coefficients for a basis of size {}",
            w.len(),
            basis.size()
        )));
    }
    let mut acc = T::zero();
    for (x, y) in f.iter() {
        acc += basis.eval_combination(w, x, 0)? * y;
    }
    Ok(acc / T::from_usize_lossy(f.len()))
}

/// Per-basis-function empirical moments `(1/m) sum_j phi_l(x_j) y_j`.
///
/// These are the derivatives of every functional pre-activation with respect
/// to the weight-function coefficients.
pub fn functional_moments<T: Real>(basis: &BSplineBasis<T>, f: &SampledFunction<T>) -> Result<Vec<T>> {
    check_basis_domain(basis, f)?;
    let mut z = vec![T::zero(); basis.size()];
    for (x, y) in f.iter() {
        let (first, vals) = basis.nonzero_unchecked(x);
        for (zl, v) in z[first..first + vals.len()].iter_mut().zip(vals) {
            *zl += v * y;
        }
    }
    let m = T::from_usize_lossy(f.len());
    for zl in z.iter_mut() {
        *zl /= m;
    }
    Ok(z)
}

/// Coefficients `d` of the weight function whose integral against any curve
/// matches the coefficient combination `sum_j c_j alpha_j(g)`; solves
/// `M d = c` with `M` the Gram matrix of the basis under `measure`.
pub fn equivalence_weights<T: Real>(basis: &BSplineBasis<T>, c: &[T], measure: &Measure<T>) -> Result<Vec<T>> {
    if c.len() != basis.size() {
        return Err(Error::Dimension(format!(
            "{} coefficients for a basis of size {}",
            c.len(),
            basis.size()
        )));
    }
    let gram = basis.gram_matrix(measure)?;
    Ok(Cholesky::new(&gram)?.solve(c))
}

/// Index of the largest output; ties go to the lowest index.
pub fn argmax<T: Real>(outputs: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in outputs.iter().enumerate().skip(1) {
        if v > outputs[best] {
            best = i;
        }
    }
    best
}

/// Functional MLP with B-spline weight functions.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalMlp<T> {
    basis: BSplineBasis<T>,
    net: Perceptron<T>,
}

impl<T: Real> FunctionalMlp<T> {
    pub fn new(basis: BSplineBasis<T>, net: Perceptron<T>) -> Result<Self> {
        if net.inputs() != basis.size() {
            return Err(Error::Dimension(format!(
                "perceptron takes {} inputs but the basis has {} functions",
                net.inputs(),
                basis.size()
            )));
        }
        Ok(Self { basis, net })
    }

    pub fn basis(&self) -> &BSplineBasis<T> {
        &self.basis
    }

    pub fn net(&self) -> &Perceptron<T> {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Perceptron<T> {
        &mut self.net
    }

    /// Coefficients of the weight function of hidden unit `unit`.
    pub fn weight_function(&self, unit: usize) -> &[T] {
        self.net.hidden_weights(unit)
    }

    /// Value of weight function `unit` at `x`.
    pub fn weight_function_at(&self, unit: usize, x: T) -> Result<T> {
        self.basis.eval_combination(self.weight_function(unit), x, 0)
    }

    pub fn features(&self, f: &SampledFunction<T>) -> Result<Vec<T>> {
        functional_moments(&self.basis, f)
    }

    pub fn forward(&self, f: &SampledFunction<T>) -> Result<Vec<T>> {
        Ok(self.net.forward(&self.features(f)?))
    }

    /// Numerical MLP on the shared grid `points` with input weights
    /// `c_ij = F(w_i, x_j) / m`; it reproduces this model on any curve
    /// observed at exactly those points.
    pub fn to_naive(&self, points: &[T]) -> Result<NaiveMlp<T>> {
        let m = points.len();
        let mut net = Perceptron::zeros(m, self.net.hidden(), self.net.outputs())?;
        let inv_m = T::one() / T::from_usize_lossy(m);
        for i in 0..self.net.hidden() {
            for (j, &x) in points.iter().enumerate() {
                net.hidden_weights_mut(i)[j] = self.weight_function_at(i, x)? * inv_m;
            }
            net.set_hidden_bias(i, self.net.hidden_bias(i));
        }
        let l = self.net.layout();
        let head = &self.net.params()[l.output_weights..];
        let nl = net.layout();
        net.params_mut()[nl.output_weights..].copy_from_slice(head);
        NaiveMlp::new(net)
    }
}

/// Numerical MLP applied to the raw vector of sampled values.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveMlp<T> {
    net: Perceptron<T>,
}

impl<T: Real> NaiveMlp<T> {
    pub fn new(net: Perceptron<T>) -> Result<Self> {
        Ok(Self { net })
    }

    pub fn net(&self) -> &Perceptron<T> {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Perceptron<T> {
        &mut self.net
    }

    pub fn features(&self, f: &SampledFunction<T>) -> Result<Vec<T>> {
        if f.len() != self.net.inputs() {
            return Err(Error::Dimension(format!(
                "naive MLP expects {} sampled values, got {}",
                self.net.inputs(),
                f.len()
            )));
        }
        Ok(f.values().to_vec())
    }

    pub fn forward(&self, f: &SampledFunction<T>) -> Result<Vec<T>> {
        Ok(self.net.forward(&self.features(f)?))
    }
}

/// Numerical MLP applied to least-squares B-spline coordinates of the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMlp<T> {
    basis: BSplineBasis<T>,
    net: Perceptron<T>,
}

impl<T: Real> ProjectionMlp<T> {
    pub fn new(basis: BSplineBasis<T>, net: Perceptron<T>) -> Result<Self> {
        if net.inputs() != basis.size() {
            return Err(Error::Dimension(format!(
                "perceptron takes {} inputs but the basis has {} functions",
                net.inputs(),
                basis.size()
            )));
        }
        Ok(Self { basis, net })
    }

    pub fn basis(&self) -> &BSplineBasis<T> {
        &self.basis
    }

    pub fn net(&self) -> &Perceptron<T> {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Perceptron<T> {
        &mut self.net
    }

    pub fn features(&self, f: &SampledFunction<T>) -> Result<Vec<T>> {
        self.basis.fit_coefficients(f)
    }

    pub fn forward(&self, f: &SampledFunction<T>) -> Result<Vec<T>> {
        Ok(self.net.forward(&self.features(f)?))
    }
}

/// Any of the three model families.
#[derive(Debug, Clone, PartialEq)]
pub enum Model<T> {
    Functional(FunctionalMlp<T>),
    Naive(NaiveMlp<T>),
    Projection(ProjectionMlp<T>),
}

impl<T: Real> Model<T> {
    /// Assemble a model of the given family around `net`.
    pub fn assemble(variant: Variant, basis: Option<BSplineBasis<T>>, net: Perceptron<T>) -> Result<Self> {
        match (variant, basis) {
            (Variant::Naive, _) => Ok(Model::Naive(NaiveMlp::new(net)?)),
            (Variant::Functional, Some(b)) => Ok(Model::Functional(FunctionalMlp::new(b, net)?)),
            (Variant::Projection, Some(b)) => Ok(Model::Projection(ProjectionMlp::new(b, net)?)),
            (v, None) => Err(Error::InvalidModel(format!("variant {v} needs a basis"))),
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            Model::Functional(_) => Variant::Functional,
            Model::Naive(_) => Variant::Naive,
            Model::Projection(_) => Variant::Projection,
        }
    }

    pub fn basis(&self) -> Option<&BSplineBasis<T>> {
        match self {
            Model::Functional(m) => Some(m.basis()),
            Model::Naive(_) => None,
            Model::Projection(m) => Some(m.basis()),
        }
    }

    pub fn net(&self) -> &Perceptron<T> {
        match self {
            Model::Functional(m) => m.net(),
            Model::Naive(m) => m.net(),
            Model::Projection(m) => m.net(),
        }
    }

    pub fn net_mut(&mut self) -> &mut Perceptron<T> {
        match self {
            Model::Functional(m) => m.net_mut(),
            Model::Naive(m) => m.net_mut(),
            Model::Projection(m) => m.net_mut(),
        }
    }

    /// The vector the numerical head sees for curve `f`.
    pub fn features(&self, f: &SampledFunction<T>) -> Result<Vec<T>> {
        match self {
            Model::Functional(m) => m.features(f),
            Model::Naive(m) => m.features(f),
            Model::Projection(m) => m.features(f),
        }
    }

    pub fn forward(&self, f: &SampledFunction<T>) -> Result<Vec<T>> {
        Ok(self.net().forward(&self.features(f)?))
    }

    pub fn classify(&self, f: &SampledFunction<T>) -> Result<usize> {
        Ok(argmax(&self.forward(f)?))
    }

    pub fn hidden(&self) -> usize {
        self.net().hidden()
    }

    pub fn outputs(&self) -> usize {
        self.net().outputs()
    }

    pub fn param_count(&self) -> usize {
        self.net().param_count()
    }
}

impl<T> From<FunctionalMlp<T>> for Model<T> {
    fn from(m: FunctionalMlp<T>) -> Self {
        Model::Functional(m)
    }
}

impl<T> From<NaiveMlp<T>> for Model<T> {
    fn from(m: NaiveMlp<T>) -> Self {
        Model::Naive(m)
    }
}

impl<T> From<ProjectionMlp<T>> for Model<T> {
    fn from(m: ProjectionMlp<T>) -> Self {
        Model::Projection(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDocument {
    pub order: usize,
    pub p: usize,
    pub domain: [f64; 2],
}

/// JSON form of a trained model. Weights are nested arrays of binary64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub variant: Variant,
    pub basis: Option<BasisDocument>,
    pub inputs: usize,
    pub k: usize,
    pub o: usize,
    pub hidden_weights: Vec<Vec<f64>>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<Vec<f64>>,
    pub output_biases: Vec<f64>,
    pub seed: Option<u64>,
}

impl ModelDocument {
    pub fn from_model<T: Real>(model: &Model<T>, seed: Option<u64>) -> Self {
        let net = model.net();
        let (k, o) = (net.hidden(), net.outputs());
        Self {
            variant: model.variant(),
            basis: model.basis().map(|b| BasisDocument {
                order: b.order(),
                p: b.size(),
                domain: [b.domain().lo.as_f64(), b.domain().hi.as_f64()],
            }),
            inputs: net.inputs(),
            k,
            o,
            hidden_weights: (0..k)
                .map(|i| net.hidden_weights(i).iter().map(|w| w.as_f64()).collect())
                .collect(),
            hidden_biases: (0..k).map(|i| net.hidden_bias(i).as_f64()).collect(),
            output_weights: (0..o)
                .map(|r| (0..k).map(|i| net.output_weight(r, i).as_f64()).collect())
                .collect(),
            output_biases: (0..o).map(|r| net.output_bias(r).as_f64()).collect(),
            seed,
        }
    }

    pub fn to_model<T: Real>(&self) -> Result<Model<T>> {
        let basis = match &self.basis {
            Some(b) => Some(BSplineBasis::new(
                b.p,
                b.order,
                Interval::new(T::lit(b.domain[0]), T::lit(b.domain[1]))?,
            )?),
            None => None,
        };
        let shape_err = || Error::Dimension("weight arrays do not match k, o and inputs".into());
        if self.hidden_weights.len() != self.k
            || self.hidden_biases.len() != self.k
            || self.output_weights.len() != self.o
            || self.output_biases.len() != self.o
            || self.hidden_weights.iter().any(|r| r.len() != self.inputs)
            || self.output_weights.iter().any(|r| r.len() != self.k)
        {
            return Err(shape_err());
        }
        let params: Vec<T> = self
            .hidden_weights
            .iter()
            .flatten()
            .chain(&self.hidden_biases)
            .chain(self.output_weights.iter().flatten())
            .chain(&self.output_biases)
            .map(|&v| T::lit(v))
            .collect();
        let net = Perceptron::from_params(self.inputs, self.k, self.o, params)?;
        Model::assemble(self.variant, basis, net)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
