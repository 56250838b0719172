//! Multi-layer perceptrons whose inputs are functions.
//!
//! Three model families share one perceptron head:
//!
//! * [`FunctionalMlp`]: first-layer weights are functions in a B-spline basis
//!   and each hidden unit integrates its weight function against the input
//!   curve (approximated by the mean over the sampling points);
//! * [`NaiveMlp`]: the raw sampled values on a shared grid;
//! * [`ProjectionMlp`]: least-squares B-spline coefficients of the curve.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! and `*F32` aliases below name the usual instantiations.

pub mod bspline;
pub mod data;
pub mod error;
pub mod fmodel;
pub mod linalg;
pub mod oracle;
pub mod sample;
pub mod scalar;
pub mod select;
pub mod train;

pub use bspline::{BSplineBasis, Measure};
pub use data::LabeledDataset;
pub use error::{Error, Result};
pub use fmodel::{FunctionalMlp, Model, ModelDocument, NaiveMlp, Perceptron, ProjectionMlp, Variant};
pub use sample::{Interval, SampledFunction};
pub use scalar::Real;
pub use select::{grid_search, CvReport, Grid};
pub use train::{train, Architecture, TrainConfig};

pub type BSplineBasisF64 = BSplineBasis<f64>;
pub type BSplineBasisF32 = BSplineBasis<f32>;
pub type MeasureF64 = Measure<f64>;
pub type IntervalF64 = Interval<f64>;
pub type SampledFunctionF64 = SampledFunction<f64>;
pub type SampledFunctionF32 = SampledFunction<f32>;
pub type DatasetF64 = LabeledDataset<f64>;
pub type DatasetF32 = LabeledDataset<f32>;
pub type PerceptronF64 = Perceptron<f64>;
pub type FunctionalMlpF64 = FunctionalMlp<f64>;
pub type FunctionalMlpF32 = FunctionalMlp<f32>;
pub type NaiveMlpF64 = NaiveMlp<f64>;
pub type ProjectionMlpF64 = ProjectionMlp<f64>;
pub type ModelF64 = Model<f64>;
pub type ModelF32 = Model<f32>;
pub type CvReportF64 = CvReport<f64>;
