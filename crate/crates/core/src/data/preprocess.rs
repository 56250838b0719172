use super::LabeledDataset;
use crate::bspline::BSplineBasis;
use crate::error::{Error, Result};
use crate::sample::SampledFunction;
use crate::scalar::Real;

/// Replace each curve by the exact second derivative of its least-squares
/// spline fit, evaluated at the original observation points.
pub fn second_derivative_preprocess<T: Real>(
    ds: &LabeledDataset<T>,
    basis: &BSplineBasis<T>,
) -> Result<LabeledDataset<T>> {
    if basis.order() < 3 {
        return Err(Error::InvalidBasis(format!(
            "second derivatives need order >= 3, basis has order {}",
            basis.order()
        )));
    }
    ds.map_functions(|f| spline_resample(basis, f, 2))
}

/// Replace each curve by its least-squares spline fit resampled at the same
/// points.
pub fn presmooth<T: Real>(ds: &LabeledDataset<T>, basis: &BSplineBasis<T>) -> Result<LabeledDataset<T>> {
    ds.map_functions(|f| spline_resample(basis, f, 0))
}

fn spline_resample<T: Real>(basis: &BSplineBasis<T>, f: &SampledFunction<T>, d: usize) -> Result<SampledFunction<T>> {
    let alpha = basis.fit_coefficients(f)?;
    let values = f
        .points()
        .iter()
        .map(|&x| basis.eval_combination(&alpha, x, d))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(f.domain(), f.points().to_vec(), values)
}
