//! Brute-force reference computations used to validate the main code paths.
//!
//! Nothing here calls into [`crate::bspline`] evaluation, the perceptron
//! forward pass or the Gauss-Legendre quadrature: spline values come from
//! the textbook Cox-de Boor recursion on the knot vector and integrals from
//! composite Simpson. These are slow on purpose.

use crate::bspline::Measure;
use crate::error::{Error, Result};
use crate::fmodel::FunctionalMlp;

/// Composite Simpson integral of `f` against `mu` on `resolution` nodes.
pub fn quadrature_integral(f: impl Fn(f64) -> f64, mu: &Measure<f64>, resolution: usize) -> Result<f64> {
    if resolution < 3 || resolution.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "Simpson needs an odd node count >= 3, got {resolution}"
        )));
    }
    let s = mu.support();
    let panels = resolution - 1;
    let h = (s.hi - s.lo) / panels as f64;
    let mut acc = f(s.lo) + f(s.hi);
    for i in 1..panels {
        let x = s.lo + h * i as f64;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    Ok(acc * h / 3.0 * mu.density())
}

/// Central-difference gradient of `loss` at `x` with step `h`.
pub fn fd_gradient(mut loss: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = loss(&probe);
        probe[i] = x[i] - h;
        let down = loss(&probe);
        probe[i] = x[i];
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::Config(format!("non-finite loss near coordinate {i}")));
        }
        g.push((up - down) / (2.0 * h));
    }
    Ok(g)
}

/// B-spline `i` of order `order` on `knots` at `x` by direct recursion.
/// Right-continuous, except that the last nonempty span is closed on the
/// right so the upper end of the domain is covered.
pub fn cox_de_boor(knots: &[f64], i: usize, order: usize, x: f64) -> f64 {
    if order == 1 {
        let (a, b) = (knots[i], knots[i + 1]);
        let end = knots[knots.len() - 1];
        let last_span = b == end && a < b;
        return if (a <= x && x < b) || (last_span && x == end) {
            1.0
        } else {
            0.0
        };
    }
    let mut v = 0.0;
    let d1 = knots[i + order - 1] - knots[i];
    if d1 > 0.0 {
        v += (x - knots[i]) / d1 * cox_de_boor(knots, i, order - 1, x);
    }
    let d2 = knots[i + order] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + order] - x) / d2 * cox_de_boor(knots, i + 1, order - 1, x);
    }
    v
}

/// Model output with true integrals `int F(w_i, x) g(x) dmu(x)` (uniform
/// probability measure on the basis domain) computed by Simpson.
pub fn dense_forward(model: &FunctionalMlp<f64>, g: impl Fn(f64) -> f64, resolution: usize) -> Result<Vec<f64>> {
    let basis = model.basis();
    let knots = basis.knots();
    let order = basis.order();
    let mu = Measure::uniform(basis.domain());
    let net = model.net();
    let weight_fn = |w: &[f64], x: f64| -> f64 {
        w.iter()
            .enumerate()
            .map(|(i, &wi)| wi * cox_de_boor(knots, i, order, x))
            .sum()
    };
    let mut act = Vec::with_capacity(net.hidden());
    for unit in 0..net.hidden() {
        let w = net.hidden_weights(unit);
        let integral = quadrature_integral(|x| weight_fn(w, x) * g(x), &mu, resolution)?;
        act.push((net.hidden_bias(unit) + integral).tanh());
    }
    Ok((0..net.outputs())
        .map(|r| {
            let mut s = net.output_bias(r);
            for (unit, a) in act.iter().enumerate() {
                s += net.output_weight(r, unit) * a;
            }
            s
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Interval;

    #[test]
    fn integrates_constants_and_cubics_exactly() {
        let mu = Measure::uniform(Interval::new(0.0, 1.0).unwrap());
        assert!((quadrature_integral(|_| 1.0, &mu, 3).unwrap() - 1.0).abs() < 1e-15);
        assert!((quadrature_integral(|x| x, &mu, 11).unwrap() - 0.5).abs() < 1e-12);
        assert!((quadrature_integral(|x| x * x * x, &mu, 5).unwrap() - 0.25).abs() < 1e-12);
        assert!(quadrature_integral(|x| x, &mu, 10).is_err());
    }

    #[test]
    fn fd_of_square_norm() {
        let x = [0.3, -1.2, 2.0];
        let g = fd_gradient(|v| v.iter().map(|a| a * a).sum(), &x, 1e-5).unwrap();
        for (gi, xi) in g.iter().zip(x) {
            assert!((gi - 2.0 * xi).abs() < 1e-8);
        }
        let z = fd_gradient(|_| 4.0, &x, 1e-5).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn recursion_partition_of_unity() {
        let knots = [0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0];
        for x in [0.0, 0.2, 0.5, 0.77, 1.0] {
            let s: f64 = (0..5).map(|i| cox_de_boor(&knots, i, 4, x)).sum();
            assert!((s - 1.0).abs() < 1e-14, "x = {x}");
        }
    }
}
