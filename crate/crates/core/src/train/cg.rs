//! Nonlinear conjugate gradient (Polak-Ribiere+) with a strong Wolfe line search.

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions<T> {
    pub max_iters: usize,
    /// Stop once the max-norm of the gradient is at most this.
    pub grad_tol: T,
    /// Sufficient-decrease constant.
    pub c1: T,
    /// Curvature constant.
    pub c2: T,
    /// Function evaluations allowed per line search.
    pub max_line_evals: usize,
}

impl<T: Real> Default for CgOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: T::lit(1e-6),
            c1: T::lit(1e-4),
            c2: T::lit(0.1),
            max_line_evals: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CgStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct CgResult<T> {
    pub x: Vec<T>,
    pub value: T,
    /// Max-norm of the gradient at `x`.
    pub grad_norm: T,
    /// Objective after every accepted step.
    pub trace: Vec<T>,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: CgStatus,
}

fn max_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Minimizer of the cubic matching `(a, fa, da)` and `(b, fb, db)`.
fn cubic_min<T: Real>(a: T, fa: T, da: T, b: T, fb: T, db: T) -> Option<T> {
    let d1 = da + db - T::lit(3.0) * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if !(disc >= T::zero()) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = db - da + T::lit(2.0) * d2;
    if denom == T::zero() {
        return None;
    }
    let t = b - (b - a) * (db + d2 - d1) / denom;
    t.is_finite().then_some(t)
}

#[derive(Clone, Copy)]
struct Probe<T> {
    step: T,
    value: T,
    slope: T,
}

struct LineSearch<'a, T, F> {
    f: &'a mut F,
    x: &'a [T],
    d: &'a [T],
    x_trial: Vec<T>,
    g_trial: Vec<T>,
    evals: usize,
}

impl<T: Real, F: FnMut(&[T], &mut [T]) -> T> LineSearch<'_, T, F> {
    fn probe(&mut self, step: T) -> Probe<T> {
        for ((xt, &x), &d) in self.x_trial.iter_mut().zip(self.x).zip(self.d) {
            *xt = x + step * d;
        }
        let value = (self.f)(&self.x_trial, &mut self.g_trial);
        self.evals += 1;
        let slope = dot(&self.g_trial, self.d);
        if value.is_finite() && slope.is_finite() {
            Probe { step, value, slope }
        } else {
            Probe {
                step,
                value: T::infinity(),
                slope: T::nan(),
            }
        }
    }

    /// Step satisfying the strong Wolfe conditions, leaving the accepted
    /// point and its gradient in `x_trial` / `g_trial`.
    fn search(&mut self, f0: T, slope0: T, first_step: T, opts: &CgOptions<T>) -> Option<Probe<T>> {
        let sufficient = |p: &Probe<T>| p.value <= f0 + opts.c1 * p.step * slope0;
        let curvature_ok = |p: &Probe<T>| p.slope.abs() <= -opts.c2 * slope0;

        let mut prev = Probe {
            step: T::zero(),
            value: f0,
            slope: slope0,
        };
        let mut step = first_step;
        let mut first = true;
        while self.evals < opts.max_line_evals {
            let cur = self.probe(step);
            if !sufficient(&cur) || (!first && cur.value >= prev.value) {
                return self.zoom(prev, cur, f0, slope0, opts);
            }
            if curvature_ok(&cur) {
                return Some(cur);
            }
            if cur.slope >= T::zero() {
                return self.zoom(cur, prev, f0, slope0, opts);
            }
            let lo = cur.step * T::lit(1.1);
            let hi = cur.step * T::lit(10.0);
            step = match cubic_min(prev.step, prev.value, prev.slope, cur.step, cur.value, cur.slope) {
                Some(t) if t > lo && t < hi => t,
                Some(t) if t >= hi => hi,
                _ => cur.step * T::lit(4.0),
            };
            prev = cur;
            first = false;
        }
        None
    }

    fn zoom(&mut self, mut lo: Probe<T>, mut hi: Probe<T>, f0: T, slope0: T, opts: &CgOptions<T>) -> Option<Probe<T>> {
        while self.evals < opts.max_line_evals {
            let (a, b) = if lo.step < hi.step {
                (lo.step, hi.step)
            } else {
                (hi.step, lo.step)
            };
            let width = b - a;
            if width <= T::epsilon() * b {
                return None;
            }
            let margin = width * T::lit(0.1);
            let bisect = (a + b) * T::lit(0.5);
            let step = if hi.value.is_finite() {
                match cubic_min(lo.step, lo.value, lo.slope, hi.step, hi.value, hi.slope) {
                    Some(t) if t > a + margin && t < b - margin => t,
                    _ => bisect,
                }
            } else {
                bisect
            };
            let cur = self.probe(step);
            if cur.value > f0 + opts.c1 * cur.step * slope0 || cur.value >= lo.value {
                hi = cur;
            } else {
                if cur.slope.abs() <= -opts.c2 * slope0 {
                    return Some(cur);
                }
                if cur.slope * (hi.step - lo.step) >= T::zero() {
                    hi = lo;
                }
                lo = cur;
            }
        }
        None
    }
}

/// Minimize `f` from `x0`. `f(x, grad)` returns the objective and writes its
/// gradient into `grad`.
///
/// Directions follow Polak-Ribiere+ and fall back to steepest descent when
/// the coefficient is negative, when the direction stops being a descent
/// direction, and every `dim + 1` iterations. A failed line search is
/// retried once along the steepest-descent direction before giving up.
pub fn minimize_cg<T, F>(mut f: F, x0: &[T], opts: &CgOptions<T>) -> Result<CgResult<T>>
where
    T: Real,
    F: FnMut(&[T], &mut [T]) -> T,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![T::zero(); n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteStart);
    }

    let mut trace = Vec::new();
    let mut gnorm = max_norm(&g);
    if gnorm <= opts.grad_tol {
        return Ok(CgResult {
            x,
            value: fx,
            grad_norm: gnorm,
            trace,
            iterations: 0,
            evaluations,
            status: CgStatus::Converged,
        });
    }

    let mut d: Vec<T> = g.iter().map(|&v| -v).collect();
    let mut since_restart = 0usize;
    let mut prev_step = T::zero();
    let mut prev_slope = T::zero();
    let mut status = CgStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        let mut slope = dot(&g, &d);
        if !(slope < T::zero()) {
            d.iter_mut().zip(&g).for_each(|(di, &gi)| *di = -gi);
            slope = -dot(&g, &g);
            since_restart = 0;
        }

        let mut first_step = if iterations == 0 || since_restart == 0 {
            T::one().min(T::one() / max_norm(&d))
        } else {
            prev_step * prev_slope / slope
        };
        if !(first_step.is_finite() && first_step > T::zero()) {
            first_step = T::one() / max_norm(&d);
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let mut ls = LineSearch {
                f: &mut f,
                x: &x,
                d: &d,
                x_trial: vec![T::zero(); n],
                g_trial: vec![T::zero(); n],
                evals: 0,
            };
            let found = ls.search(fx, slope, first_step, opts);
            evaluations += ls.evals;
            if let Some(p) = found {
                let (xt, gt) = (ls.x_trial, ls.g_trial);
                accepted = Some((p, xt, gt));
                break;
            }
            if attempt == 0 && since_restart > 0 {
                d.iter_mut().zip(&g).for_each(|(di, &gi)| *di = -gi);
                slope = -dot(&g, &g);
                since_restart = 0;
                first_step = T::one().min(T::one() / max_norm(&d));
            } else {
                break;
            }
        }

        let Some((probe, x_new, g_new)) = accepted else {
            status = CgStatus::LineSearchFailed;
            break;
        };

        iterations += 1;
        x = x_new;
        fx = probe.value;
        trace.push(fx);
        prev_step = probe.step;
        prev_slope = slope;

        let gg_old = dot(&g, &g);
        let mut num = T::zero();
        for (&gn, &go) in g_new.iter().zip(&g) {
            num += gn * (gn - go);
        }
        g = g_new;
        gnorm = max_norm(&g);
        if gnorm <= opts.grad_tol {
            status = CgStatus::Converged;
            break;
        }

        since_restart += 1;
        let beta = if since_restart > n {
            since_restart = 0;
            T::zero()
        } else {
            (num / gg_old).max(T::zero())
        };
        if beta == T::zero() {
            since_restart = 0;
        }
        for (di, &gi) in d.iter_mut().zip(&g) {
            *di = -gi + beta * *di;
        }
    }

    Ok(CgResult {
        x,
        value: fx,
        grad_norm: gnorm,
        trace,
        iterations,
        evaluations,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(center: Vec<f64>) -> impl FnMut(&[f64], &mut [f64]) -> f64 {
        move |x, g| {
            let mut f = 0.0;
            for i in 0..x.len() {
                let r = x[i] - center[i];
                g[i] = 2.0 * r;
                f += r * r;
            }
            f
        }
    }

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn quadratic_bowl_converges_quickly() {
        let center: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let x0 = vec![0.5; 10];
        let res = minimize_cg(bowl(center.clone()), &x0, &CgOptions::default()).unwrap();
        assert!(res.iterations <= 12, "{} iterations", res.iterations);
        for (a, b) in res.x.iter().zip(&center) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(res.status, CgStatus::Converged);
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..x.len() {
                let s = (i + 1) as f64;
                g[i] = 2.0 * s * s * x[i];
                v += s * s * x[i] * x[i];
            }
            v
        };
        let res = minimize_cg(f, &[1.0; 6], &CgOptions::default()).unwrap();
        assert_eq!(res.status, CgStatus::Converged);
        assert!(res.value < 1e-12);
    }

    #[test]
    fn starting_at_minimum_returns_immediately() {
        let res = minimize_cg(bowl(vec![1.0, 2.0]), &[1.0, 2.0], &CgOptions::default()).unwrap();
        assert!(res.trace.is_empty());
        assert_eq!(res.x, vec![1.0, 2.0]);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn rosenbrock_reaches_minimum() {
        let opts = CgOptions {
            max_iters: 200,
            ..CgOptions::default()
        };
        let res = minimize_cg(rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        assert!(
            res.value < 1e-6,
            "f = {} after {} iterations",
            res.value,
            res.iterations
        );
        assert!((res.x[0] - 1.0).abs() < 1e-2 && (res.x[1] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn trace_is_nonincreasing() {
        let res = minimize_cg(rosenbrock, &[-1.2, 1.0], &CgOptions::default()).unwrap();
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let f = |_: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            f64::NAN
        };
        assert!(matches!(
            minimize_cg(f, &[0.0], &CgOptions::default()),
            Err(Error::NonFiniteStart)
        ));
    }

    #[test]
    fn unbounded_objective_stops_with_status() {
        // linear objective: every line search keeps extrapolating
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = -1.0;
            -x[0]
        };
        let opts = CgOptions {
            max_iters: 5,
            ..CgOptions::default()
        };
        let res = minimize_cg(f, &[0.0], &opts).unwrap();
        assert_ne!(res.status, CgStatus::Converged);
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
