use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Closed real interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidBasis(format!(
                "domain [{lo}, {hi}] is empty, reversed or not finite"
            )));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }

    #[inline]
    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn cast<U: Real>(&self) -> Interval<U> {
        Interval {
            lo: U::lit(self.lo.as_f64()),
            hi: U::lit(self.hi.as_f64()),
        }
    }

    /// `m` equally spaced points from `lo` to `hi`, endpoints included exactly.
    pub fn uniform_grid(&self, m: usize) -> Vec<T> {
        match m {
            0 => Vec::new(),
            1 => vec![self.lo],
            _ => {
                let denom = T::from_usize_lossy(m - 1);
                let mut grid: Vec<T> = (0..m)
                    .map(|j| self.lo + self.width() * T::from_usize_lossy(j) / denom)
                    .collect();
                grid[m - 1] = self.hi;
                grid
            }
        }
    }
}

/// A curve known only through finitely many `(point, value)` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    domain: Interval<T>,
    points: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(domain: Interval<T>, points: Vec<T>, values: Vec<T>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidSample(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidSample("no observations".into()));
        }
        if let Some(&x) = points.iter().find(|&&x| !domain.contains(x)) {
            return Err(Error::OutOfDomain {
                x: x.as_f64(),
                lo: domain.lo.as_f64(),
                hi: domain.hi.as_f64(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite value".into()));
        }
        Ok(Self { domain, points, values })
    }

    /// Values observed on the uniform grid of `domain` with `values.len()` points.
    pub fn on_uniform_grid(domain: Interval<T>, values: Vec<T>) -> Result<Self> {
        let points = domain.uniform_grid(values.len());
        Self::new(domain, points, values)
    }

    pub fn from_fn(domain: Interval<T>, points: Vec<T>, g: impl Fn(T) -> T) -> Result<Self> {
        let values = points.iter().map(|&x| g(x)).collect();
        Self::new(domain, points, values)
    }

    pub fn domain(&self) -> Interval<T> {
        self.domain
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.points.iter().copied().zip(self.values.iter().copied())
    }

    pub fn cast<U: Real>(&self) -> SampledFunction<U> {
        SampledFunction {
            domain: self.domain.cast(),
            points: self.points.iter().map(|x| U::lit(x.as_f64())).collect(),
            values: self.values.iter().map(|x| U::lit(x.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_endpoints_exactly() {
        let d = Interval::new(850.0, 1050.0).unwrap();
        let g = d.uniform_grid(100);
        assert_eq!(g[0], 850.0);
        assert_eq!(g[99], 1050.0);
        let w = Interval::new(1.0f64, 21.0).unwrap().uniform_grid(101);
        assert!((w[1] - 1.2).abs() < 1e-14);
    }

    #[test]
    fn rejects_points_outside_domain() {
        let d = Interval::new(0.0, 1.0).unwrap();
        assert!(matches!(
            SampledFunction::new(d, vec![0.5, 1.5], vec![1.0, 2.0]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(SampledFunction::new(d, vec![], vec![]).is_err());
        assert!(SampledFunction::new(d, vec![0.1], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_reversed_interval() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
    }
}
