//! B-spline bases on a closed interval.
//!
//! A basis is fixed by its order (degree + 1), its size `p` and its domain.
//! Knots are clamped: `order`-fold at both ends, with `p - order` interior
//! knots spaced uniformly. Evaluation is right-continuous at interior knots
//! and uses the left limit at the upper end of the domain, so every point of
//! the closed domain has a well-defined value and derivative.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, PivotedQr};
use crate::sample::{Interval, SampledFunction};
use crate::scalar::Real;

/// Finite positive measure with constant density on its support.
///
/// `mass` is the total measure of the support; the default mass of 1 makes
/// the measure the normalized Lebesgue (uniform probability) measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measure<T> {
    support: Interval<T>,
    mass: T,
}

impl<T: Real> Measure<T> {
    pub fn uniform(support: Interval<T>) -> Self {
        Self {
            support,
            mass: T::one(),
        }
    }

    pub fn with_mass(support: Interval<T>, mass: T) -> Result<Self> {
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(Error::Config(format!("measure mass must be positive, got {mass}")));
        }
        Ok(Self { support, mass })
    }

    pub fn support(&self) -> Interval<T> {
        self.support
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    /// Density with respect to Lebesgue measure on the support.
    pub fn density(&self) -> T {
        self.mass / self.support.width()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis<T> {
    order: usize,
    size: usize,
    domain: Interval<T>,
    knots: Vec<T>,
}

impl<T: Real> BSplineBasis<T> {
    /// `size` basis functions of the given `order` with uniform interior knots.
    pub fn new(size: usize, order: usize, domain: Interval<T>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidBasis("order must be at least 1".into()));
        }
        if size < order {
            return Err(Error::InvalidBasis(format!(
                "{size} basis functions cannot carry order {order} (need p >= order)"
            )));
        }
        let domain = Interval::new(domain.lo, domain.hi)?;
        let interior = size - order;
        let pieces = T::from_usize_lossy(interior + 1);
        let mut knots = Vec::with_capacity(size + order);
        knots.extend(std::iter::repeat_n(domain.lo, order));
        for j in 1..=interior {
            knots.push(domain.lo + domain.width() * T::from_usize_lossy(j) / pieces);
        }
        knots.extend(std::iter::repeat_n(domain.hi, order));
        Ok(Self {
            order,
            size,
            domain,
            knots,
        })
    }

    /// Cubic basis, the default used throughout the experiments.
    pub fn cubic(size: usize, domain: Interval<T>) -> Result<Self> {
        Self::new(size, 4, domain)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.order - 1
    }

    /// Number of basis functions.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn domain(&self) -> Interval<T> {
        self.domain
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn cast<U: Real>(&self) -> BSplineBasis<U> {
        BSplineBasis::new(self.size, self.order, self.domain.cast()).expect("a valid basis stays valid under casting")
    }

    fn check(&self, x: T) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                x: x.as_f64(),
                lo: self.domain.lo.as_f64(),
                hi: self.domain.hi.as_f64(),
            })
        }
    }

    /// Index `s` of the knot span with `t_s <= x < t_{s+1}`; the last
    /// nonempty span at the upper end of the domain.
    fn span(&self, x: T) -> usize {
        let last = self.size - 1;
        if x >= self.knots[self.size] {
            return last;
        }
        let (mut lo, mut hi) = (self.order - 1, self.size);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Derivatives `0..=max_der` of the `order` basis functions that are
    /// nonzero on `span`, evaluated at `x`. Row `k` holds the `k`-th
    /// derivative of functions `span - degree ..= span`.
    fn local_derivatives(&self, span: usize, x: T, max_der: usize) -> Vec<Vec<T>> {
        let deg = self.degree();
        let u = &self.knots;
        let mut ndu = vec![vec![T::zero(); deg + 1]; deg + 1];
        let mut left = vec![T::zero(); deg + 1];
        let mut right = vec![T::zero(); deg + 1];
        ndu[0][0] = T::one();
        for j in 1..=deg {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = T::zero();
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let n = max_der.min(deg);
        let mut ders = vec![vec![T::zero(); deg + 1]; max_der + 1];
        for j in 0..=deg {
            ders[0][j] = ndu[j][deg];
        }
        let mut a = [vec![T::zero(); deg + 1], vec![T::zero(); deg + 1]];
        let degi = deg as isize;
        for r in 0..=deg {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = T::one();
            let ri = r as isize;
            for k in 1..=n {
                let ki = k as isize;
                let mut d = T::zero();
                let rk = ri - ki;
                let pk = degi - ki;
                if ri >= ki {
                    a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk as usize];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if ri - 1 <= pk { k - 1 } else { deg - r };
                for j in j1..=j2 {
                    let col = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[(pk + 1) as usize][col];
                    d += a[s2][j] * ndu[col][pk as usize];
                }
                if ri <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[(pk + 1) as usize][r];
                    d += a[s2][k] * ndu[r][pk as usize];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = T::from_usize_lossy(deg);
        for k in 1..=n {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= T::from_usize_lossy(deg - k);
        }
        ders
    }

    /// Index of the first nonzero function and the `order` values of the
    /// functions that can be nonzero at `x`. No domain check.
    pub(crate) fn nonzero_unchecked(&self, x: T) -> (usize, Vec<T>) {
        let span = self.span(x);
        let mut ders = self.local_derivatives(span, x, 0);
        (span + 1 - self.order, ders.swap_remove(0))
    }

    /// Values of all `p` basis functions at `x`.
    pub fn eval(&self, x: T) -> Result<Vec<T>> {
        self.eval_derivative(x, 0)
    }

    /// Exact `d`-th derivative of all `p` basis functions at `x`.
    pub fn eval_derivative(&self, x: T, d: usize) -> Result<Vec<T>> {
        if d >= self.order {
            return Err(Error::DerivativeOrder {
                order: d,
                spline_order: self.order,
            });
        }
        self.check(x)?;
        let span = self.span(x);
        let ders = self.local_derivatives(span, x, d);
        let mut out = vec![T::zero(); self.size];
        let first = span + 1 - self.order;
        out[first..first + self.order].copy_from_slice(&ders[d]);
        Ok(out)
    }

    /// `d`-th derivative of the spline `sum_i coeffs[i] * phi_i` at `x`.
    pub fn eval_combination(&self, coeffs: &[T], x: T, d: usize) -> Result<T> {
        if coeffs.len() != self.size {
            return Err(Error::Dimension(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                self.size
            )));
        }
        if d >= self.order {
            return Err(Error::DerivativeOrder {
                order: d,
                spline_order: self.order,
            });
        }
        self.check(x)?;
        let span = self.span(x);
        let ders = self.local_derivatives(span, x, d);
        let first = span + 1 - self.order;
        Ok(ders[d]
            .iter()
            .zip(&coeffs[first..first + self.order])
            .fold(T::zero(), |acc, (&b, &c)| acc + b * c))
    }

    /// Collocation matrix `B[j][i] = phi_i(x_j)`.
    pub fn design_matrix(&self, points: &[T]) -> Result<Matrix<T>> {
        let mut b = Matrix::zeros(points.len(), self.size);
        for (j, &x) in points.iter().enumerate() {
            self.check(x)?;
            let (first, vals) = self.nonzero_unchecked(x);
            b.row_mut(j)[first..first + self.order].copy_from_slice(&vals);
        }
        Ok(b)
    }

    /// Least-squares coefficients of the sampled curve in this basis.
    pub fn fit_coefficients(&self, f: &SampledFunction<T>) -> Result<Vec<T>> {
        let design = self.design_matrix(f.points())?;
        PivotedQr::new(&design).solve(f.values())
    }

    /// `M[i][j] = integral of phi_i * phi_j` against `measure`, exact up to
    /// rounding (Gauss-Legendre with `order` nodes on each knot span).
    pub fn gram_matrix(&self, measure: &Measure<T>) -> Result<Matrix<T>> {
        let support = measure.support();
        if support.lo < self.domain.lo || support.hi > self.domain.hi {
            return Err(Error::InvalidBasis(format!(
                "measure support [{}, {}] is not inside the basis domain [{}, {}]",
                support.lo, support.hi, self.domain.lo, self.domain.hi
            )));
        }
        let (nodes, weights) = gauss_legendre(self.order);
        let density = measure.density();
        let half = T::lit(0.5);
        let mut gram = Matrix::zeros(self.size, self.size);
        for span in self.order - 1..self.size {
            let a = self.knots[span].max(support.lo);
            let b = self.knots[span + 1].min(support.hi);
            if !(b > a) {
                continue;
            }
            let mid = (a + b) * half;
            let rad = (b - a) * half;
            let first = span + 1 - self.order;
            for (&t, &w) in nodes.iter().zip(&weights) {
                let x = mid + rad * T::lit(t);
                let vals = self.local_derivatives(span, x, 0).swap_remove(0);
                let scale = T::lit(w) * rad * density;
                for r in 0..self.order {
                    for s in 0..self.order {
                        gram[(first + r, first + s)] += scale * vals[r] * vals[s];
                    }
                }
            }
        }
        Ok(gram)
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_{n-1}(x)
            let (mut pn1, mut pn) = (1.0, x);
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * pn - (k - 1) as f64 * pn1) / k as f64;
                pn1 = pn;
                pn = pk;
            }
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
