//! The exchangeable Gaussian stationary measure of the quadratic model and
//! its marginals and conditionals.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::spec::{Covariance, GaussianSpec, PD_RATIO};
use crate::model::ModelParams;

/// Precision structure `(a*I_N - b*J_N) (x) I_d`, `J_N` the all-ones matrix
/// including its diagonal.
///
/// The two precision eigenvalues are `a - b*N` on `span(1_N) (x) R^d`
/// (multiplicity `d`) and `a` on the orthogonal complement (multiplicity
/// `d(N-1)`); both must be strictly positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExchangeableGaussian {
    n: usize,
    d: usize,
    a: f64,
    b: f64,
}

impl ExchangeableGaussian {
    pub fn new(n: usize, d: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid("N and d must be >= 1"));
        }
        let ones = a - b * n as f64;
        let max = ones.max(a);
        if !(max > 0.0 && ones.min(a) > PD_RATIO * max) {
            return Err(Error::NotPositiveDefinite(format!(
                "precision eigenvalues ({ones:.6e}, {a:.6e}) not strictly positive"
            )));
        }
        Ok(ExchangeableGaussian { n, d, a, b })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Identity coefficient of the precision; equals `1 + lambda*N/(N-1)`
    /// for the stationary model.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// All-ones coefficient of the precision; equals `lambda/(N-1)` for the
    /// stationary model.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Precision eigenvalue on the all-ones direction, `a - b*N`.
    pub fn eigenvalue_ones(&self) -> f64 {
        self.a - self.b * self.n as f64
    }

    /// Precision eigenvalue on the orthogonal complement, `a`.
    pub fn eigenvalue_complement(&self) -> f64 {
        self.a
    }

    /// Dense `(dN x dN)` precision, particle-major layout. For tests and
    /// small-system oracles only.
    pub fn precision_dense(&self) -> DMatrix<f64> {
        let (n, d) = (self.n, self.d);
        let (a, b) = (self.a, self.b);
        DMatrix::from_fn(n * d, n * d, |r, c| {
            let (ri, rc) = (r / d, r % d);
            let (ci, cc) = (c / d, c % d);
            if rc != cc {
                0.0
            } else if ri == ci {
                a - b
            } else {
                -b
            }
        })
    }

    /// Covariance coefficients `(cu, cv)` with covariance
    /// `(cu*I_N + cv*J_N) (x) I_d`.
    fn covariance_coeffs(&self) -> (f64, f64) {
        let nf = self.n as f64;
        (1.0 / self.a, self.b / (self.a * (self.a - self.b * nf)))
    }

    /// Centered law of the first `k` particles:
    /// `((1/a) I_k + b/(a(a-bN)) J_k) (x) I_d` in structured form. For the
    /// stationary model this is `((1/rho) I_k + lambda/(rho(N-1)) J_k) (x) I_d`.
    pub fn marginal_covariance(&self, k: usize) -> Result<GaussianSpec> {
        if k == 0 || k > self.n {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.n,
            });
        }
        let (cu, cv) = self.covariance_coeffs();
        GaussianSpec::centered(Covariance::block(k, self.d, cu, cv)?)
    }

    /// Law of particles `k+1..k+ell` given the first `k` particles at
    /// `observed` (a `k x d` matrix). The mean is linear in the observation,
    /// the covariance does not depend on it.
    pub fn conditional_block_gaussian(
        &self,
        observed: &DMatrix<f64>,
        ell: usize,
    ) -> Result<GaussianSpec> {
        let k = observed.nrows();
        if observed.ncols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: observed.ncols(),
            });
        }
        if k == 0 || ell == 0 || k + ell > self.n {
            return Err(Error::IndexOutOfRange {
                index: k + ell,
                len: self.n,
            });
        }
        if observed.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observed block"));
        }

        // Schur complement on the (a, b) structure: conditioning on the
        // first k particles leaves precision a*I_{N-k} - b*J_{N-k} on the
        // rest, with mean b/(a - b(N-k)) * sum of observed particles.
        let rest = (self.n - k) as f64;
        let mean_coeff = self.b / (self.a - self.b * rest);
        let mut mean = DVector::zeros(ell * self.d);
        for c in 0..self.d {
            let s: f64 = (0..k).map(|j| observed[(j, c)]).sum();
            let m = mean_coeff * s;
            for i in 0..ell {
                mean[i * self.d + c] = m;
            }
        }
        let u = 1.0 / self.a;
        let v = self.b / (self.a * (self.a - self.b * rest));
        GaussianSpec::new(mean, Covariance::block(ell, self.d, u, v)?)
    }
}

/// Precision structure of the stationary measure
/// `mu = N(0, (I_{dN} + lambda/(N-1) * C (x) I_d)^{-1})` with
/// `C = N*I_N - J_N`: in `(a, b)` form, `a = 1 + lambda*N/(N-1)` and
/// `b = lambda/(N-1)` (diagonal `1 + lambda`, off-diagonal `-lambda/(N-1)`).
pub fn stationary_exchangeable_gaussian(model: &ModelParams) -> Result<ExchangeableGaussian> {
    if !model.is_quadratic() {
        return Err(Error::PerturbedModel("stationary_exchangeable_gaussian"));
    }
    let nm1 = (model.n - 1) as f64;
    let a = 1.0 + model.lambda * model.n as f64 / nm1;
    let b = model.lambda / nm1;
    ExchangeableGaussian::new(model.n, model.d, a, b)
}

/// The mean-field law of the quadratic model, `N(0, I_d/(1+lambda))`.
pub fn mean_field_gaussian(model: &ModelParams) -> Result<GaussianSpec> {
    if !model.is_quadratic() {
        return Err(Error::PerturbedModel("mean_field_gaussian"));
    }
    GaussianSpec::centered(Covariance::scalar(model.d, 1.0 / (1.0 + model.lambda))?)
}

/// The product law `pi^{(x) k}` of the quadratic model on `R^{dk}`.
pub fn mean_field_product(model: &ModelParams, k: usize) -> Result<GaussianSpec> {
    if !model.is_quadratic() {
        return Err(Error::PerturbedModel("mean_field_product"));
    }
    GaussianSpec::centered(Covariance::scalar(k * model.d, 1.0 / (1.0 + model.lambda))?)
}
