//! Closed-form divergence functionals between centered Gaussians.
//!
//! Structured inputs (scalar or block-exchangeable covariances) take an
//! eigenvalue-multiplicity fast path; anything else falls back to dense
//! factorizations. Tilt positivity failures are reported through the
//! distinguished [`Divergence::Divergent`] value, not as errors: finiteness
//! of the Renyi divergence is a property of the configuration that sweeps
//! must record.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gaussian::spec::{joint_spectrum, Covariance, GaussianSpec, PD_RATIO};

/// Numeric orders this close to 1 are redirected to the KL formula to avoid
/// catastrophic cancellation in the 1/(q-1) prefactor.
pub const KL_REDIRECT_WINDOW: f64 = 1e-6;

/// Renyi order: a numeric `q > 1` or the symbolic `q -> 1` limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RenyiOrder {
    Order(f64),
    KlLimit,
}

impl RenyiOrder {
    pub fn new(q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::invalid(format!("Renyi order must satisfy q > 1, got {q}")));
        }
        Ok(RenyiOrder::Order(q))
    }
}

/// Outcome of a Renyi evaluation: a finite value, or the distinguished
/// DIVERGENT outcome when the tilt `q*S1^-1 + (1-q)*S2^-1` loses positive
/// definiteness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Divergent,
}

impl Divergence {
    pub fn is_divergent(&self) -> bool {
        matches!(self, Divergence::Divergent)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Divergence::Finite(v) => Some(*v),
            Divergence::Divergent => None,
        }
    }

    /// Unwraps the finite value; panics on DIVERGENT.
    pub fn expect_finite(&self) -> f64 {
        self.finite().expect("unexpected DIVERGENT value")
    }
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Divergence::Finite(v) => write!(f, "{v}"),
            Divergence::Divergent => write!(f, "DIVERGENT"),
        }
    }
}

/// Sufficient particle count for finiteness of `R_q(mu^{1:k} || pi^{(x)k})`:
/// the divergence exists once `N > 1 + lambda*k*(q-1) - lambda*q/(1+lambda)`.
pub fn renyi_existence_threshold(lambda: f64, k: usize, q: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda must be >= 0"));
    }
    if !(q > 1.0) {
        return Err(Error::invalid("q must be > 1"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    Ok(1.0 + lambda * k as f64 * (q - 1.0) - lambda * q / (1.0 + lambda))
}

/// Leading coefficient of `N^2 * R_q(mu^{1:k} || pi^{(x)k})` as `N -> infinity`:
/// `d*q*lambda^2/(4(1+lambda)^2) * k*(k*(1+lambda)^2 - (2*lambda+1))`.
pub fn asymptotic_coefficient(lambda: f64, k: usize, q: f64, d: usize) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda must be >= 0"));
    }
    if !(q > 1.0) {
        return Err(Error::invalid("q must be > 1"));
    }
    let (kf, df) = (k as f64, d as f64);
    let one_l = 1.0 + lambda;
    Ok(df * q * lambda * lambda / (4.0 * one_l * one_l) * kf * (kf * one_l * one_l - (2.0 * lambda + 1.0)))
}

fn require_centered_pair(mu: &GaussianSpec, nu: &GaussianSpec) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    if !mu.is_centered() || !nu.is_centered() {
        return Err(Error::NonCentered);
    }
    Ok(())
}

/// Minimum/maximum of the tilt spectrum pass the relative PD rule?
fn tilt_positive(tilt_eigs: &[(f64, usize)]) -> bool {
    let min = tilt_eigs.iter().map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
    let max = tilt_eigs.iter().map(|(e, _)| *e).fold(f64::NEG_INFINITY, f64::max);
    max > 0.0 && min > PD_RATIO * max
}

fn dense_logdet(m: &DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// `R_q(mu || nu)` between centered Gaussians.
///
/// For admissible tilts this is
/// `1/(2(q-1)) * [-q*logdet S1 - (1-q)*logdet S2 - logdet(q*S1^-1 + (1-q)*S2^-1)]`;
/// otherwise the result is [`Divergence::Divergent`]. `RenyiOrder::KlLimit`
/// dispatches to [`kl_gaussian`].
pub fn renyi_gaussian(mu: &GaussianSpec, nu: &GaussianSpec, order: RenyiOrder) -> Result<Divergence> {
    let q = match order {
        RenyiOrder::KlLimit => return kl_gaussian(mu, nu).map(Divergence::Finite),
        RenyiOrder::Order(q) => q,
    };
    if !(q > 1.0) {
        return Err(Error::invalid(format!("numeric Renyi order must exceed 1, got {q}")));
    }
    if q < 1.0 + KL_REDIRECT_WINDOW {
        log::warn!("Renyi order {q} within {KL_REDIRECT_WINDOW:.0e} of 1; using the KL formula");
        return kl_gaussian(mu, nu).map(Divergence::Finite);
    }
    require_centered_pair(mu, nu)?;

    if let Some(pairs) = joint_spectrum(mu.covariance(), nu.covariance()) {
        let tilt: Vec<(f64, usize)> = pairs
            .iter()
            .map(|(s1, s2, m)| (q / s1 + (1.0 - q) / s2, *m))
            .collect();
        if !tilt_positive(&tilt) {
            return Ok(Divergence::Divergent);
        }
        let mut total = 0.0;
        for ((s1, s2, m), (t, _)) in pairs.iter().zip(&tilt) {
            total += *m as f64 * (-q * s1.ln() - (1.0 - q) * s2.ln() - t.ln());
        }
        let r = total / (2.0 * (q - 1.0));
        debug_assert!(r > -1e-9, "Renyi came out negative: {r}");
        return Ok(Divergence::Finite(r.max(0.0)));
    }

    // dense path
    let s1 = mu.covariance().to_dense();
    let s2 = nu.covariance().to_dense();
    let ld1 = dense_logdet(&s1)?;
    let ld2 = dense_logdet(&s2)?;
    let inv1 = Cholesky::new(s1)
        .ok_or_else(|| Error::NotPositiveDefinite("mu covariance".into()))?
        .inverse();
    let inv2 = Cholesky::new(s2)
        .ok_or_else(|| Error::NotPositiveDefinite("nu covariance".into()))?
        .inverse();
    let mut tilt = q * inv1 + (1.0 - q) * inv2;
    symmetrize(&mut tilt);
    let eig = SymmetricEigen::new(tilt);
    let tilt_eigs: Vec<(f64, usize)> = eig.eigenvalues.iter().map(|e| (*e, 1)).collect();
    if !tilt_positive(&tilt_eigs) {
        return Ok(Divergence::Divergent);
    }
    let ld_tilt: f64 = eig.eigenvalues.iter().map(|e| e.ln()).sum();
    let r = (-q * ld1 - (1.0 - q) * ld2 - ld_tilt) / (2.0 * (q - 1.0));
    debug_assert!(r > -1e-9, "Renyi came out negative: {r}");
    Ok(Divergence::Finite(r.max(0.0)))
}

/// `KL(mu || nu) = 1/2 [tr(S2^-1 S1) - m - logdet(S2^-1 S1)]` for centered
/// Gaussians.
pub fn kl_gaussian(mu: &GaussianSpec, nu: &GaussianSpec) -> Result<f64> {
    require_centered_pair(mu, nu)?;

    if let Some(pairs) = joint_spectrum(mu.covariance(), nu.covariance()) {
        let mut total = 0.0;
        for (s1, s2, m) in pairs {
            let r = s1 / s2;
            total += m as f64 * (r - 1.0 - r.ln());
        }
        return Ok((total / 2.0).max(0.0));
    }

    let s1 = mu.covariance().to_dense();
    let s2 = nu.covariance().to_dense();
    let m = s1.nrows() as f64;
    let chol2 = Cholesky::new(s2.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("nu covariance".into()))?;
    let ratio = chol2.solve(&s1); // S2^-1 S1
    let trace = ratio.trace();
    let ld = dense_logdet(&s1)? - dense_logdet(&s2)?;
    Ok((0.5 * (trace - m - ld)).max(0.0))
}

/// Bures/W2 distance `sqrt(|m1-m2|^2 + tr(S1 + S2 - 2(S2^{1/2} S1 S2^{1/2})^{1/2}))`.
///
/// Means are allowed here; this probes Talagrand-type inequalities.
pub fn w2_bures(mu: &GaussianSpec, nu: &GaussianSpec) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    let mean_sq = (mu.mean() - nu.mean()).norm_squared();

    if let Some(pairs) = joint_spectrum(mu.covariance(), nu.covariance()) {
        let cov_term: f64 = pairs
            .iter()
            .map(|(s1, s2, m)| *m as f64 * (s1.sqrt() - s2.sqrt()).powi(2))
            .sum();
        return Ok((mean_sq + cov_term).max(0.0).sqrt());
    }

    let s1 = mu.covariance().to_dense();
    let s2 = nu.covariance().to_dense();
    let eig2 = SymmetricEigen::new(s2.clone());
    let sqrt_vals: Vec<f64> = eig2.eigenvalues.iter().map(|e| e.max(0.0).sqrt()).collect();
    let root2 = &eig2.eigenvectors
        * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sqrt_vals))
        * eig2.eigenvectors.transpose();
    let mut inner = &root2 * &s1 * &root2;
    symmetrize(&mut inner);
    let cross: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|e| e.max(0.0).sqrt())
        .sum();
    let cov_term = s1.trace() + s2.trace() - 2.0 * cross;
    Ok((mean_sq + cov_term).max(0.0).sqrt())
}

/// The tilted measure `P` with precision `q*S1^-1 + (1-q)*S2^-1` (the
/// normalized `rho^q * nu`). Positivity violations are a
/// [`Error::DivergentTilt`] signal.
pub fn tilted_gaussian(mu: &GaussianSpec, nu: &GaussianSpec, q: f64) -> Result<GaussianSpec> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::invalid(format!("tilt order must satisfy q >= 1, got {q}")));
    }
    require_centered_pair(mu, nu)?;

    match (mu.covariance(), nu.covariance()) {
        (c1, c2) if block_shape(c1, c2).is_some() => {
            let (k, d) = block_shape(c1, c2).unwrap();
            let (p1u, p1v) = precision_coeffs(c1, k);
            let (p2u, p2v) = precision_coeffs(c2, k);
            let pu = q * p1u + (1.0 - q) * p2u;
            let pv = q * p1v + (1.0 - q) * p2v;
            let eig_ones = pu + k as f64 * pv;
            let tilt_eigs = [(eig_ones, 1), (pu, 1)];
            if !tilt_positive(&tilt_eigs) {
                return Err(Error::DivergentTilt);
            }
            let (cu, cv) = crate::gaussian::spec::invert_block_coeffs(k, pu, pv);
            GaussianSpec::centered(Covariance::block(k, d, cu, cv)?)
        }
        _ => {
            let inv1 = mu.covariance().inverse()?.to_dense();
            let inv2 = nu.covariance().inverse()?.to_dense();
            let mut tilt = q * inv1 + (1.0 - q) * inv2;
            symmetrize(&mut tilt);
            let eig = SymmetricEigen::new(tilt.clone());
            let eigs: Vec<(f64, usize)> = eig.eigenvalues.iter().map(|e| (*e, 1)).collect();
            if !tilt_positive(&eigs) {
                return Err(Error::DivergentTilt);
            }
            let cov = Cholesky::new(tilt)
                .ok_or(Error::DivergentTilt)?
                .inverse();
            GaussianSpec::centered(Covariance::dense(cov)?)
        }
    }
}

/// Common `(k, d)` block shape of a covariance pair, treating a scalar
/// covariance as a block matrix with `v = 0`.
fn block_shape(a: &Covariance, b: &Covariance) -> Option<(usize, usize)> {
    use Covariance::*;
    match (a, b) {
        (Scalar { dim: m1, .. }, Scalar { dim: m2, .. }) if m1 == m2 => Some((1, *m1)),
        (Block { blocks, block_dim, .. }, Scalar { dim, .. })
        | (Scalar { dim, .. }, Block { blocks, block_dim, .. })
            if blocks * block_dim == *dim =>
        {
            Some((*blocks, *block_dim))
        }
        (
            Block { blocks: k1, block_dim: d1, .. },
            Block { blocks: k2, block_dim: d2, .. },
        ) if k1 == k2 && d1 == d2 => Some((*k1, *d1)),
        _ => None,
    }
}

/// Precision coefficients `(pu, pv)` of a covariance viewed as a `(k, d)`
/// block matrix.
fn precision_coeffs(c: &Covariance, k: usize) -> (f64, f64) {
    match c {
        Covariance::Scalar { value, .. } => (1.0 / value, 0.0),
        Covariance::Block { u, v, .. } => crate::gaussian::spec::invert_block_coeffs(k, *u, *v),
        Covariance::Dense(_) => unreachable!("dense covariance has no block coefficients"),
    }
}

/// Fisher information and Renyi-Fisher information of a centered pair:
///
/// ```text
/// FI    = tr[(S1^-1 - S2^-1) S1 (S1^-1 - S2^-1)]
/// RFI_q = q * tr[(S1^-1 - S2^-1) S_P (S1^-1 - S2^-1)]
/// ```
///
/// with `S_P` the tilted covariance (the score of a centered Gaussian ratio
/// is linear, so both reduce to traces).
pub fn fisher_functionals(mu: &GaussianSpec, nu: &GaussianSpec, q: f64) -> Result<(f64, f64)> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::invalid(format!("RFI order must satisfy q >= 1, got {q}")));
    }
    require_centered_pair(mu, nu)?;

    if let Some(pairs) = joint_spectrum(mu.covariance(), nu.covariance()) {
        let tilt: Vec<(f64, usize)> = pairs
            .iter()
            .map(|(s1, s2, m)| (q / s1 + (1.0 - q) / s2, *m))
            .collect();
        if !tilt_positive(&tilt) {
            return Err(Error::DivergentTilt);
        }
        let mut fi = 0.0;
        let mut rfi = 0.0;
        for ((s1, s2, m), (t, _)) in pairs.iter().zip(&tilt) {
            let diff = 1.0 / s1 - 1.0 / s2;
            fi += *m as f64 * diff * diff * s1;
            rfi += *m as f64 * diff * diff / t;
        }
        return Ok((fi, q * rfi));
    }

    let s1 = mu.covariance().to_dense();
    let inv1 = mu.covariance().inverse()?.to_dense();
    let inv2 = nu.covariance().inverse()?.to_dense();
    let diff = inv1 - inv2;
    let fi = (&diff * &s1 * &diff).trace();
    let tilted = tilted_gaussian(mu, nu, q)?;
    let sp = tilted.covariance().to_dense();
    let rfi = q * (&diff * sp * &diff).trace();
    Ok((fi, rfi))
}
