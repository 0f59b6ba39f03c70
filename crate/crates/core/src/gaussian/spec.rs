//! Structured covariances and the Gaussian carrier type.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative positive-definiteness threshold: an eigenvalue spectrum is
/// accepted iff `min > PD_RATIO * max` (and `max > 0`).
pub(crate) const PD_RATIO: f64 = 1e-12;

/// Symmetric positive-definite covariance in one of three representations.
///
/// The block form `(u*I_k + v*J_k) (x) I_d` (with `J_k` the all-ones matrix,
/// diagonal included) covers every covariance that appears in the
/// exchangeable model: marginals, conditionals and tilts all stay inside the
/// two-parameter family, so queries cost O(1) instead of O((dk)^3).
#[derive(Clone, Debug, PartialEq)]
pub enum Covariance {
    Dense(DMatrix<f64>),
    Scalar {
        dim: usize,
        value: f64,
    },
    /// `(u*I_k + v*J_k) (x) I_d`; vector layout is particle-major, so entry
    /// `((i,c),(j,c'))` is `(u*delta_ij + v)*delta_cc'` at flat index `i*d+c`.
    Block {
        blocks: usize,
        block_dim: usize,
        u: f64,
        v: f64,
    },
}

impl Covariance {
    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        let c = Covariance::Dense(m);
        c.validate()?;
        Ok(c)
    }

    pub fn scalar(dim: usize, value: f64) -> Result<Self> {
        let c = Covariance::Scalar { dim, value };
        c.validate()?;
        Ok(c)
    }

    pub fn block(blocks: usize, block_dim: usize, u: f64, v: f64) -> Result<Self> {
        let c = Covariance::Block {
            blocks,
            block_dim,
            u,
            v,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        match self {
            Covariance::Dense(m) => m.nrows(),
            Covariance::Scalar { dim, .. } => *dim,
            Covariance::Block {
                blocks, block_dim, ..
            } => blocks * block_dim,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Covariance::Dense(m) => {
                if m.nrows() == 0 || m.nrows() != m.ncols() {
                    return Err(Error::NotPositiveDefinite(format!(
                        "dense covariance must be square and nonempty, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("covariance entries"));
                }
                let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let asym = (m - m.transpose()).iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if asym > 1e-9 * scale.max(1.0) {
                    return Err(Error::NotPositiveDefinite(format!(
                        "asymmetry {asym:.3e} exceeds tolerance"
                    )));
                }
                let eig = SymmetricEigen::new(m.clone());
                check_spectrum(eig.eigenvalues.iter().copied())
            }
            Covariance::Scalar { dim, value } => {
                if *dim == 0 {
                    return Err(Error::NotPositiveDefinite("empty covariance".into()));
                }
                check_spectrum([*value].into_iter())
            }
            Covariance::Block {
                blocks,
                block_dim,
                u,
                v,
            } => {
                if *blocks == 0 || *block_dim == 0 {
                    return Err(Error::NotPositiveDefinite("empty covariance".into()));
                }
                // eigenvalues: u + k*v on the all-ones direction, u elsewhere
                check_spectrum([*u + *blocks as f64 * *v, *u].into_iter())
            }
        }
    }

    /// Dense expansion; structured forms expand in the particle-major layout.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Covariance::Dense(m) => m.clone(),
            Covariance::Scalar { dim, value } => DMatrix::from_diagonal_element(*dim, *dim, *value),
            Covariance::Block {
                blocks,
                block_dim,
                u,
                v,
            } => {
                let (k, d) = (*blocks, *block_dim);
                DMatrix::from_fn(k * d, k * d, |r, c| {
                    let (ri, rc) = (r / d, r % d);
                    let (ci, cc) = (c / d, c % d);
                    if rc != cc {
                        0.0
                    } else if ri == ci {
                        u + v
                    } else {
                        *v
                    }
                })
            }
        }
    }

    /// Eigenvalues with multiplicities. Dense spectra are sorted ascending
    /// with unit multiplicities; zero-multiplicity entries are dropped.
    pub fn eigen_multiplicities(&self) -> Vec<(f64, usize)> {
        match self {
            Covariance::Dense(m) => {
                let mut eigs: Vec<f64> =
                    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
                eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                eigs.into_iter().map(|e| (e, 1)).collect()
            }
            Covariance::Scalar { dim, value } => vec![(*value, *dim)],
            Covariance::Block {
                blocks,
                block_dim,
                u,
                v,
            } => {
                let mut out = vec![(*u + *blocks as f64 * *v, *block_dim)];
                if *blocks > 1 {
                    out.push((*u, block_dim * (blocks - 1)));
                }
                out
            }
        }
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigen_multiplicities()
            .iter()
            .map(|(e, _)| *e)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigen_multiplicities()
            .iter()
            .map(|(e, _)| *e)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn trace(&self) -> f64 {
        self.eigen_multiplicities()
            .iter()
            .map(|(e, m)| e * *m as f64)
            .sum()
    }

    pub fn logdet(&self) -> f64 {
        self.eigen_multiplicities()
            .iter()
            .map(|(e, m)| *m as f64 * e.ln())
            .sum()
    }

    /// Inverse within the same representation family.
    pub fn inverse(&self) -> Result<Covariance> {
        match self {
            Covariance::Dense(m) => {
                let chol = Cholesky::new(m.clone()).ok_or_else(|| {
                    Error::NotPositiveDefinite("Cholesky failed on dense covariance".into())
                })?;
                Ok(Covariance::Dense(chol.inverse()))
            }
            Covariance::Scalar { dim, value } => Ok(Covariance::Scalar {
                dim: *dim,
                value: 1.0 / value,
            }),
            Covariance::Block {
                blocks,
                block_dim,
                u,
                v,
            } => {
                let (pu, pv) = invert_block_coeffs(*blocks, *u, *v);
                Ok(Covariance::Block {
                    blocks: *blocks,
                    block_dim: *block_dim,
                    u: pu,
                    v: pv,
                })
            }
        }
    }
}

/// `(u*I_k + v*J_k)^{-1} = (1/u) I_k - v/(u(u+kv)) J_k`.
pub(crate) fn invert_block_coeffs(k: usize, u: f64, v: f64) -> (f64, f64) {
    let kf = k as f64;
    (1.0 / u, -v / (u * (u + kf * v)))
}

fn check_spectrum(eigs: impl Iterator<Item = f64>) -> Result<()> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for e in eigs {
        if !e.is_finite() {
            return Err(Error::NonFinite("covariance spectrum"));
        }
        min = min.min(e);
        max = max.max(e);
    }
    if !(max > 0.0 && min > PD_RATIO * max) {
        return Err(Error::NotPositiveDefinite(format!(
            "spectrum [{min:.6e}, {max:.6e}] below threshold"
        )));
    }
    Ok(())
}

/// Mean vector plus structured covariance; the carrier for marginals,
/// conditionals, tilts and fitted Gaussians.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSpec {
    mean: DVector<f64>,
    cov: Covariance,
}

impl GaussianSpec {
    pub fn new(mean: DVector<f64>, cov: Covariance) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                got: mean.len(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean vector"));
        }
        Ok(GaussianSpec { mean, cov })
    }

    pub fn centered(cov: Covariance) -> Result<Self> {
        let mean = DVector::zeros(cov.dim());
        GaussianSpec::new(mean, cov)
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.cov
    }

    pub fn is_centered(&self) -> bool {
        self.mean.iter().all(|v| *v == 0.0)
    }

    pub fn precision_dense(&self) -> Result<DMatrix<f64>> {
        Ok(self.cov.inverse()?.to_dense())
    }
}

/// Simultaneous eigen-decomposition `(s1, s2, multiplicity)` when both
/// covariances live in a common diagonalizing basis; `None` means callers
/// must fall back to the dense path.
pub(crate) fn joint_spectrum(a: &Covariance, b: &Covariance) -> Option<Vec<(f64, f64, usize)>> {
    use Covariance::*;
    match (a, b) {
        (Scalar { dim: m1, value: v1 }, Scalar { dim: m2, value: v2 }) if m1 == m2 => {
            Some(vec![(*v1, *v2, *m1)])
        }
        (
            Block {
                blocks,
                block_dim,
                u,
                v,
            },
            Scalar { dim, value },
        ) if blocks * block_dim == *dim => {
            let mut out = vec![(*u + *blocks as f64 * *v, *value, *block_dim)];
            if *blocks > 1 {
                out.push((*u, *value, block_dim * (blocks - 1)));
            }
            Some(out)
        }
        (Scalar { .. }, Block { .. }) => {
            joint_spectrum(b, a).map(|pairs| pairs.into_iter().map(|(x, y, m)| (y, x, m)).collect())
        }
        (
            Block {
                blocks: k1,
                block_dim: d1,
                u: u1,
                v: v1,
            },
            Block {
                blocks: k2,
                block_dim: d2,
                u: u2,
                v: v2,
            },
        ) if k1 == k2 && d1 == d2 => {
            let kf = *k1 as f64;
            let mut out = vec![(*u1 + kf * *v1, *u2 + kf * *v2, *d1)];
            if *k1 > 1 {
                out.push((*u1, *u2, d1 * (k1 - 1)));
            }
            Some(out)
        }
        _ => None,
    }
}
