//! Confinement and interaction potentials, particle-system energy and drift,
//! and the mean-field self-consistency residual.
//!
//! The potential family is quadratic plus an optional bounded smooth
//! perturbation of the confinement:
//!
//! ```text
//! V(x) = |x|^2 / 2 + A*cos(omega * x_1),    W(x) = lambda * |x|^2 / 2.
//! ```
//!
//! `W` is even, so the pairwise drift is exactly the negative gradient of the
//! particle energy. All gradients are analytic; finite differences appear
//! only in tests.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::GaussianSpec;

/// Bounded smooth perturbation of the confinement: `A*cos(omega * x_1)`.
///
/// Oscillation `2A` and Hessian bound `A*omega^2` follow directly from the
/// cosine form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub frequency: f64,
}

impl Perturbation {
    pub fn osc(&self) -> f64 {
        2.0 * self.amplitude
    }

    pub fn hessian_bound(&self) -> f64 {
        self.amplitude * self.frequency * self.frequency
    }
}

/// Parameters of the interacting-particle model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Spatial dimension of one particle.
    pub d: usize,
    /// Particle count.
    pub n: usize,
    /// Quadratic interaction strength `lambda >= 0`.
    pub lambda: f64,
    /// Optional bounded perturbation of `V`.
    pub perturbation: Option<Perturbation>,
}

impl ModelParams {
    /// Pure quadratic model: `V = |x|^2/2`, `W = lambda*|x|^2/2`.
    pub fn quadratic(d: usize, n: usize, lambda: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("spatial dimension d must be >= 1"));
        }
        if n < 2 {
            return Err(Error::invalid("particle count N must be >= 2"));
        }
        if !(lambda >= 0.0) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(ModelParams {
            d,
            n,
            lambda,
            perturbation: None,
        })
    }

    /// Add a cosine perturbation to the confinement.
    pub fn with_perturbation(mut self, amplitude: f64, frequency: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !frequency.is_finite() {
            return Err(Error::invalid("perturbation amplitude must be >= 0 and frequency finite"));
        }
        self.perturbation = if amplitude == 0.0 {
            None
        } else {
            Some(Perturbation {
                amplitude,
                frequency,
            })
        };
        Ok(self)
    }

    pub fn is_quadratic(&self) -> bool {
        self.perturbation.is_none()
    }

    /// Uniform convexity constant of `V_0 = |x|^2/2`.
    pub fn alpha_v0(&self) -> f64 {
        1.0
    }

    /// Uniform convexity constant of `W_0 = lambda*|x|^2/2`.
    pub fn alpha_w0(&self) -> f64 {
        self.lambda
    }

    /// Smoothness constant of `grad W`; equals `lambda` for the quadratic family.
    pub fn beta_w(&self) -> f64 {
        self.lambda
    }

    /// Oscillation of the confinement perturbation.
    pub fn osc_v1(&self) -> f64 {
        self.perturbation.map_or(0.0, |p| p.osc())
    }

    /// Oscillation of the interaction perturbation; the interaction is kept
    /// exactly quadratic, so this is zero.
    pub fn osc_w1(&self) -> f64 {
        0.0
    }

    /// Confinement potential at a single particle position.
    pub fn confinement(&self, x: &[f64]) -> f64 {
        let quad = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
        match self.perturbation {
            Some(p) => quad + p.amplitude * (p.frequency * x[0]).cos(),
            None => quad,
        }
    }

    /// Gradient of the confinement, written into `out`.
    pub fn grad_confinement(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        if let Some(p) = self.perturbation {
            out[0] -= p.amplitude * p.frequency * (p.frequency * x[0]).sin();
        }
    }

    /// Interaction potential of a difference vector.
    pub fn interaction(&self, diff: &[f64]) -> f64 {
        0.5 * self.lambda * diff.iter().map(|v| v * v).sum::<f64>()
    }
}

/// A single `N x d` particle configuration together with its model.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleConfiguration {
    positions: DMatrix<f64>,
    model: ModelParams,
}

impl ParticleConfiguration {
    /// Validates shape (`N x d`) and finiteness of all entries.
    pub fn new(model: ModelParams, positions: DMatrix<f64>) -> Result<Self> {
        if positions.nrows() != model.n {
            return Err(Error::DimensionMismatch {
                expected: model.n,
                got: positions.nrows(),
            });
        }
        if positions.ncols() != model.d {
            return Err(Error::DimensionMismatch {
                expected: model.d,
                got: positions.ncols(),
            });
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("particle positions"));
        }
        Ok(ParticleConfiguration { positions, model })
    }

    pub fn positions(&self) -> &DMatrix<f64> {
        &self.positions
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn particle(&self, i: usize) -> Vec<f64> {
        self.positions.row(i).iter().copied().collect()
    }
}

/// Drift of particle `i` (0-based): `-grad V(x^i) - 1/(N-1) sum_{j != i} grad W(x^i - x^j)`.
pub fn pairwise_drift(config: &ParticleConfiguration, i: usize) -> Result<DVector<f64>> {
    let m = config.model();
    if i >= m.n {
        return Err(Error::IndexOutOfRange { index: i, len: m.n });
    }
    let pos = config.positions();
    let d = m.d;
    let xi: Vec<f64> = pos.row(i).iter().copied().collect();

    let mut drift = vec![0.0; d];
    m.grad_confinement(&xi, &mut drift);
    for v in drift.iter_mut() {
        *v = -*v;
    }

    // grad W(x) = lambda * x, so the interaction drift needs only the sum of
    // differences to the other particles.
    let scale = m.lambda / (m.n - 1) as f64;
    for j in 0..m.n {
        if j == i {
            continue;
        }
        for c in 0..d {
            drift[c] -= scale * (xi[c] - pos[(j, c)]);
        }
    }
    Ok(DVector::from_vec(drift))
}

/// Negative gradient of the full energy, all particles at once (`N x d`).
pub fn drift_matrix(config: &ParticleConfiguration) -> DMatrix<f64> {
    let m = config.model();
    let mut out = DMatrix::zeros(m.n, m.d);
    drift_unchecked(m, config.positions(), &mut out);
    out
}

/// Drift kernel on raw positions, for the sampler's inner loop. `out` must
/// be `N x d`.
pub(crate) fn drift_unchecked(m: &ModelParams, pos: &DMatrix<f64>, out: &mut DMatrix<f64>) {
    let (n, d) = (m.n, m.d);
    // column sums of positions, for the O(N d) quadratic interaction drift
    let mut colsum = vec![0.0; d];
    for j in 0..n {
        for c in 0..d {
            colsum[c] += pos[(j, c)];
        }
    }
    let scale = m.lambda / (n - 1) as f64;
    let mut xi = vec![0.0; d];
    let mut g = vec![0.0; d];
    for i in 0..n {
        for c in 0..d {
            xi[c] = pos[(i, c)];
        }
        m.grad_confinement(&xi, &mut g);
        for c in 0..d {
            // sum_{j != i} (x^i - x^j) = N x^i - colsum
            let inter = scale * (n as f64 * xi[c] - colsum[c]);
            out[(i, c)] = -g[c] - inter;
        }
    }
}

/// Sum after sorting, so the result does not depend on the order the terms
/// arrived in; this makes the public energy ops exactly exchangeable.
fn canonical_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Confinement part of the energy: `sum_i V(x^i)`.
pub fn confinement_energy(config: &ParticleConfiguration) -> f64 {
    let m = config.model();
    let pos = config.positions();
    let mut xi = vec![0.0; m.d];
    let mut terms: Vec<f64> = (0..m.n)
        .map(|i| {
            for c in 0..m.d {
                xi[c] = pos[(i, c)];
            }
            m.confinement(&xi)
        })
        .collect();
    canonical_sum(&mut terms)
}

/// Interaction part of the energy: `1/(2(N-1)) sum_{i != j} W(x^i - x^j)`.
pub fn interaction_energy(config: &ParticleConfiguration) -> f64 {
    let m = config.model();
    if m.lambda == 0.0 {
        return 0.0;
    }
    let pos = config.positions();
    let (n, d) = (m.n, m.d);
    // For quadratic W: sum_{i<j} |x^i - x^j|^2 = N sum_i |x^i|^2 - |sum_i x^i|^2,
    // with every particle reduction in canonical order.
    let mut norms: Vec<f64> = (0..n)
        .map(|i| (0..d).map(|c| pos[(i, c)] * pos[(i, c)]).sum())
        .collect();
    let sq = canonical_sum(&mut norms);
    let mut colsum_sq = 0.0;
    let mut column = vec![0.0; n];
    for c in 0..d {
        for (i, v) in column.iter_mut().enumerate() {
            *v = pos[(i, c)];
        }
        let s = canonical_sum(&mut column);
        colsum_sq += s * s;
    }
    let pair_sq = n as f64 * sq - colsum_sq;
    // 1/(2(N-1)) * sum_{i != j} (lambda/2)|x^i - x^j|^2, with sum_{i != j} = 2 sum_{i<j}
    m.lambda / (2.0 * (n - 1) as f64) * pair_sq
}

/// Energy kernel on raw positions, for the sampler's inner loop. Evaluates
/// the same formula as [`finite_particle_energy`] without the canonical
/// summation order.
pub(crate) fn energy_unchecked(m: &ModelParams, pos: &DMatrix<f64>) -> f64 {
    let mut xi = vec![0.0; m.d];
    let mut total = 0.0;
    for i in 0..m.n {
        for c in 0..m.d {
            xi[c] = pos[(i, c)];
        }
        total += m.confinement(&xi);
    }
    if m.lambda == 0.0 {
        return total;
    }
    let (n, d) = (m.n, m.d);
    let mut sq = 0.0;
    let mut colsum = vec![0.0; d];
    for i in 0..n {
        for c in 0..d {
            let v = pos[(i, c)];
            sq += v * v;
            colsum[c] += v;
        }
    }
    let pair_sq = n as f64 * sq - colsum.iter().map(|v| v * v).sum::<f64>();
    total + m.lambda / (2.0 * (n - 1) as f64) * pair_sq
}

/// Energy exponent of the stationary measure, up to an additive constant:
/// `sum_i V(x^i) + 1/(2(N-1)) sum_{i != j} W(x^i - x^j)`.
///
/// Exactly invariant under particle relabeling.
pub fn finite_particle_energy(config: &ParticleConfiguration) -> Result<f64> {
    let e = confinement_energy(config) + interaction_energy(config);
    if !e.is_finite() {
        return Err(Error::NonFinite("particle energy"));
    }
    Ok(e)
}

/// Mismatch between `candidate`'s natural parameters and those of the
/// self-consistency map `exp(-V - W * candidate)`, for the quadratic model.
///
/// Returns `|P - (1+lambda) I|_F + |P m - lambda m|` where `P`, `m` are the
/// candidate's precision and mean; zero iff the candidate is the fixed point
/// `N(0, I/(1+lambda))`.
pub fn mean_field_residual(candidate: &GaussianSpec, model: &ModelParams) -> Result<f64> {
    if !model.is_quadratic() {
        return Err(Error::PerturbedModel("mean_field_residual"));
    }
    if candidate.dim() != model.d {
        return Err(Error::DimensionMismatch {
            expected: model.d,
            got: candidate.dim(),
        });
    }
    let precision = candidate.precision_dense()?;
    let d = model.d;
    let target = 1.0 + model.lambda;

    let mut frob = 0.0;
    for r in 0..d {
        for c in 0..d {
            let want = if r == c { target } else { 0.0 };
            let diff = precision[(r, c)] - want;
            frob += diff * diff;
        }
    }
    let mean = candidate.mean();
    let shift = &precision * mean - model.lambda * mean;
    Ok(frob.sqrt() + shift.norm())
}
