//! Metropolis-adjusted Langevin sampling of the finite-particle stationary
//! measure, and the mean-field fixed point for perturbed one-dimensional
//! models.
//!
//! The accept/reject step makes the chain exactly stationary for the Gibbs
//! measure, so long-run statistics can be compared against closed-form
//! covariances without step-size bias. Proposal noise at step `s` of chain
//! `c` is drawn from a stream keyed by `(master_seed, c, s)`; results do not
//! depend on how chains are scheduled.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{Covariance, GaussianSpec};
use crate::model::{self, ModelParams, ParticleConfiguration};
use crate::rng::CounterRng;

/// Dual-averaging target acceptance rate for MALA.
pub const TARGET_ACCEPTANCE: f64 = 0.574;

const INIT_TAG: u64 = 0x6d61_6c61_5f69; // "mala_i"
const STEP_TAG: u64 = 0x6d61_6c61_5f73; // "mala_s"

/// Chain configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Langevin step `h > 0` (initial value when adaptation is on).
    pub step_size: f64,
    /// Steps discarded before sampling; adaptation happens here.
    pub burn_in: usize,
    /// Keep every `thinning`-th post-burn-in state.
    pub thinning: usize,
    /// Independent chains.
    pub chains: usize,
    /// Post-burn-in steps per chain.
    pub steps: usize,
    pub master_seed: u64,
    /// Dual-averaging step adaptation during burn-in, frozen afterwards.
    pub adapt: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            step_size: 0.1,
            burn_in: 10_000,
            thinning: 10,
            chains: 4,
            steps: 50_000,
            master_seed: 0,
            adapt: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("step_size must be positive and finite"));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning must be >= 1"));
        }
        if self.chains == 0 {
            return Err(Error::invalid("chains must be >= 1"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps must be >= 1"));
        }
        Ok(())
    }
}

/// Per-chain diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainStats {
    /// Acceptance rate over the post-burn-in phase.
    pub acceptance: f64,
    /// Snapshots kept from this chain.
    pub kept: usize,
    /// Step size in effect after adaptation.
    pub step_size: f64,
}

/// Where an ensemble came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub master_seed: u64,
    pub config_hash: u64,
}

/// Thinned post-burn-in snapshots from independent MALA chains, chain-major.
#[derive(Clone, Debug)]
pub struct ParticleEnsemble {
    model: ModelParams,
    snapshots: Vec<DMatrix<f64>>,
    chain_stats: Vec<ChainStats>,
    provenance: Provenance,
}

impl ParticleEnsemble {
    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[DMatrix<f64>] {
        &self.snapshots
    }

    pub fn snapshot(&self, i: usize) -> Result<ParticleConfiguration> {
        let m = self
            .snapshots
            .get(i)
            .ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.snapshots.len(),
            })?
            .clone();
        ParticleConfiguration::new(self.model, m)
    }

    pub fn chain_stats(&self) -> &[ChainStats] {
        &self.chain_stats
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Rows of samples of one particle's position, `len() x d`.
    pub fn particle_rows(&self, particle: usize) -> Result<DMatrix<f64>> {
        if particle >= self.model.n {
            return Err(Error::IndexOutOfRange {
                index: particle,
                len: self.model.n,
            });
        }
        let d = self.model.d;
        let mut out = DMatrix::zeros(self.snapshots.len(), d);
        for (r, snap) in self.snapshots.iter().enumerate() {
            for c in 0..d {
                out[(r, c)] = snap[(particle, c)];
            }
        }
        Ok(out)
    }

    /// Samples of the first particle, the `k = 1` marginal.
    pub fn first_particle_rows(&self) -> DMatrix<f64> {
        self.particle_rows(0).expect("particle 0 always exists")
    }
}

/// Nesterov dual averaging toward a target acceptance rate
/// (Hoffman-Gelman schedule).
struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_stat: f64,
    m: f64,
    target: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(h0: f64, target: f64) -> Self {
        DualAveraging {
            mu: (10.0 * h0).ln(),
            log_eps: h0.ln(),
            log_eps_bar: h0.ln(),
            h_stat: 0.0,
            m: 0.0,
            target,
        }
    }

    fn update(&mut self, alpha: f64) {
        self.m += 1.0;
        let w = 1.0 / (self.m + Self::T0);
        self.h_stat = (1.0 - w) * self.h_stat + w * (self.target - alpha);
        self.log_eps = (self.mu - self.m.sqrt() / Self::GAMMA * self.h_stat).clamp(-23.0, 7.0);
        let eta = self.m.powf(-Self::KAPPA);
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar;
    }

    fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    fn adapted(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn config_hash(model: &ModelParams, cfg: &SamplerConfig) -> u64 {
    let mut bytes = Vec::with_capacity(128);
    bytes.extend(model.d.to_le_bytes());
    bytes.extend(model.n.to_le_bytes());
    bytes.extend(model.lambda.to_bits().to_le_bytes());
    if let Some(p) = model.perturbation {
        bytes.extend(p.amplitude.to_bits().to_le_bytes());
        bytes.extend(p.frequency.to_bits().to_le_bytes());
    }
    bytes.extend(cfg.step_size.to_bits().to_le_bytes());
    bytes.extend(cfg.burn_in.to_le_bytes());
    bytes.extend(cfg.thinning.to_le_bytes());
    bytes.extend(cfg.chains.to_le_bytes());
    bytes.extend(cfg.steps.to_le_bytes());
    bytes.extend(cfg.master_seed.to_le_bytes());
    bytes.push(cfg.adapt as u8);
    fnv1a(&bytes)
}

/// Run independent MALA chains targeting the stationary measure exactly.
///
/// Deterministic given `master_seed`, chain count and step schedule;
/// identical results under any chain scheduling.
pub fn mala_sample(model: &ModelParams, cfg: &SamplerConfig) -> Result<ParticleEnsemble> {
    cfg.validate()?;
    let per_chain: Vec<(Vec<DMatrix<f64>>, ChainStats)> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| run_chain(model, cfg, chain))
        .collect::<Result<Vec<_>>>()?;

    let mut snapshots = Vec::new();
    let mut chain_stats = Vec::with_capacity(cfg.chains);
    for (snaps, stats) in per_chain {
        snapshots.extend(snaps);
        chain_stats.push(stats);
    }
    Ok(ParticleEnsemble {
        model: *model,
        snapshots,
        chain_stats,
        provenance: Provenance {
            master_seed: cfg.master_seed,
            config_hash: config_hash(model, cfg),
        },
    })
}

fn run_chain(
    model: &ModelParams,
    cfg: &SamplerConfig,
    chain: usize,
) -> Result<(Vec<DMatrix<f64>>, ChainStats)> {
    let (n, d) = (model.n, model.d);
    let mut init = CounterRng::keyed(&[INIT_TAG, cfg.master_seed, chain as u64]);
    let mut x = DMatrix::from_fn(n, d, |_, _| init.next_standard_normal());
    let mut y = DMatrix::zeros(n, d);
    let mut drift_x = DMatrix::zeros(n, d);
    let mut drift_y = DMatrix::zeros(n, d);

    let mut e_x = model::energy_unchecked(model, &x);
    model::drift_unchecked(model, &x, &mut drift_x);

    let mut h = cfg.step_size;
    let mut da = DualAveraging::new(cfg.step_size, TARGET_ACCEPTANCE);
    let mut accepted = 0usize;
    let mut kept = Vec::with_capacity(cfg.steps / cfg.thinning + 1);

    let total = cfg.burn_in + cfg.steps;
    for s in 0..total {
        let mut rng = CounterRng::keyed(&[STEP_TAG, cfg.master_seed, chain as u64, s as u64]);
        let sqrt_2h = (2.0 * h).sqrt();
        for r in 0..n {
            for c in 0..d {
                y[(r, c)] = x[(r, c)] + h * drift_x[(r, c)] + sqrt_2h * rng.next_standard_normal();
            }
        }
        let e_y = model::energy_unchecked(model, &y);
        if !e_y.is_finite() {
            return Err(Error::ChainDiverged { chain, step: s });
        }
        model::drift_unchecked(model, &y, &mut drift_y);

        // log alpha = E(x) - E(y) + (|y - x - h b(x)|^2 - |x - y - h b(y)|^2) / 4h
        let mut fwd = 0.0;
        let mut bwd = 0.0;
        for r in 0..n {
            for c in 0..d {
                let f = y[(r, c)] - x[(r, c)] - h * drift_x[(r, c)];
                let b = x[(r, c)] - y[(r, c)] - h * drift_y[(r, c)];
                fwd += f * f;
                bwd += b * b;
            }
        }
        let log_alpha = e_x - e_y + (fwd - bwd) / (4.0 * h);
        let alpha = log_alpha.min(0.0).exp();
        if rng.next_f64() < alpha {
            std::mem::swap(&mut x, &mut y);
            std::mem::swap(&mut drift_x, &mut drift_y);
            e_x = e_y;
            if s >= cfg.burn_in {
                accepted += 1;
            }
        }

        if s < cfg.burn_in {
            if cfg.adapt {
                da.update(alpha);
                h = da.current();
            }
            if s + 1 == cfg.burn_in && cfg.adapt {
                h = da.adapted();
            }
        } else if (s - cfg.burn_in + 1) % cfg.thinning == 0 {
            kept.push(x.clone());
        }
    }

    let acceptance = accepted as f64 / cfg.steps as f64;
    if acceptance < 0.05 {
        return Err(Error::LowAcceptance {
            chain,
            rate: acceptance,
            step_size: h,
        });
    }
    let stats = ChainStats {
        acceptance,
        kept: kept.len(),
        step_size: h,
    };
    Ok((kept, stats))
}

/// Gridded density returned by the perturbed mean-field solver.
#[derive(Clone, Debug)]
pub struct GridDensity {
    pub xs: Vec<f64>,
    /// Density values, trapezoid-normalized on `xs`.
    pub density: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub iterations: usize,
    /// Sup-norm of `p - T p` at the returned density, where `T` is the
    /// self-consistency map. Equals (successive-iterate gap)/damping at the
    /// stopping step.
    pub residual: f64,
}

/// Output of [`mean_field_fixed_point`]: closed form for quadratic models, a
/// gridded density otherwise.
#[derive(Clone, Debug)]
pub enum MeanFieldSolution {
    Gaussian(GaussianSpec),
    Grid(GridDensity),
}

impl MeanFieldSolution {
    pub fn gaussian(&self) -> Option<&GaussianSpec> {
        match self {
            MeanFieldSolution::Gaussian(g) => Some(g),
            MeanFieldSolution::Grid(_) => None,
        }
    }

    pub fn grid(&self) -> Option<&GridDensity> {
        match self {
            MeanFieldSolution::Grid(g) => Some(g),
            MeanFieldSolution::Gaussian(_) => None,
        }
    }
}

const GRID_POINTS: usize = 4096;
const GRID_HALF_WIDTH_SIGMAS: f64 = 8.0;

/// Solve the mean-field self-consistency equation.
///
/// Quadratic models return `N(0, I_d/(1+lambda))` immediately. Perturbed
/// one-dimensional models iterate the damped self-consistency map on a
/// quadrature grid until successive iterates differ by at most `tol` in sup
/// norm.
pub fn mean_field_fixed_point(
    model: &ModelParams,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MeanFieldSolution> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::invalid("damping must lie in (0, 1]"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be > 0"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be >= 1"));
    }

    if model.is_quadratic() {
        let cov = Covariance::scalar(model.d, 1.0 / (1.0 + model.lambda))?;
        return Ok(MeanFieldSolution::Gaussian(GaussianSpec::centered(cov)?));
    }
    if model.d != 1 {
        return Err(Error::invalid(
            "perturbed mean-field solver supports d = 1 only",
        ));
    }

    let lambda = model.lambda;
    let sigma = 1.0 / (1.0 + lambda).sqrt();
    let half = GRID_HALF_WIDTH_SIGMAS * sigma;
    let m = GRID_POINTS;
    let step = 2.0 * half / (m - 1) as f64;
    let xs: Vec<f64> = (0..m).map(|i| -half + i as f64 * step).collect();
    let weights: Vec<f64> = (0..m)
        .map(|i| if i == 0 || i == m - 1 { step / 2.0 } else { step })
        .collect();

    let normalize = |p: &mut [f64]| {
        let z: f64 = p.iter().zip(&weights).map(|(v, w)| v * w).sum();
        for v in p.iter_mut() {
            *v /= z;
        }
    };
    let mean_of = |p: &[f64]| -> f64 {
        p.iter()
            .zip(&xs)
            .zip(&weights)
            .map(|((v, x), w)| v * x * w)
            .sum()
    };
    // self-consistency map for quadratic W: only the first moment enters
    let apply_map = |p: &[f64], out: &mut Vec<f64>| {
        let mean = mean_of(p);
        out.clear();
        let exponents: Vec<f64> = xs
            .iter()
            .map(|&x| -(model.confinement(&[x]) + 0.5 * lambda * x * x - lambda * mean * x))
            .collect();
        let peak = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.extend(exponents.iter().map(|e| (e - peak).exp()));
        normalize(out);
    };

    // start from the unperturbed Gaussian
    let mut p: Vec<f64> = xs
        .iter()
        .map(|&x| (-(1.0 + lambda) * x * x / 2.0).exp())
        .collect();
    normalize(&mut p);

    let mut mapped = Vec::with_capacity(m);
    let mut last_gap = f64::INFINITY;
    for it in 0..max_iter {
        apply_map(&p, &mut mapped);
        let mut gap = 0.0f64;
        for (pi, ti) in p.iter_mut().zip(&mapped) {
            let next = (1.0 - damping) * *pi + damping * ti;
            gap = gap.max((next - *pi).abs());
            *pi = next;
        }
        normalize(&mut p);
        last_gap = gap;
        if gap <= tol {
            apply_map(&p, &mut mapped);
            let residual = p
                .iter()
                .zip(&mapped)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let mean = mean_of(&p);
            let second: f64 = p
                .iter()
                .zip(&xs)
                .zip(&weights)
                .map(|((v, x), w)| v * x * x * w)
                .sum();
            return Ok(MeanFieldSolution::Grid(GridDensity {
                xs,
                density: p,
                mean,
                variance: second - mean * mean,
                iterations: it + 1,
                residual,
            }));
        }
    }
    Err(Error::NoConvergence {
        max_iter,
        residual: last_gap,
    })
}
