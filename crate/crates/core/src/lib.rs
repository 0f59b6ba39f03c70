//! # mflab-core
//!
//! Numerical laboratory for interacting-particle Gibbs measures and their
//! mean-field limits.
//!
//! The crate is organized around an exchangeable particle system with
//! confinement `V` and pairwise interaction `W`: `N` particles in `R^d`
//! whose stationary law is the Gibbs measure
//!
//! ```text
//! mu(x^{1:N}) ∝ exp( -Σ_i V(x^i) - 1/(2(N-1)) Σ_{i≠j} W(x^i - x^j) )
//! ```
//!
//! For quadratic potentials every quantity of interest has a closed form in
//! a two-parameter family of exchangeable Gaussians, which makes the crate
//! usable as an oracle: sampled estimates, functional-inequality verdicts and
//! scaling sweeps can all be checked against exact values.
//!
//! ## Modules
//!
//! | Module | Provides |
//! |--------|----------|
//! | [`model`] | potentials, drift, energy, mean-field self-consistency |
//! | [`gaussian`] | structured covariances, Renyi/KL/W2/Fisher closed forms |
//! | [`sampler`] | Metropolis-adjusted Langevin chains, mean-field fixed point |
//! | [`divergence`] | plug-in divergence estimation, tail-bound reports |
//! | [`verify`] | LSI certificates, lemma checks, recursion traces |
//! | [`slope`] | log-log slope fitting for scaling sweeps |
//! | [`rng`] | counter-based splittable random streams |

pub mod divergence;
pub mod error;
pub mod gaussian;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod slope;
pub mod verify;

pub use error::{Error, Result};
pub use gaussian::{
    asymptotic_coefficient, fisher_functionals, kl_gaussian, renyi_existence_threshold,
    renyi_gaussian, tilted_gaussian, w2_bures, Covariance, Divergence, ExchangeableGaussian,
    GaussianSpec, RenyiOrder,
};
pub use model::{ModelParams, ParticleConfiguration, Perturbation};
pub use sampler::{MeanFieldSolution, ParticleEnsemble, SamplerConfig};
pub use verify::VerificationReport;
