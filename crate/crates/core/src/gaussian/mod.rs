//! Exact closed-form computations for the exchangeable Gaussian model:
//! stationary covariances, marginals, conditionals, Renyi/KL/W2/Fisher
//! functionals, existence thresholds and the large-N coefficient.

mod divergence;
mod exchangeable;
mod spec;

pub use divergence::{
    asymptotic_coefficient, fisher_functionals, kl_gaussian, renyi_existence_threshold,
    renyi_gaussian, tilted_gaussian, w2_bures, Divergence, RenyiOrder, KL_REDIRECT_WINDOW,
};
pub use exchangeable::{
    mean_field_gaussian, mean_field_product, stationary_exchangeable_gaussian,
    ExchangeableGaussian,
};
pub use spec::{Covariance, GaussianSpec};
