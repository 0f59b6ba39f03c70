//! Independent oracles for the closed-form Gaussian functionals: dense
//! linear algebra, one-dimensional quadrature, Monte-Carlo expectations, and
//! a second algebraic route through the explicit eigenvalue formula.

use approx::assert_relative_eq;
use mflab_core::gaussian::{
    fisher_functionals, kl_gaussian, mean_field_product, renyi_gaussian,
    stationary_exchangeable_gaussian, tilted_gaussian, w2_bures, Covariance, GaussianSpec,
    RenyiOrder,
};
use mflab_core::model::ModelParams;
use mflab_core::rng::CounterRng;
use nalgebra::DMatrix;

fn scalar_gaussian(dim: usize, var: f64) -> GaussianSpec {
    GaussianSpec::centered(Covariance::scalar(dim, var).unwrap()).unwrap()
}

/// Explicit reduced form of the model Renyi divergence: a second algebraic
/// route through the two precision eigenvalues.
fn renyi_reduced_form(lambda: f64, n: usize, k: usize, d: usize, q: f64) -> f64 {
    let nf = n as f64;
    let kf = k as f64;
    let rho = 1.0 + lambda * nf / (nf - 1.0);
    let one_l = 1.0 + lambda;
    let bulge = 1.0 + lambda * kf / (nf - 1.0);
    let t = q * kf * rho.ln() - q * bulge.ln() + (1.0 - q) * kf * one_l.ln()
        - (kf - 1.0) * ((1.0 - q) * one_l + rho * q).ln()
        - ((1.0 - q) * one_l + rho * q / bulge).ln();
    d as f64 / (2.0 * (q - 1.0)) * t
}

#[test]
fn renyi_matches_reduced_form() {
    for (lambda, n, k, d, q) in [
        (1.0, 3, 1, 1, 2.0),
        (1.0, 8, 2, 2, 2.0),
        (0.5, 16, 3, 2, 1.7),
        (2.0, 32, 2, 3, 3.0),
        (1.3, 100, 3, 4, 2.5),
    ] {
        let model = ModelParams::quadratic(d, n, lambda).unwrap();
        let g = stationary_exchangeable_gaussian(&model).unwrap();
        let mu = g.marginal_covariance(k).unwrap();
        let pi = mean_field_product(&model, k).unwrap();
        let r = renyi_gaussian(&mu, &pi, RenyiOrder::new(q).unwrap())
            .unwrap()
            .expect_finite();
        let reduced = renyi_reduced_form(lambda, n, k, d, q);
        assert_relative_eq!(r, reduced, max_relative = 1e-12, epsilon = 1e-15);
    }
}

#[test]
fn renyi_matches_dense_logdet_oracle() {
    // evaluate the log-det formula on the dense (dk x dk) matrices
    for (lambda, n, k, d, q) in [(1.0, 6, 3, 2, 2.0), (0.8, 10, 4, 2, 1.5), (1.7, 20, 5, 3, 2.8)] {
        let model = ModelParams::quadratic(d, n, lambda).unwrap();
        let g = stationary_exchangeable_gaussian(&model).unwrap();
        let mu = g.marginal_covariance(k).unwrap();
        let pi = mean_field_product(&model, k).unwrap();

        let s1 = mu.covariance().to_dense();
        let s2 = pi.covariance().to_dense();
        let inv1 = s1.clone().try_inverse().unwrap();
        let inv2 = s2.clone().try_inverse().unwrap();
        let tilt = q * inv1 + (1.0 - q) * inv2;
        let ld = |m: &DMatrix<f64>| m.determinant().ln();
        let dense = (-q * ld(&s1) - (1.0 - q) * ld(&s2) - ld(&tilt)) / (2.0 * (q - 1.0));

        let fast = renyi_gaussian(&mu, &pi, RenyiOrder::new(q).unwrap())
            .unwrap()
            .expect_finite();
        assert_relative_eq!(fast, dense, max_relative = 1e-10);
    }
}

#[test]
fn renyi_quadrature_oracle_one_dimensional() {
    // E_nu (dmu/dnu)^2 by trapezoid quadrature; R_2 = log of it
    let (v1, v2) = (1.2f64, 1.0f64);
    let m = 400_001;
    let half = 20.0;
    let step = 2.0 * half / (m - 1) as f64;
    let mut acc = 0.0;
    for i in 0..m {
        let x = -half + i as f64 * step;
        let p_mu = (-x * x / (2.0 * v1)).exp() / (2.0 * std::f64::consts::PI * v1).sqrt();
        let p_nu = (-x * x / (2.0 * v2)).exp() / (2.0 * std::f64::consts::PI * v2).sqrt();
        let w = if i == 0 || i == m - 1 { step / 2.0 } else { step };
        acc += w * p_mu * p_mu / p_nu;
    }
    let oracle = acc.ln();
    let r = renyi_gaussian(
        &scalar_gaussian(1, v1),
        &scalar_gaussian(1, v2),
        RenyiOrder::new(2.0).unwrap(),
    )
    .unwrap()
    .expect_finite();
    assert_relative_eq!(r, oracle, max_relative = 1e-8);
}

#[test]
fn fisher_monte_carlo_oracle() {
    // FI = E_mu |M x|^2 and RFI_q = q E_P |M x|^2 with M = S1^-1 - S2^-1
    let (v1, v2, q) = (1.2f64, 1.0f64, 2.0f64);
    let m = 1.0 / v1 - 1.0 / v2;
    let tilt_var = 1.0 / (q / v1 + (1.0 - q) / v2);
    let n = 1_000_000;
    let mut rng = CounterRng::new(314);
    let (mut fi_acc, mut rfi_acc) = (0.0, 0.0);
    for _ in 0..n {
        let x_mu = v1.sqrt() * rng.next_standard_normal();
        let x_p = tilt_var.sqrt() * rng.next_standard_normal();
        fi_acc += (m * x_mu) * (m * x_mu);
        rfi_acc += (m * x_p) * (m * x_p);
    }
    let fi_mc = fi_acc / n as f64;
    let rfi_mc = q * rfi_acc / n as f64;

    let (fi, rfi) = fisher_functionals(&scalar_gaussian(1, v1), &scalar_gaussian(1, v2), q).unwrap();
    assert_relative_eq!(fi, 0.033333, epsilon = 1e-5);
    assert_relative_eq!(rfi, 0.083333, epsilon = 1e-5);
    assert_relative_eq!(fi, fi_mc, max_relative = 0.02);
    assert_relative_eq!(rfi, rfi_mc, max_relative = 0.02);
}

#[test]
fn tilted_measure_is_normalized_renyi_weight() {
    // the tilt of the model marginal against the product reference stays in
    // the block family and matches the dense computation
    let model = ModelParams::quadratic(2, 7, 1.2).unwrap();
    let g = stationary_exchangeable_gaussian(&model).unwrap();
    let mu = g.marginal_covariance(3).unwrap();
    let pi = mean_field_product(&model, 3).unwrap();
    let tilted = tilted_gaussian(&mu, &pi, 2.0).unwrap();

    let inv1 = mu.covariance().to_dense().try_inverse().unwrap();
    let inv2 = pi.covariance().to_dense().try_inverse().unwrap();
    let dense_tilt_cov = (2.0 * inv1 - inv2).try_inverse().unwrap();
    assert_relative_eq!(
        (tilted.covariance().to_dense() - dense_tilt_cov).norm(),
        0.0,
        epsilon = 1e-10
    );
}

#[test]
fn w2_commuting_oracle() {
    // simultaneous diagonalization: sqrt(sum (sqrt l1 - sqrt l2)^2)
    let model = ModelParams::quadratic(2, 5, 0.9).unwrap();
    let g = stationary_exchangeable_gaussian(&model).unwrap();
    let mu = g.marginal_covariance(2).unwrap();
    let pi = mean_field_product(&model, 2).unwrap();
    let w = w2_bures(&mu, &pi).unwrap();

    let e1 = mu.covariance().eigen_multiplicities();
    let s2 = 1.0f64 / 1.9;
    let oracle: f64 = e1
        .iter()
        .map(|(e, m)| *m as f64 * (e.sqrt() - s2.sqrt()).powi(2))
        .sum::<f64>()
        .sqrt();
    assert_relative_eq!(w, oracle, max_relative = 1e-12);
}

#[test]
fn w2_quantile_oracle_with_means() {
    // 1-d with means: W2^2 = (m1-m2)^2 + (s1-s2)^2
    let a = GaussianSpec::new(
        nalgebra::DVector::from_vec(vec![1.0]),
        Covariance::scalar(1, 4.0).unwrap(),
    )
    .unwrap();
    let b = GaussianSpec::new(
        nalgebra::DVector::from_vec(vec![-0.5]),
        Covariance::scalar(1, 1.0).unwrap(),
    )
    .unwrap();
    let w = w2_bures(&a, &b).unwrap();
    assert_relative_eq!(w, (1.5f64 * 1.5 + 1.0).sqrt(), epsilon = 1e-12);
}

#[test]
fn talagrand_holds_on_random_pairs() {
    // W2^2 <= 2 lambda_max(S2) KL on 100 random centered pairs
    let mut rng = CounterRng::new(2024);
    for trial in 0..100 {
        let d = 1 + (trial % 4);
        let random_pd = |rng: &mut CounterRng| {
            let a = DMatrix::from_fn(d, d, |_, _| 2.0 * rng.next_f64() - 1.0);
            let m = &a * a.transpose() + DMatrix::identity(d, d) * 0.1;
            Covariance::dense(m).unwrap()
        };
        let mu = GaussianSpec::centered(random_pd(&mut rng)).unwrap();
        let nu = GaussianSpec::centered(random_pd(&mut rng)).unwrap();
        let w = w2_bures(&mu, &nu).unwrap();
        let kl = kl_gaussian(&mu, &nu).unwrap();
        let c = nu.covariance().lambda_max();
        assert!(
            w * w <= 2.0 * c * kl + 1e-9 * (2.0 * c * kl).max(1.0),
            "trial {trial}: W2^2 = {} vs 2 C KL = {}",
            w * w,
            2.0 * c * kl
        );
    }
}

#[test]
fn structured_equals_dense_for_marginal_pairs() {
    // dk <= 50 cross-validation across representations
    let mut rng = CounterRng::new(99);
    for _ in 0..40 {
        let d = 1 + rng.next_index(3);
        let n = 3 + rng.next_index(14);
        let k = 1 + rng.next_index(n.min(50 / d).min(5));
        let lambda = 2.0 * rng.next_f64();
        let q = 1.2 + 1.5 * rng.next_f64();

        let model = ModelParams::quadratic(d, n, lambda).unwrap();
        let g = stationary_exchangeable_gaussian(&model).unwrap();
        let mu = g.marginal_covariance(k).unwrap();
        let pi = mean_field_product(&model, k).unwrap();
        let mu_d =
            GaussianSpec::centered(Covariance::dense(mu.covariance().to_dense()).unwrap()).unwrap();
        let pi_d =
            GaussianSpec::centered(Covariance::dense(pi.covariance().to_dense()).unwrap()).unwrap();

        let order = RenyiOrder::new(q).unwrap();
        let fast = renyi_gaussian(&mu, &pi, order).unwrap();
        let dense = renyi_gaussian(&mu_d, &pi_d, order).unwrap();
        match (fast, dense) {
            (mflab_core::Divergence::Finite(a), mflab_core::Divergence::Finite(b)) => {
                assert_relative_eq!(a, b, max_relative = 1e-10, epsilon = 1e-12);
            }
            (a, b) => assert_eq!(a.is_divergent(), b.is_divergent()),
        }
        assert_relative_eq!(
            kl_gaussian(&mu, &pi).unwrap(),
            kl_gaussian(&mu_d, &pi_d).unwrap(),
            max_relative = 1e-10,
            epsilon = 1e-12
        );
    }
}

#[test]
fn asymptotic_coefficient_matches_large_n_sweep() {
    // N^2 R_q at N = 10^4 within 1% of the coefficient formula
    let (lambda, k, d, q) = (1.0, 1usize, 1usize, 2.0);
    let n = 10_000usize;
    let model = ModelParams::quadratic(d, n, lambda).unwrap();
    let g = stationary_exchangeable_gaussian(&model).unwrap();
    let mu = g.marginal_covariance(k).unwrap();
    let pi = mean_field_product(&model, k).unwrap();
    let r = renyi_gaussian(&mu, &pi, RenyiOrder::new(q).unwrap())
        .unwrap()
        .expect_finite();
    let coeff = mflab_core::gaussian::asymptotic_coefficient(lambda, k, q, d).unwrap();
    let scaled = (n * n) as f64 * r;
    assert!(
        (scaled - coeff).abs() / coeff < 0.01,
        "N^2 R = {scaled} vs coefficient {coeff}"
    );
}

#[test]
fn existence_threshold_is_sharp_on_the_grid() {
    // below the sufficient threshold the tilt can degenerate; above it the
    // value must be finite
    for (lambda, k, q) in [(1.0, 2, 2.0), (2.0, 3, 3.0), (0.7, 1, 4.0)] {
        let thr = mflab_core::gaussian::renyi_existence_threshold(lambda, k, q).unwrap();
        let n_ok = (thr.ceil() as usize + 1).max(k + 1).max(2);
        let model = ModelParams::quadratic(1, n_ok, lambda).unwrap();
        let g = stationary_exchangeable_gaussian(&model).unwrap();
        let mu = g.marginal_covariance(k).unwrap();
        let pi = mean_field_product(&model, k).unwrap();
        let r = renyi_gaussian(&mu, &pi, RenyiOrder::new(q).unwrap()).unwrap();
        assert!(!r.is_divergent(), "expected finite above threshold {thr}");
    }
    // a genuinely divergent configuration: threshold 43 >> N = 8
    let model = ModelParams::quadratic(1, 8, 3.0).unwrap();
    let g = stationary_exchangeable_gaussian(&model).unwrap();
    let mu = g.marginal_covariance(5).unwrap();
    let pi = mean_field_product(&model, 5).unwrap();
    let r = renyi_gaussian(&mu, &pi, RenyiOrder::new(4.0).unwrap()).unwrap();
    assert!(r.is_divergent());
}
