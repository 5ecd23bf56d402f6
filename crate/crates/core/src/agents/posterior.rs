//! Conjugate Gaussian belief over one edge's parameter vector.

use nalgebra::{Cholesky, SymmetricEigen};
use rand::Rng;

use super::quantile::std_normal_quantile;
use super::AgentError;
use crate::environment::{standard_normal_vector, Matrix, Vector};

/// Negative eigenvalues smaller than this fraction of the spectral radius are
/// treated as round-off and clamped during repair.
const REPAIR_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgePosterior {
    pub mean: Vector,
    pub cov: Matrix,
}

pub(crate) fn symmetrize(m: &mut Matrix) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Restores positive definiteness lost to round-off by flooring the spectrum,
/// or fails if the matrix is genuinely indefinite.
fn repair_positive_definite(cov: Matrix) -> Option<Matrix> {
    if Cholesky::new(cov.clone()).is_some() {
        return Some(cov);
    }
    let eigen = SymmetricEigen::new(cov);
    let radius = eigen.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min = eigen.eigenvalues.min();
    if radius == 0.0 || !radius.is_finite() || min < -REPAIR_TOLERANCE * radius {
        return None;
    }
    let floor = radius * f64::EPSILON * eigen.eigenvalues.len() as f64;
    let mut values = eigen.eigenvalues.clone();
    values.iter_mut().for_each(|v| *v = v.max(floor));
    let mut repaired = &eigen.eigenvectors * Matrix::from_diagonal(&values) * eigen.eigenvectors.transpose();
    symmetrize(&mut repaired);
    Cholesky::new(repaired.clone()).map(|_| repaired)
}

impl EdgePosterior {
    pub fn new(mean: Vector, cov: Matrix) -> Self {
        Self { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Rank-one conjugate update after observing `observed_weight` at `context`.
    ///
    /// Equivalent to `cov' = (cov^-1 + c c^T / noise)^-1` and
    /// `mean' = cov' (cov^-1 mean + w c / noise)`, computed through the
    /// Sherman-Morrison identity so no matrix is inverted.
    pub fn update(&self, context: &Vector, observed_weight: f64, noise_var: f64) -> Result<Self, AgentError> {
        if noise_var.is_nan() || noise_var <= 0.0 {
            return Err(AgentError::InvalidNoiseVar(noise_var));
        }
        let gain_dir = &self.cov * context;
        let denom = noise_var + context.dot(&gain_dir);
        let innovation = observed_weight - context.dot(&self.mean);
        let mean = &self.mean + &gain_dir * (innovation / denom);
        let mut cov = &self.cov - (&gain_dir * gain_dir.transpose()) / denom;
        symmetrize(&mut cov);
        let cov = repair_positive_definite(cov).ok_or(AgentError::NumericalFailure)?;
        Ok(Self { mean, cov })
    }

    /// Expected weight under the posterior mean, `c^T mean`.
    pub fn mean_weight(&self, context: &Vector) -> f64 {
        context.dot(&self.mean)
    }

    /// Predictive variance of `c^T theta`, clamped at zero against round-off.
    pub fn weight_variance(&self, context: &Vector) -> f64 {
        context.dot(&(&self.cov * context)).max(0.0)
    }

    /// Draws `theta ~ N(mean, cov)`.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector, AgentError> {
        let chol = Cholesky::new(self.cov.clone()).ok_or(AgentError::NotPositiveDefinite)?;
        Ok(&self.mean + chol.l() * standard_normal_vector(self.dim(), rng))
    }
}

/// Posterior update as a free function over the belief state.
pub fn update_params(
    posterior: &EdgePosterior,
    context: &Vector,
    observed_weight: f64,
    noise_var: f64,
) -> Result<EdgePosterior, AgentError> {
    posterior.update(context, observed_weight, noise_var)
}

/// Thompson sampling weight: `c^T theta` with `theta` freshly drawn from the posterior.
pub fn ts_edge_weight<R: Rng + ?Sized>(posterior: &EdgePosterior, context: &Vector, rng: &mut R) -> Result<f64, AgentError> {
    Ok(context.dot(&posterior.sample_theta(rng)?))
}

/// Quantile level used at round `t`, clamped away from 0 and 1.
pub fn bayes_ucb_level(t: usize, quantile_clip: f64) -> f64 {
    let t = t.max(1) as f64;
    (1.0 - 1.0 / t).clamp(quantile_clip, 1.0 - quantile_clip)
}

/// Optimistic (lower) quantile of the expected weight:
/// `c^T mean - Q(nu) * sqrt(c^T cov c)` with `nu = 1 - 1/t` clamped.
pub fn bayes_ucb_edge_weight(
    posterior: &EdgePosterior,
    context: &Vector,
    t: usize,
    quantile_clip: f64,
) -> Result<f64, AgentError> {
    let q = std_normal_quantile(bayes_ucb_level(t, quantile_clip))?;
    Ok(posterior.mean_weight(context) - q * posterior.weight_variance(context).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn scalar_update_closed_form() {
        let prior = EdgePosterior::new(v(&[0.0]), Matrix::identity(1, 1));
        let post = update_params(&prior, &v(&[1.0]), 2.0, 1.0).unwrap();
        assert!((post.cov[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((post.mean[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_context_leaves_posterior_unchanged() {
        let cov = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let prior = EdgePosterior::new(v(&[1.0, -2.0]), cov);
        let post = update_params(&prior, &v(&[0.0, 0.0]), 17.0, 1.0).unwrap();
        assert_eq!(post, prior);
    }

    #[test]
    fn rejects_non_positive_noise() {
        let prior = EdgePosterior::new(v(&[0.0]), Matrix::identity(1, 1));
        assert!(prior.update(&v(&[1.0]), 1.0, 0.0).is_err());
    }

    #[test]
    fn covariance_stays_symmetric_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut post = EdgePosterior::new(Vector::from_element(4, 1.0), Matrix::identity(4, 4) * 5.0);
        for _ in 0..5000 {
            let c = Vector::from_fn(4, |_, _| rng.random_range(5.0..30.0));
            post = post.update(&c, rng.random_range(-10.0..10.0), 1.0).unwrap();
            assert_eq!(post.cov, post.cov.transpose());
        }
        assert!(Cholesky::new(post.cov.clone()).is_some());
    }

    #[test]
    fn repair_rejects_indefinite() {
        let indefinite = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(repair_positive_definite(indefinite).is_none());
        let nearly = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-14]);
        assert!(repair_positive_definite(nearly).is_some());
    }

    #[test]
    fn degenerate_posterior_sampling() {
        let post = EdgePosterior::new(v(&[0.5, 2.0, -1.0]), Matrix::identity(3, 3) * 1e-12);
        let c = v(&[1.0, 2.0, 3.0]);
        let w = ts_edge_weight(&post, &c, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!((w - post.mean_weight(&c)).abs() < 1e-4);
    }

    #[test]
    fn zero_context_sample_is_exactly_zero() {
        let post = EdgePosterior::new(v(&[0.5, 2.0]), Matrix::identity(2, 2));
        let w = ts_edge_weight(&post, &v(&[0.0, 0.0]), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn sampled_weights_have_projected_moments() {
        let cov = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let post = EdgePosterior::new(v(&[1.0, -1.0]), cov);
        let c = v(&[0.7, 1.3]);
        let mean = post.mean_weight(&c);
        let var = post.weight_variance(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| ts_edge_weight(&post, &c, &mut rng).unwrap()).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let s2 = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m - mean).abs() < 3.0 * (var / n as f64).sqrt(), "{m} vs {mean}");
        assert!((s2 / var - 1.0).abs() < 0.05, "{s2} vs {var}");
    }

    #[test]
    fn bayes_ucb_at_t_two_is_posterior_mean() {
        let post = EdgePosterior::new(v(&[1.0, 2.0]), Matrix::identity(2, 2) * 3.0);
        let c = v(&[0.5, 0.25]);
        assert_eq!(bayes_ucb_edge_weight(&post, &c, 2, 1e-6).unwrap(), post.mean_weight(&c));
    }

    #[test]
    fn bayes_ucb_at_975_level() {
        // t = 40 gives nu = 1 - 1/40 = 0.975.
        let post = EdgePosterior::new(v(&[1.0, 2.0]), Matrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]));
        let c = v(&[1.5, -0.5]);
        let expected = post.mean_weight(&c) - 1.959_963_984_540_054 * post.weight_variance(&c).sqrt();
        let got = bayes_ucb_edge_weight(&post, &c, 40, 1e-6).unwrap();
        assert!((got - expected).abs() < 1e-5 * post.weight_variance(&c).sqrt());
    }

    #[test]
    fn bayes_ucb_clamps_first_round() {
        assert_eq!(bayes_ucb_level(1, 1e-6), 1e-6);
        assert_eq!(bayes_ucb_level(2, 1e-6), 0.5);
        let post = EdgePosterior::new(v(&[1.0]), Matrix::identity(1, 1));
        assert!(bayes_ucb_edge_weight(&post, &v(&[1.0]), 1, 1e-6).unwrap().is_finite());
    }

    #[test]
    fn bayes_ucb_with_vanishing_width() {
        let post = EdgePosterior::new(v(&[1.0, 2.0]), Matrix::identity(2, 2) * 1e-12);
        let c = v(&[0.5, 0.25]);
        for t in [1, 2, 10, 1000] {
            assert!((bayes_ucb_edge_weight(&post, &c, t, 1e-6).unwrap() - 1.0).abs() < 1e-4);
        }
    }
}
