use nalgebra::Cholesky;

use super::AgentError;
use crate::environment::{Matrix, Vector};

/// Per-edge ridge regression statistics for LinUCB, starting from `A = I`, `b = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState {
    pub a_matrix: Matrix,
    pub b_vector: Vector,
}

impl RidgeState {
    pub fn new(d: usize) -> Self {
        Self { a_matrix: Matrix::identity(d, d), b_vector: Vector::zeros(d) }
    }

    fn factor(&self) -> Result<Cholesky<f64, nalgebra::Dyn>, AgentError> {
        Cholesky::new(self.a_matrix.clone()).ok_or(AgentError::NumericalFailure)
    }

    /// `A^-1 b`, via a Cholesky solve.
    pub fn estimate(&self) -> Result<Vector, AgentError> {
        Ok(self.factor()?.solve(&self.b_vector))
    }

    pub fn update(&mut self, context: &Vector, observed_weight: f64, noise_var: f64) -> Result<(), AgentError> {
        if noise_var.is_nan() || noise_var <= 0.0 {
            return Err(AgentError::InvalidNoiseVar(noise_var));
        }
        self.a_matrix += (context * context.transpose()) / noise_var;
        self.b_vector += context * (observed_weight / noise_var);
        Ok(())
    }
}

/// LinUCB weight for a loss: the ridge estimate minus `alpha` times the
/// confidence width `sqrt(c^T A^-1 c)`.
pub fn lin_ucb_edge_weight(state: &RidgeState, context: &Vector, alpha: f64) -> Result<f64, AgentError> {
    let chol = state.factor()?;
    let theta = chol.solve(&state.b_vector);
    let width = context.dot(&chol.solve(context)).max(0.0).sqrt();
    Ok(theta.dot(context) - alpha * width)
}

pub fn lin_ucb_update(
    state: &RidgeState,
    context: &Vector,
    observed_weight: f64,
    noise_var: f64,
) -> Result<RidgeState, AgentError> {
    let mut next = state.clone();
    next.update(context, observed_weight, noise_var)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn fresh_state_is_negative_scaled_norm() {
        let state = RidgeState::new(3);
        let c = v(&[1.0, 2.0, 2.0]);
        let w = lin_ucb_edge_weight(&state, &c, 4.0).unwrap();
        assert!((w + 12.0).abs() < 1e-12);
    }

    #[test]
    fn zero_alpha_is_point_estimate() {
        let state = lin_ucb_update(&RidgeState::new(2), &v(&[1.0, 0.5]), 3.0, 1.0).unwrap();
        let c = v(&[0.2, 0.7]);
        let w = lin_ucb_edge_weight(&state, &c, 0.0).unwrap();
        assert!((w - state.estimate().unwrap().dot(&c)).abs() < 1e-14);
    }

    #[test]
    fn scalar_update_hand_computation() {
        let state = lin_ucb_update(&RidgeState::new(1), &v(&[1.0]), 2.0, 1.0).unwrap();
        assert_eq!(state.a_matrix[(0, 0)], 2.0);
        assert_eq!(state.b_vector[0], 2.0);
        assert!((state.estimate().unwrap()[0] - 1.0).abs() < 1e-15);
        let w = lin_ucb_edge_weight(&state, &v(&[1.0]), 4.0).unwrap();
        assert!((w - (1.0 - 4.0 * 0.5f64.sqrt())).abs() < 1e-12);
        assert!((w + 1.828_427_1).abs() < 1e-7);
    }

    #[test]
    fn zero_context_update_is_noop() {
        let state = lin_ucb_update(&RidgeState::new(2), &v(&[1.0, 0.5]), 3.0, 1.0).unwrap();
        let next = lin_ucb_update(&state, &v(&[0.0, 0.0]), 9.0, 1.0).unwrap();
        assert_eq!(next, state);
    }

    #[test]
    fn a_matrix_dominates_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = RidgeState::new(4);
        for _ in 0..500 {
            let c = Vector::from_fn(4, |_, _| rng.random_range(-20.0..20.0));
            state.update(&c, rng.random_range(-5.0..5.0), rng.random_range(0.5..2.0)).unwrap();
            assert_eq!(state.a_matrix, state.a_matrix.transpose());
        }
        let min_eig = SymmetricEigen::new(state.a_matrix.clone()).eigenvalues.min();
        assert!(min_eig >= 1.0 - 1e-9, "{min_eig}");
    }
}
