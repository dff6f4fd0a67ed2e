//! Problem suite: everything the tracker needs is an objective evaluation
//! J(θ) and its per-objective gradients ∇J(θ). Analytic problems with known
//! fronts make every tracking property checkable exactly; the tabular MOMDP
//! grounds the same interface in sequential decision making. An RL trainer
//! would plug in behind the same trait.

mod momdp;
mod synthetic;

pub use momdp::{TabularMomdp, TabularMomdpSpec};
pub use synthetic::{BiQuadratic, ConcaveGap};

use crate::error::Result;
use crate::types::{GradientMatrix, ObjectiveVector, PolicyParams};

/// A multi-objective problem: the gradient backend of the tracker.
///
/// Implementations must keep `evaluate` and `gradient` consistent (finite
/// differences of the former reproduce the latter) and be immutable: both
/// operations are pure, so problems can be shared across concurrent tracks.
pub trait Problem: Send + Sync {
    /// Number of objectives m ≥ 2.
    fn objectives(&self) -> usize;

    /// Parameter dimension d ≥ 1.
    fn dim(&self) -> usize;

    /// True when every objective is guaranteed non-negative over the
    /// initialization box.
    fn nonnegative(&self) -> bool;

    /// Per-dimension (lo, hi) box for seeded random initialization.
    fn init_bounds(&self) -> (Vec<f64>, Vec<f64>);

    /// J(θ).
    fn evaluate(&self, theta: &PolicyParams) -> Result<ObjectiveVector>;

    /// ∇J(θ), one row per objective.
    fn gradient(&self, theta: &PolicyParams) -> Result<GradientMatrix>;
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::types::lex_cmp;

    /// Central finite differences of `evaluate`, the oracle for gradients.
    pub fn finite_difference_gradient<P: Problem + ?Sized>(
        problem: &P,
        theta: &PolicyParams,
        h: f64,
    ) -> Vec<Vec<f64>> {
        let d = theta.dim();
        let m = problem.objectives();
        let mut rows = vec![vec![0.0; d]; m];
        for j in 0..d {
            let mut plus = theta.values().to_vec();
            let mut minus = theta.values().to_vec();
            plus[j] += h;
            minus[j] -= h;
            let jp = problem
                .evaluate(&PolicyParams::new(plus).unwrap())
                .unwrap();
            let jm = problem
                .evaluate(&PolicyParams::new(minus).unwrap())
                .unwrap();
            for i in 0..m {
                rows[i][j] = (jp.values()[i] - jm.values()[i]) / (2.0 * h);
            }
        }
        rows
    }

    pub fn assert_gradient_matches_fd<P: Problem + ?Sized>(problem: &P, theta: &PolicyParams) {
        let analytic = problem.gradient(theta).unwrap();
        let fd = finite_difference_gradient(problem, theta, 1e-5);
        for i in 0..problem.objectives() {
            let row = analytic.row(i);
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let tol = (1e-4_f64).max(1e-3 * norm);
            for (a, b) in row.iter().zip(&fd[i]) {
                assert!(
                    (a - b).abs() <= tol,
                    "gradient row {i}: analytic {a} vs fd {b} (tol {tol})"
                );
            }
        }
    }

    pub fn sorted_by_lex(mut points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        points.sort_by(|a, b| lex_cmp(a, b));
        points
    }
}
