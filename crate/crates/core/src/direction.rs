//! Min-norm direction solvers: given the per-objective gradient matrix, find
//! the convex combination of gradients with smallest norm. A positive-norm
//! minimizer is the Pareto-ascent direction (all objectives improve equally
//! to first order); constraining one weight to zero gives the Pareto-reverse
//! direction of that objective; a zero minimum means the point is
//! Pareto-stationary.

use crate::error::{MpftError, Result};
use crate::types::{dot, norm2_sq, GradientMatrix, WeightVector};

/// Default stopping tolerance of the projected-gradient solver.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap of the projected-gradient solver.
pub const DEFAULT_MAX_ITERS: usize = 10_000;
/// Framework default threshold for the stationarity test.
pub const DEFAULT_STATIONARY_EPS: f64 = 1e-6;

/// Solution of the min-norm problem over the weight simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionResult {
    /// Minimizing weights α on the simplex.
    pub alpha: WeightVector,
    /// ∇J(θ)ᵀα, length d.
    pub direction: Vec<f64>,
    /// ‖direction‖₂².
    pub squared_norm: f64,
    /// False when the iterative solver hit its iteration cap; the fields
    /// then hold the best iterate.
    pub converged: bool,
}

impl DirectionResult {
    fn from_alpha(matrix: &GradientMatrix, alpha: WeightVector, converged: bool) -> Result<Self> {
        let direction = matrix.weighted_direction(&alpha)?;
        let squared_norm = norm2_sq(&direction);
        Ok(Self {
            alpha,
            direction,
            squared_norm,
            converged,
        })
    }
}

/// Euclidean projection onto the unit simplex {x : x ≥ 0, Σx = 1}.
pub fn project_simplex(v: &[f64]) -> Result<WeightVector> {
    if v.is_empty() {
        return Err(MpftError::Dimension {
            context: "project_simplex",
            expected: 1,
            actual: 0,
        });
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(MpftError::NonFinite("project_simplex input"));
    }
    // Sort-based KKT solve: find the largest prefix of the descending sort
    // with a positive shifted value, then clamp.
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    let projected: Vec<f64> = v.iter().map(|&x| (x - tau).max(0.0)).collect();
    WeightVector::new(projected)
}

/// Analytic min-norm solution for exactly two gradients.
///
/// The minimizer is either orthogonal to g₂ − g₁ or sits at a simplex
/// vertex; identical rows (a zero denominator) fall back to the symmetric
/// weights [0.5, 0.5].
pub fn min_norm_weights_2(matrix: &GradientMatrix) -> Result<DirectionResult> {
    if matrix.objectives() != 2 {
        return Err(MpftError::Dimension {
            context: "min_norm_weights_2",
            expected: 2,
            actual: matrix.objectives(),
        });
    }
    let g1 = matrix.row(0);
    let g2 = matrix.row(1);
    let diff: Vec<f64> = g2.iter().zip(g1).map(|(b, a)| b - a).collect();
    let denom = norm2_sq(&diff);
    let alpha1 = if denom == 0.0 {
        0.5
    } else {
        (dot(&diff, g2) / denom).clamp(0.0, 1.0)
    };
    let alpha = WeightVector::new(vec![alpha1, 1.0 - alpha1])?;
    DirectionResult::from_alpha(matrix, alpha, true)
}

/// Projected gradient descent on f(α) = ‖Gᵀα‖₂² over the simplex, from the
/// uniform start. Exposed separately so the closed form can be checked
/// against it; [`min_norm_weights`] prefers the closed form when m = 2.
pub fn min_norm_weights_pgd(
    matrix: &GradientMatrix,
    tol: f64,
    max_iters: usize,
) -> Result<DirectionResult> {
    if matrix.objectives() < 2 {
        return Err(MpftError::Dimension {
            context: "min_norm_weights",
            expected: 2,
            actual: matrix.objectives(),
        });
    }
    if !(tol > 0.0) {
        return Err(MpftError::Config(format!(
            "min-norm solver tolerance must be positive, got {tol}"
        )));
    }
    let m = matrix.objectives();
    let gram = matrix.gram();
    // trace(GGᵀ) ≥ λ_max, so 1/(2 trace) is a safe Lipschitz step.
    let trace: f64 = (0..m).map(|i| gram[i][i]).sum();
    let mut alpha = vec![1.0 / m as f64; m];
    if trace <= 0.0 {
        // Zero matrix: every weight vector is optimal.
        return DirectionResult::from_alpha(matrix, WeightVector::new(alpha)?, true);
    }
    let step = 1.0 / (2.0 * trace);

    let mut converged = false;
    for _ in 0..max_iters {
        // ∇f = 2 GGᵀ α
        let mut shifted = alpha.clone();
        for i in 0..m {
            let grad_i: f64 = 2.0 * (0..m).map(|j| gram[i][j] * alpha[j]).sum::<f64>();
            shifted[i] -= step * grad_i;
        }
        let next = project_simplex(&shifted)?;
        let moved: f64 = next
            .values()
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        alpha.copy_from_slice(next.values());
        if moved < tol {
            converged = true;
            break;
        }
    }
    DirectionResult::from_alpha(matrix, WeightVector::new(alpha)?, converged)
}

/// Min-norm weights over the simplex. Delegates to the analytic solution for
/// m = 2 and to projected gradient descent otherwise.
pub fn min_norm_weights(
    matrix: &GradientMatrix,
    tol: f64,
    max_iters: usize,
) -> Result<DirectionResult> {
    if matrix.objectives() == 2 {
        min_norm_weights_2(matrix)
    } else {
        min_norm_weights_pgd(matrix, tol, max_iters)
    }
}

/// Pareto-ascent direction: [`min_norm_weights`] at the default tolerances.
pub fn pareto_ascent_direction(matrix: &GradientMatrix) -> Result<DirectionResult> {
    min_norm_weights(matrix, DEFAULT_TOL, DEFAULT_MAX_ITERS)
}

/// Pareto-reverse direction of objective `excluded` (0-based): the min-norm
/// problem with the extra constraint α_excluded = 0, i.e. the direction that
/// improves every objective except the excluded one.
pub fn pareto_reverse_direction(
    matrix: &GradientMatrix,
    excluded: usize,
) -> Result<DirectionResult> {
    let m = matrix.objectives();
    if m < 2 {
        return Err(MpftError::Dimension {
            context: "pareto_reverse_direction",
            expected: 2,
            actual: m,
        });
    }
    if excluded >= m {
        return Err(MpftError::Dimension {
            context: "pareto_reverse_direction excluded index",
            expected: m - 1,
            actual: excluded,
        });
    }

    if m == 2 {
        // Only the other objective remains.
        let other = 1 - excluded;
        let mut weights = vec![0.0; 2];
        weights[other] = 1.0;
        let alpha = WeightVector::new(weights)?;
        return DirectionResult::from_alpha(matrix, alpha, true);
    }

    let kept: Vec<usize> = (0..m).filter(|&j| j != excluded).collect();
    let sub_rows: Vec<Vec<f64>> = kept.iter().map(|&j| matrix.row(j).to_vec()).collect();
    let sub = GradientMatrix::new(sub_rows)?;
    let sub_result = min_norm_weights(&sub, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;

    let mut weights = vec![0.0; m];
    for (slot, &j) in kept.iter().enumerate() {
        weights[j] = sub_result.alpha.values()[slot];
    }
    let alpha = WeightVector::new(weights)?;
    let mut result = DirectionResult::from_alpha(matrix, alpha, sub_result.converged)?;
    // The embedded weights reproduce the sub-problem direction exactly.
    result.direction = sub_result.direction;
    result.squared_norm = sub_result.squared_norm;
    Ok(result)
}

/// Pareto-stationarity test: true iff the min-norm value is at most `eps`.
pub fn is_pareto_stationary(matrix: &GradientMatrix, eps: f64) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(MpftError::Config(format!(
            "stationarity threshold must be positive, got {eps}"
        )));
    }
    Ok(min_norm_weights(matrix, DEFAULT_TOL, DEFAULT_MAX_ITERS)?.squared_norm <= eps)
}
