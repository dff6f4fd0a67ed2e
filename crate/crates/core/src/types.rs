//! Core value types: policy parameters, objective vectors, simplex weights,
//! and per-objective gradient matrices.

use serde::Serialize;

use crate::error::{MpftError, Result};

/// Absolute tolerance on the simplex sum constraint.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

fn check_finite(values: &[f64], context: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MpftError::NonFinite(context))
    }
}

/// Policy parameter vector θ ∈ R^d. The decision variable of a problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PolicyParams(Vec<f64>);

impl PolicyParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(MpftError::Dimension {
                context: "PolicyParams",
                expected: 1,
                actual: 0,
            });
        }
        check_finite(&values, "PolicyParams")?;
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

/// Per-objective expected returns J(θ) ∈ R^m, m ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(MpftError::Dimension {
                context: "ObjectiveVector",
                expected: 2,
                actual: values.len(),
            });
        }
        check_finite(&values, "ObjectiveVector")?;
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Deterministic lexicographic order (ascending by objective 1, then
    /// by the remaining coordinates).
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        lex_cmp(&self.0, &other.0)
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = x.total_cmp(y);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

/// A point on the unit simplex: ω ≥ 0 with Σω = 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values, "WeightVector")?;
        if values.iter().any(|&w| w < 0.0) {
            return Err(MpftError::Config(
                "weight vector has a negative entry".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(MpftError::Config(format!(
                "weight vector sums to {sum}, expected 1"
            )));
        }
        Ok(Self(values))
    }

    /// Uniform weights (1/m, ..., 1/m).
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(MpftError::Dimension {
                context: "WeightVector",
                expected: 1,
                actual: 0,
            });
        }
        Self::new(vec![1.0 / m as f64; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Per-objective gradient matrix ∇J(θ): m rows of length d, one gradient
/// per objective.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix {
    rows: Vec<Vec<f64>>,
}

impl GradientMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(MpftError::Dimension {
                context: "GradientMatrix",
                expected: 1,
                actual: 0,
            });
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(MpftError::Dimension {
                context: "GradientMatrix",
                expected: 1,
                actual: 0,
            });
        }
        for row in &rows {
            if row.len() != d {
                return Err(MpftError::Dimension {
                    context: "GradientMatrix",
                    expected: d,
                    actual: row.len(),
                });
            }
            check_finite(row, "GradientMatrix")?;
        }
        Ok(Self { rows })
    }

    /// Number of objectives (rows).
    pub fn objectives(&self) -> usize {
        self.rows.len()
    }

    /// Parameter dimension (row length).
    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// ∇J(θ)ᵀω: combine rows with the given weights.
    pub fn weighted_direction(&self, weights: &WeightVector) -> Result<Vec<f64>> {
        if weights.len() != self.objectives() {
            return Err(MpftError::Dimension {
                context: "weighted_direction",
                expected: self.objectives(),
                actual: weights.len(),
            });
        }
        let mut dir = vec![0.0; self.dim()];
        for (w, row) in weights.values().iter().zip(&self.rows) {
            for (d, g) in dir.iter_mut().zip(row) {
                *d += w * g;
            }
        }
        Ok(dir)
    }

    /// Gram matrix G Gᵀ (m×m), the quadratic form behind the min-norm problem.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let m = self.objectives();
        let mut gram = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                let dot = dot(&self.rows[i], &self.rows[j]);
                gram[i][j] = dot;
                gram[j][i] = dot;
            }
        }
        gram
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2_sq(v: &[f64]) -> f64 {
    dot(v, v)
}
