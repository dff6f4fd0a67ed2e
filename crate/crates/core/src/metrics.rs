//! Front quality metrics: hypervolume (exact for m ≤ 3 plus a Monte-Carlo
//! estimator used as a test oracle), sparsity, and the interaction budget.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MpftError, Result};
use crate::tracker::TrackConfig;
use crate::types::ObjectiveVector;

/// Metrics of a tracked front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hv: f64,
    /// None when the front has fewer than two points.
    pub sp: Option<f64>,
    pub env_steps: u64,
    pub reference_point: Vec<f64>,
}

fn check_dims(front: &[ObjectiveVector], m: usize, context: &'static str) -> Result<()> {
    for p in front {
        if p.len() != m {
            return Err(MpftError::Dimension {
                context,
                expected: m,
                actual: p.len(),
            });
        }
    }
    Ok(())
}

/// 2-D hypervolume by descending sweep over the first coordinate. Points are
/// (x, y) pairs already translated so only those above `reference` matter.
fn hv_2d(points: &[(f64, f64)], rx: f64, ry: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| x > rx && y > ry)
        .collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut hv = 0.0;
    let mut y_max = ry;
    for (x, y) in pts {
        if y > y_max {
            hv += (x - rx) * (y - y_max);
            y_max = y;
        }
    }
    hv
}

/// Lebesgue measure of the union of boxes [reference, p] over front points p
/// dominating the reference. Exact for two and three objectives.
pub fn hypervolume(front: &[ObjectiveVector], reference: &ObjectiveVector) -> Result<f64> {
    let m = reference.len();
    check_dims(front, m, "hypervolume")?;
    let r = reference.values();
    match m {
        2 => {
            let pts: Vec<(f64, f64)> = front
                .iter()
                .map(|p| (p.values()[0], p.values()[1]))
                .collect();
            Ok(hv_2d(&pts, r[0], r[1]))
        }
        3 => {
            // Slice along the third coordinate: between consecutive levels the
            // dominated area is constant, so each slab contributes area x height.
            let mut levels: Vec<f64> = front
                .iter()
                .map(|p| p.values()[2])
                .filter(|&z| z > r[2])
                .collect();
            levels.sort_by(|a, b| b.total_cmp(a));
            levels.dedup();
            let mut hv = 0.0;
            for (i, &z) in levels.iter().enumerate() {
                let z_below = levels.get(i + 1).copied().unwrap_or(r[2]);
                let active: Vec<(f64, f64)> = front
                    .iter()
                    .filter(|p| p.values()[2] >= z)
                    .map(|p| (p.values()[0], p.values()[1]))
                    .collect();
                hv += hv_2d(&active, r[0], r[1]) * (z - z_below);
            }
            Ok(hv)
        }
        _ => Err(MpftError::Unsupported(format!(
            "hypervolume implemented for 2 or 3 objectives, got {m}"
        ))),
    }
}

/// Monte-Carlo hypervolume estimate with its standard error. Deterministic
/// given the seed; used as an independent oracle for the exact algorithms.
pub fn hypervolume_mc(
    front: &[ObjectiveVector],
    reference: &ObjectiveVector,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 10_000 {
        return Err(MpftError::Config(format!(
            "Monte-Carlo hypervolume needs at least 1e4 samples, got {samples}"
        )));
    }
    let m = reference.len();
    check_dims(front, m, "hypervolume_mc")?;
    let r = reference.values();

    let effective: Vec<&ObjectiveVector> = front
        .iter()
        .filter(|p| p.values().iter().zip(r).all(|(v, rv)| v > rv))
        .collect();
    if effective.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut hi = vec![f64::NEG_INFINITY; m];
    for p in &effective {
        for (h, v) in hi.iter_mut().zip(p.values()) {
            *h = h.max(*v);
        }
    }
    let box_volume: f64 = hi.iter().zip(r).map(|(h, rv)| h - rv).product();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits: u64 = 0;
    let mut sample = vec![0.0; m];
    for _ in 0..samples {
        for (s, (h, rv)) in sample.iter_mut().zip(hi.iter().zip(r)) {
            *s = rng.gen_range(*rv..*h);
        }
        if effective
            .iter()
            .any(|p| sample.iter().zip(p.values()).all(|(s, v)| s <= v))
        {
            hits += 1;
        }
    }
    let fraction = hits as f64 / samples as f64;
    let estimate = box_volume * fraction;
    let std_error = box_volume * (fraction * (1.0 - fraction) / samples as f64).sqrt();
    Ok((estimate, std_error))
}

/// Sparsity: per objective, the squared gaps of the sorted coordinate values,
/// summed over objectives and averaged over |front| − 1. Lower is denser.
pub fn sparsity(front: &[ObjectiveVector]) -> Result<f64> {
    let n = front.len();
    if n < 2 {
        return Err(MpftError::UndefinedMetric(format!(
            "sparsity needs at least two front points, got {n}"
        )));
    }
    let m = front[0].len();
    check_dims(front, m, "sparsity")?;
    let mut total = 0.0;
    let mut column = vec![0.0; n];
    for i in 0..m {
        for (slot, p) in column.iter_mut().zip(front) {
            *slot = p.values()[i];
        }
        column.sort_by(|a, b| a.total_cmp(b));
        total += column
            .windows(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum::<f64>();
    }
    Ok(total / (n - 1) as f64)
}

/// Total interaction budget: steps × (Σᵢ (Ξᵢ + Ψᵢ) + Σₖ (Ξₖ + Ψₖ)). The
/// tracker's runtime counter reconciles with this exactly when every budget
/// is fully consumed.
pub fn env_steps(config: &TrackConfig) -> u64 {
    let vertex: u64 = config
        .xi_vertex
        .iter()
        .chain(&config.psi_vertex)
        .map(|&e| e as u64)
        .sum();
    let interior: u64 = config
        .xi_interior
        .iter()
        .chain(&config.psi_interior)
        .map(|&e| e as u64)
        .sum();
    config.steps * (vertex + interior)
}
