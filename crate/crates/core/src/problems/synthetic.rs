//! Analytic problems with known Pareto-optimal sets.

use crate::error::{MpftError, Result};
use crate::metrics;
use crate::problems::Problem;
use crate::types::{GradientMatrix, ObjectiveVector, PolicyParams};

/// Concave quadratic objectives J_i(θ) = c_i − ‖θ − t_i‖₂². The
/// Pareto-optimal set is the convex hull of the targets, which makes front
/// quality measurable against a closed form.
#[derive(Debug, Clone)]
pub struct BiQuadratic {
    targets: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BiQuadratic {
    pub fn new(targets: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if targets.len() < 2 {
            return Err(MpftError::Dimension {
                context: "BiQuadratic targets",
                expected: 2,
                actual: targets.len(),
            });
        }
        if offsets.len() != targets.len() {
            return Err(MpftError::Dimension {
                context: "BiQuadratic offsets",
                expected: targets.len(),
                actual: offsets.len(),
            });
        }
        let d = targets[0].len();
        if d == 0 {
            return Err(MpftError::Dimension {
                context: "BiQuadratic target dimension",
                expected: 1,
                actual: 0,
            });
        }
        for t in &targets {
            if t.len() != d {
                return Err(MpftError::Dimension {
                    context: "BiQuadratic target dimension",
                    expected: d,
                    actual: t.len(),
                });
            }
            if !t.iter().all(|v| v.is_finite()) {
                return Err(MpftError::NonFinite("BiQuadratic targets"));
            }
        }
        if !offsets.iter().all(|v| v.is_finite()) {
            return Err(MpftError::NonFinite("BiQuadratic offsets"));
        }
        // Default initialization box: the bounding box of the targets.
        let mut lo = targets[0].clone();
        let mut hi = targets[0].clone();
        for t in &targets[1..] {
            for j in 0..d {
                lo[j] = lo[j].min(t[j]);
                hi[j] = hi[j].max(t[j]);
            }
        }
        Ok(Self {
            targets,
            offsets,
            lo,
            hi,
        })
    }

    /// Override the initialization box.
    pub fn with_bounds(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != self.dim() || hi.len() != self.dim() {
            return Err(MpftError::Dimension {
                context: "BiQuadratic bounds",
                expected: self.dim(),
                actual: lo.len().min(hi.len()),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(MpftError::Config("init bounds with lo > hi".into()));
        }
        self.lo = lo;
        self.hi = hi;
        Ok(self)
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    /// Largest squared distance from t_i to a corner of the box; the exact
    /// worst case of the quadratic term over the box.
    fn max_sq_dist_over_box(&self, i: usize) -> f64 {
        self.targets[i]
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(t, (l, h))| {
                let a = (l - t) * (l - t);
                let b = (h - t) * (h - t);
                a.max(b)
            })
            .sum()
    }

    fn min_objective_over_box(&self, i: usize) -> f64 {
        self.offsets[i] - self.max_sq_dist_over_box(i)
    }

    fn eval_raw(&self, theta: &[f64]) -> Vec<f64> {
        self.targets
            .iter()
            .zip(&self.offsets)
            .map(|(t, c)| {
                let sq: f64 = theta.iter().zip(t).map(|(x, y)| (x - y) * (x - y)).sum();
                c - sq
            })
            .collect()
    }

    fn gradient_raw(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        self.targets
            .iter()
            .map(|t| theta.iter().zip(t).map(|(x, y)| -2.0 * (x - y)).collect())
            .collect()
    }

    /// Ground-truth hypervolume of the known Pareto-optimal set (two
    /// objectives): scan the target segment densely, drop dominated samples,
    /// and measure the remainder.
    pub fn true_front_hv(&self, reference: &ObjectiveVector, resolution: usize) -> Result<f64> {
        true_front_hv_impl(self, &self.targets, reference, resolution)
    }
}

impl Problem for BiQuadratic {
    fn objectives(&self) -> usize {
        self.targets.len()
    }

    fn dim(&self) -> usize {
        self.targets[0].len()
    }

    fn nonnegative(&self) -> bool {
        (0..self.objectives()).all(|i| self.min_objective_over_box(i) >= 0.0)
    }

    fn init_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo.clone(), self.hi.clone())
    }

    fn evaluate(&self, theta: &PolicyParams) -> Result<ObjectiveVector> {
        check_theta(theta, self.dim())?;
        ObjectiveVector::new(self.eval_raw(theta.values()))
    }

    fn gradient(&self, theta: &PolicyParams) -> Result<GradientMatrix> {
        check_theta(theta, self.dim())?;
        GradientMatrix::new(self.gradient_raw(theta.values()))
    }
}

/// [`BiQuadratic`] with a radial bump subtracted from every objective around
/// the hull midpoint: J_i(θ) = c_i − ‖θ − t_i‖² − b·exp(−‖θ − μ‖²/σ²).
/// The bump depresses the middle of the front and produces a genuine sparse
/// region for the interior-fill stage to close.
#[derive(Debug, Clone)]
pub struct ConcaveGap {
    base: BiQuadratic,
    bump_height: f64,
    bump_sigma: f64,
    bump_center: Vec<f64>,
}

impl ConcaveGap {
    pub const DEFAULT_BUMP_HEIGHT: f64 = 0.5;
    pub const DEFAULT_BUMP_SIGMA: f64 = 0.2;

    /// Bump centered at the mean of the targets with the default shape.
    pub fn new(targets: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        Self::with_bump(
            targets,
            offsets,
            Self::DEFAULT_BUMP_HEIGHT,
            Self::DEFAULT_BUMP_SIGMA,
        )
    }

    pub fn with_bump(
        targets: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        bump_height: f64,
        bump_sigma: f64,
    ) -> Result<Self> {
        if !(bump_sigma > 0.0) || !bump_height.is_finite() || bump_height < 0.0 {
            return Err(MpftError::Config(format!(
                "bump height must be >= 0 and sigma > 0, got b={bump_height}, sigma={bump_sigma}"
            )));
        }
        let base = BiQuadratic::new(targets, offsets)?;
        let d = base.dim();
        let n = base.targets.len() as f64;
        let mut center = vec![0.0; d];
        for t in &base.targets {
            for j in 0..d {
                center[j] += t[j] / n;
            }
        }
        Ok(Self {
            base,
            bump_height,
            bump_sigma,
            bump_center: center,
        })
    }

    pub fn with_bounds(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        self.base = self.base.with_bounds(lo, hi)?;
        Ok(self)
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        self.base.targets()
    }

    fn bump(&self, theta: &[f64]) -> f64 {
        let sq: f64 = theta
            .iter()
            .zip(&self.bump_center)
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        self.bump_height * (-sq / (self.bump_sigma * self.bump_sigma)).exp()
    }

    pub fn true_front_hv(&self, reference: &ObjectiveVector, resolution: usize) -> Result<f64> {
        true_front_hv_impl(self, &self.base.targets, reference, resolution)
    }
}

impl Problem for ConcaveGap {
    fn objectives(&self) -> usize {
        self.base.objectives()
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn nonnegative(&self) -> bool {
        (0..self.objectives())
            .all(|i| self.base.min_objective_over_box(i) - self.bump_height >= 0.0)
    }

    fn init_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.base.init_bounds()
    }

    fn evaluate(&self, theta: &PolicyParams) -> Result<ObjectiveVector> {
        check_theta(theta, self.dim())?;
        let bump = self.bump(theta.values());
        let values = self
            .base
            .eval_raw(theta.values())
            .into_iter()
            .map(|v| v - bump)
            .collect();
        ObjectiveVector::new(values)
    }

    fn gradient(&self, theta: &PolicyParams) -> Result<GradientMatrix> {
        check_theta(theta, self.dim())?;
        let mut rows = self.base.gradient_raw(theta.values());
        let sigma_sq = self.bump_sigma * self.bump_sigma;
        let bump = self.bump(theta.values());
        for row in &mut rows {
            for (g, (x, c)) in row
                .iter_mut()
                .zip(theta.values().iter().zip(&self.bump_center))
            {
                *g += 2.0 * bump / sigma_sq * (x - c);
            }
        }
        GradientMatrix::new(rows)
    }
}

fn check_theta(theta: &PolicyParams, d: usize) -> Result<()> {
    if theta.dim() != d {
        return Err(MpftError::Dimension {
            context: "theta",
            expected: d,
            actual: theta.dim(),
        });
    }
    Ok(())
}

fn true_front_hv_impl<P: Problem>(
    problem: &P,
    targets: &[Vec<f64>],
    reference: &ObjectiveVector,
    resolution: usize,
) -> Result<f64> {
    if problem.objectives() != 2 {
        return Err(MpftError::Unsupported(format!(
            "true_front_hv handles two objectives, got {}",
            problem.objectives()
        )));
    }
    if resolution < 100 {
        return Err(MpftError::Config(format!(
            "true_front_hv needs resolution >= 100, got {resolution}"
        )));
    }
    let d = problem.dim();
    let (t1, t2) = (&targets[0], &targets[1]);
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(resolution);
    for i in 0..resolution {
        let lambda = i as f64 / (resolution - 1) as f64;
        let mut theta = vec![0.0; d];
        for j in 0..d {
            theta[j] = lambda * t1[j] + (1.0 - lambda) * t2[j];
        }
        let j = problem.evaluate(&PolicyParams::new(theta)?)?;
        samples.push(j.values().to_vec());
    }
    // Non-dominated filter for two objectives: descending sweep on the first
    // coordinate keeps points with a new best second coordinate.
    samples.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
    let mut front = Vec::new();
    let mut best_second = f64::NEG_INFINITY;
    for s in samples {
        if s[1] > best_second {
            best_second = s[1];
            front.push(ObjectiveVector::new(s)?);
        }
    }
    metrics::hypervolume(&front, reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::hypervolume_mc;
    use crate::problems::test_support::assert_gradient_matches_fd;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_biquadratic() -> BiQuadratic {
        BiQuadratic::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 2.0]).unwrap()
    }

    fn params(values: &[f64]) -> PolicyParams {
        PolicyParams::new(values.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_at_first_target() {
        let p = unit_biquadratic();
        let j = p.evaluate(&params(&[1.0, 0.0])).unwrap();
        assert_eq!(j.values(), &[2.0, 0.0]);
    }

    #[test]
    fn gradient_vanishes_at_own_target() {
        let p = unit_biquadratic();
        let g = p.gradient(&params(&[1.0, 0.0])).unwrap();
        assert_eq!(g.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn gradient_at_origin() {
        let p = unit_biquadratic();
        let g = p.gradient(&params(&[0.0, 0.0])).unwrap();
        assert_eq!(g.row(0), &[2.0, 0.0]);
        assert_eq!(g.row(1), &[0.0, 2.0]);
    }

    #[test]
    fn zero_bump_matches_plain_quadratic() {
        let plain = unit_biquadratic();
        let gap = ConcaveGap::with_bump(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![2.0, 2.0],
            0.0,
            0.2,
        )
        .unwrap();
        let theta = params(&[0.3, 0.4]);
        assert_eq!(
            plain.evaluate(&theta).unwrap().values(),
            gap.evaluate(&theta).unwrap().values()
        );
    }

    #[test]
    fn gradients_match_finite_differences() {
        let plain = unit_biquadratic();
        let gap =
            ConcaveGap::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let theta = params(&[rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)]);
            assert_gradient_matches_fd(&plain, &theta);
            assert_gradient_matches_fd(&gap, &theta);
        }
    }

    #[test]
    fn nonnegative_flag_uses_box_worst_case() {
        let p = unit_biquadratic();
        assert!(p.nonnegative());
        let shifted = BiQuadratic::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0])
            .unwrap();
        assert!(!shifted.nonnegative());
        // Strong bump drags the minimum below zero.
        let gap = ConcaveGap::with_bump(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![2.0, 2.0],
            0.5,
            0.2,
        )
        .unwrap();
        assert!(!gap.nonnegative());
    }

    #[test]
    fn nonnegative_problem_never_negative_in_box() {
        let p = unit_biquadratic();
        assert!(p.nonnegative());
        let (lo, hi) = p.init_bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let theta: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(l, h)| if l < h { rng.gen_range(*l..*h) } else { *l })
                .collect();
            let j = p.evaluate(&params(&theta)).unwrap();
            assert!(j.values().iter().all(|&v| v >= 0.0), "negative J at {theta:?}");
        }
    }

    #[test]
    fn true_front_hv_converges_with_resolution() {
        let p = unit_biquadratic();
        let reference = ObjectiveVector::new(vec![0.0, 0.0]).unwrap();
        let coarse = p.true_front_hv(&reference, 2000).unwrap();
        let fine = p.true_front_hv(&reference, 4000).unwrap();
        assert!((fine - coarse).abs() / fine < 1e-3);
    }

    #[test]
    fn true_front_hv_matches_monte_carlo() {
        let p = unit_biquadratic();
        let reference = ObjectiveVector::new(vec![0.0, 0.0]).unwrap();
        let hv = p.true_front_hv(&reference, 4000).unwrap();
        // Dense front sample pushed through the Monte-Carlo estimator.
        let front: Vec<ObjectiveVector> = (0..2000)
            .map(|i| {
                let lambda = i as f64 / 1999.0;
                let theta = params(&[lambda, 1.0 - lambda]);
                p.evaluate(&theta).unwrap()
            })
            .collect();
        let (mc, se) = hypervolume_mc(&front, &reference, 2_000_000, 17).unwrap();
        assert!((hv - mc).abs() <= 3.0 * se + 1e-3, "hv={hv} mc={mc} se={se}");
    }

    #[test]
    fn true_front_hv_reference_dominating_front_is_zero() {
        let p = unit_biquadratic();
        let reference = ObjectiveVector::new(vec![10.0, 10.0]).unwrap();
        assert_eq!(p.true_front_hv(&reference, 500).unwrap(), 0.0);
    }

    #[test]
    fn true_front_hv_rejects_other_dimensions() {
        let p = BiQuadratic::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![2.0, 2.0, 2.0],
        )
        .unwrap();
        let reference = ObjectiveVector::new(vec![0.0, 0.0, 0.0]).unwrap();
        assert!(p.true_front_hv(&reference, 500).is_err());
    }
}
