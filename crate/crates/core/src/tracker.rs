//! The four-stage tracking pipeline. Stage 1 drives one policy per objective
//! to its single-objective optimum (the front's vertices). Stage 2 walks each
//! vertex policy along the front with a fixed schedule of u reverse updates
//! (improve everything except the tracked objective) and v ascent updates
//! (improve everything). Stage 3 detects the sparsest regions of the merged
//! front, steers freshly initialized policies into them by objective weight
//! adjustment, and tracks outward from each anchor. Stage 4 merges all
//! tracks into the final archive.

use log::{debug, warn};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::{ParetoArchive, Provenance, TrackedPolicy};
use crate::direction::{pareto_ascent_direction, pareto_reverse_direction};
use crate::error::{MpftError, Result};
use crate::metrics;
use crate::problems::Problem;
use crate::sparsity::{self, RegionReport, SparseRegion};
use crate::types::{norm2_sq, GradientMatrix, ObjectiveVector, PolicyParams, WeightVector};

/// Directions with squared norm at or below this are treated as vanished:
/// the episode is consumed but the parameters stay put.
const ZERO_DIRECTION_SQ_NORM: f64 = 1e-18;
/// Floor applied to objective values before dividing in the weight
/// adjustment, guarding against zeros.
const WEIGHT_ADJUST_FLOOR: f64 = 1e-8;

/// Budgets and knobs of a full tracking run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    /// Stage-1 episodes per objective (Ξᵢ).
    pub xi_vertex: Vec<u32>,
    /// Stage-2 episodes per objective (Ψᵢ); consumed in whole (u+v) cycles.
    pub psi_vertex: Vec<u32>,
    /// Stage-3 anchoring episodes per region (Ξₖ).
    pub xi_interior: Vec<u32>,
    /// Stage-3 tracking episodes per region (Ψₖ), split evenly over the m
    /// per-objective sub-tracks.
    pub psi_interior: Vec<u32>,
    /// Reverse updates per tracking cycle.
    pub u: u32,
    /// Ascent updates per tracking cycle.
    pub v: u32,
    /// Environment timesteps charged per episode.
    pub steps: u64,
    /// Parameter step size.
    pub lr: f64,
    /// Anchor stopping tolerance; None uses 0.05·‖j_max‖₂ per region.
    pub epsilon_anchor: Option<f64>,
    pub seed: u64,
    /// Cap update steps at `lr` (step = lr·dir/max(1, ‖dir‖)); false applies
    /// raw `lr·dir` steps.
    pub normalize_steps: bool,
    /// Start stage-3 anchoring from the boundary policy nearest the target
    /// instead of a fresh random policy.
    pub stage3_warm_start: bool,
    /// Hypervolume reference point; None means the origin.
    pub reference_point: Option<Vec<f64>>,
    /// Concurrent track limit; None runs every independent track at once.
    pub jobs: Option<usize>,
}

impl TrackConfig {
    /// Zero-budget configuration for `m` objectives and `k` regions; callers
    /// override the fields they care about.
    pub fn default_for(m: usize, k: usize) -> Self {
        Self {
            xi_vertex: vec![0; m],
            psi_vertex: vec![0; m],
            xi_interior: vec![0; k],
            psi_interior: vec![0; k],
            u: 1,
            v: 2,
            steps: 1,
            lr: 0.05,
            epsilon_anchor: None,
            seed: 0,
            normalize_steps: true,
            stage3_warm_start: false,
            reference_point: None,
            jobs: None,
        }
    }

    /// Number of sparse regions to fill (K).
    pub fn num_regions(&self) -> usize {
        self.xi_interior.len()
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.xi_vertex.len() != m || self.psi_vertex.len() != m {
            return Err(MpftError::Config(format!(
                "vertex budget lists must have one entry per objective ({m}), got {} and {}",
                self.xi_vertex.len(),
                self.psi_vertex.len()
            )));
        }
        if self.xi_interior.len() != self.psi_interior.len() {
            return Err(MpftError::Config(format!(
                "interior budget lists must have equal length, got {} and {}",
                self.xi_interior.len(),
                self.psi_interior.len()
            )));
        }
        if self.u + self.v < 1 {
            return Err(MpftError::Config("u + v >= 1 is required".into()));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(MpftError::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.lr
            )));
        }
        if self.steps == 0 {
            return Err(MpftError::Config("steps per episode must be >= 1".into()));
        }
        if let Some(eps) = self.epsilon_anchor {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(MpftError::Config(format!(
                    "epsilon_anchor must be positive, got {eps}"
                )));
            }
        }
        if let Some(reference) = &self.reference_point {
            if reference.len() != m {
                return Err(MpftError::Config(format!(
                    "reference point must have {m} entries, got {}",
                    reference.len()
                )));
            }
            if !reference.iter().all(|v| v.is_finite()) {
                return Err(MpftError::Config("reference point must be finite".into()));
            }
        }
        if self.jobs == Some(0) {
            return Err(MpftError::Config("jobs must be >= 1".into()));
        }
        Ok(())
    }

    fn cycle_len(&self) -> u64 {
        (self.u + self.v) as u64
    }
}

/// Episodes consumed by one track. Tracks own their counter privately;
/// totals are summed when results merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrackCounter {
    pub episodes: u64,
}

impl TrackCounter {
    fn charge(&mut self) {
        self.episodes += 1;
    }
}

/// Per-stage summary embedded in the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub episodes: u64,
    pub policies_kept: usize,
}

/// Outcome of a full tracking run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Budget formula value: steps × (Σᵢ (Ξᵢ + Ψᵢ) + Σₖ (Ξₖ + Ψₖ)).
    pub env_steps: u64,
    /// steps × episodes actually consumed; equals `env_steps` when every
    /// budget is fully consumed (divisible cycle budgets, no early anchor
    /// stop).
    pub interactions: u64,
    pub hv: f64,
    /// None when the final front has fewer than two points.
    pub sp: Option<f64>,
    pub reference_point: Vec<f64>,
    pub stages: Vec<StageReport>,
    pub regions: Vec<RegionReport>,
}

fn track_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_initial<P: Problem + ?Sized>(problem: &P, rng: &mut ChaCha8Rng) -> Result<PolicyParams> {
    let (lo, hi) = problem.init_bounds();
    let values = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| if l < h { rng.gen_range(l..h) } else { l })
        .collect();
    PolicyParams::new(values)
}

/// One parameter update along `direction`. Returns false when the direction
/// has vanished and the parameters were left unchanged.
fn apply_step(theta: &mut [f64], direction: &[f64], config: &TrackConfig) -> bool {
    let norm_sq = norm2_sq(direction);
    if norm_sq <= ZERO_DIRECTION_SQ_NORM {
        return false;
    }
    let scale = if config.normalize_steps {
        config.lr / norm_sq.sqrt().max(1.0)
    } else {
        config.lr
    };
    for (t, d) in theta.iter_mut().zip(direction) {
        *t += scale * d;
    }
    true
}

enum EpisodeDirection<'a> {
    /// Ascend a single objective's own gradient.
    Objective(usize),
    /// Pareto-reverse direction of the given objective.
    Reverse(usize),
    /// Pareto-ascent direction.
    Ascent,
    /// ∇J(θ)ᵀω for an explicit weight vector.
    Weighted(&'a WeightVector),
}

/// One training episode: recompute the gradient, pick the direction, step,
/// and charge the counter.
fn run_episode<P: Problem + ?Sized>(
    problem: &P,
    theta: &mut Vec<f64>,
    direction: EpisodeDirection<'_>,
    config: &TrackConfig,
    counter: &mut TrackCounter,
) -> Result<bool> {
    let params = PolicyParams::new(theta.clone())?;
    let gradient: GradientMatrix = problem.gradient(&params)?;
    let dir = match direction {
        EpisodeDirection::Objective(i) => gradient.row(i).to_vec(),
        EpisodeDirection::Reverse(i) => pareto_reverse_direction(&gradient, i)?.direction,
        EpisodeDirection::Ascent => pareto_ascent_direction(&gradient)?.direction,
        EpisodeDirection::Weighted(w) => gradient.weighted_direction(w)?,
    };
    let moved = apply_step(theta, &dir, config);
    counter.charge();
    Ok(moved)
}

fn track_failure(track: &str, episode: u64, err: MpftError) -> MpftError {
    match err {
        already @ MpftError::TrackFailure { .. } => already,
        other => MpftError::TrackFailure {
            track: track.to_string(),
            episode,
            reason: other.to_string(),
        },
    }
}

/// Stage 1: approximate the vertex policy of one objective by single-objective
/// gradient ascent from a seeded random start.
pub fn stage1_vertex<P: Problem + ?Sized>(
    problem: &P,
    objective: usize,
    config: &TrackConfig,
    counter: &mut TrackCounter,
) -> Result<TrackedPolicy> {
    let m = problem.objectives();
    if objective >= m {
        return Err(MpftError::Dimension {
            context: "stage1 objective index",
            expected: m - 1,
            actual: objective,
        });
    }
    let track = format!("vertex-{objective}");
    let mut rng = track_rng(config.seed, objective as u64);
    let mut theta = sample_initial(problem, &mut rng)?.into_values();
    for _ in 0..config.xi_vertex[objective] {
        let moved = run_episode(
            problem,
            &mut theta,
            EpisodeDirection::Objective(objective),
            config,
            counter,
        )
        .map_err(|e| track_failure(&track, counter.episodes, e))?;
        if !moved {
            debug!("{track}: objective gradient vanished at episode {}", counter.episodes);
        }
    }
    let params = PolicyParams::new(theta)?;
    let objectives = problem
        .evaluate(&params)
        .map_err(|e| track_failure(&track, counter.episodes, e))?;
    Ok(TrackedPolicy {
        params,
        objectives,
        provenance: Provenance::Vertex(objective),
        episode_index: counter.episodes,
    })
}

/// One tracking cycle: u updates along the Pareto-reverse direction of
/// `objective`, then v updates along the Pareto-ascent direction, with the
/// gradient recomputed before every update. Vanished directions are skipped
/// without aborting the schedule.
pub fn track_cycle<P: Problem + ?Sized>(
    problem: &P,
    theta: &PolicyParams,
    objective: usize,
    config: &TrackConfig,
    counter: &mut TrackCounter,
) -> Result<PolicyParams> {
    if config.u + config.v < 1 {
        return Err(MpftError::Config("u + v >= 1 is required".into()));
    }
    let mut values = theta.values().to_vec();
    for _ in 0..config.u {
        let moved = run_episode(
            problem,
            &mut values,
            EpisodeDirection::Reverse(objective),
            config,
            counter,
        )?;
        if !moved {
            debug!(
                "track {objective}: reverse direction vanished at episode {}",
                counter.episodes
            );
        }
    }
    for _ in 0..config.v {
        let moved = run_episode(problem, &mut values, EpisodeDirection::Ascent, config, counter)?;
        if !moved {
            debug!(
                "track {objective}: Pareto-stationary, ascent skipped at episode {}",
                counter.episodes
            );
        }
    }
    PolicyParams::new(values)
}

/// Stage 2: track the front from one vertex policy, recording the policy
/// after every full cycle. Runs ⌊Ψᵢ/(u+v)⌋ cycles; a trailing remainder of
/// the budget is discarded.
pub fn stage2_track<P: Problem + ?Sized>(
    problem: &P,
    vertex: &TrackedPolicy,
    objective: usize,
    config: &TrackConfig,
    counter: &mut TrackCounter,
) -> Result<ParetoArchive> {
    let track = format!("edge-{objective}");
    let mut archive = ParetoArchive::from_members(vec![vertex.clone()])?;
    let mut theta = vertex.params.clone();
    let cycles = config.psi_vertex[objective] as u64 / config.cycle_len();
    for _ in 0..cycles {
        theta = track_cycle(problem, &theta, objective, config, counter)
            .map_err(|e| track_failure(&track, counter.episodes, e))?;
        let objectives = problem
            .evaluate(&theta)
            .map_err(|e| track_failure(&track, counter.episodes, e))?;
        archive = archive.union_plus(vec![TrackedPolicy {
            params: theta.clone(),
            objectives,
            provenance: Provenance::Vertex(objective),
            episode_index: counter.episodes,
        }])?;
    }
    Ok(archive)
}

/// Per-region weights of the objective weight adjustment: β = j_max ⊘ J
/// (element-wise, floored), normalized to the simplex.
pub fn adjustment_weights(j_max: &ObjectiveVector, current: &ObjectiveVector) -> Result<WeightVector> {
    if j_max.len() != current.len() {
        return Err(MpftError::Dimension {
            context: "adjustment_weights",
            expected: j_max.len(),
            actual: current.len(),
        });
    }
    let beta: Vec<f64> = j_max
        .values()
        .iter()
        .zip(current.values())
        .map(|(target, j)| target / j.max(WEIGHT_ADJUST_FLOOR))
        .collect();
    let sum: f64 = beta.iter().sum();
    WeightVector::new(beta.into_iter().map(|b| b / sum).collect())
}

/// Stage 3 anchoring: steer a policy toward the sparse-region target `j_max`
/// by repeatedly re-weighting objectives inversely to their current value.
/// Stops when ‖J(θ) − j_max‖₂ falls under the tolerance or the episode
/// budget runs out.
pub fn weight_adjust_anchor<P: Problem + ?Sized>(
    problem: &P,
    j_max: &ObjectiveVector,
    region: usize,
    config: &TrackConfig,
    warm_start: Option<&PolicyParams>,
    counter: &mut TrackCounter,
) -> Result<TrackedPolicy> {
    let m = problem.objectives();
    if j_max.len() != m {
        return Err(MpftError::Dimension {
            context: "weight_adjust_anchor j_max",
            expected: m,
            actual: j_max.len(),
        });
    }
    if j_max.values().iter().any(|&v| v <= 0.0) {
        return Err(MpftError::Config(format!(
            "weight adjustment needs strictly positive targets, got {:?}; \
             ensure objectives are non-negative by design",
            j_max.values()
        )));
    }
    let track = format!("anchor-{region}");
    let epsilon = config.epsilon_anchor.unwrap_or_else(|| {
        0.05 * norm2_sq(j_max.values()).sqrt()
    });

    let mut theta = match warm_start {
        Some(params) => params.values().to_vec(),
        None => {
            let mut rng = track_rng(config.seed, (m + region) as u64);
            sample_initial(problem, &mut rng)?.into_values()
        }
    };
    let mut current = problem
        .evaluate(&PolicyParams::new(theta.clone())?)
        .map_err(|e| track_failure(&track, counter.episodes, e))?;
    for _ in 0..config.xi_interior[region] {
        let distance = current
            .values()
            .iter()
            .zip(j_max.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if distance <= epsilon {
            break;
        }
        let weights = adjustment_weights(j_max, &current)?;
        run_episode(
            problem,
            &mut theta,
            EpisodeDirection::Weighted(&weights),
            config,
            counter,
        )
        .map_err(|e| track_failure(&track, counter.episodes, e))?;
        current = problem
            .evaluate(&PolicyParams::new(theta.clone())?)
            .map_err(|e| track_failure(&track, counter.episodes, e))?;
    }
    Ok(TrackedPolicy {
        params: PolicyParams::new(theta)?,
        objectives: current,
        provenance: Provenance::Anchor(region),
        episode_index: counter.episodes,
    })
}

/// Result of the sparse-region fill stage.
#[derive(Debug, Clone, Default)]
pub struct Stage3Outcome {
    /// One tracked set per filled region.
    pub fills: Vec<ParetoArchive>,
    /// The detected regions, largest first.
    pub regions: Vec<SparseRegion>,
    /// Episodes consumed per region.
    pub counters: Vec<TrackCounter>,
}

/// Stage 3: detect the top-K sparse regions of the tracked front, anchor a
/// policy inside each, then track from every anchor toward each objective
/// with an even split of the region budget.
pub fn stage3_fill<P: Problem + ?Sized>(
    problem: &P,
    archive: &ParetoArchive,
    config: &TrackConfig,
) -> Result<Stage3Outcome> {
    let m = problem.objectives();
    let k = config.num_regions();
    if k == 0 {
        return Ok(Stage3Outcome::default());
    }
    if archive.len() < m + 1 {
        warn!(
            "stage 3: archive has {} member(s), need at least {} to define an interior gap",
            archive.len(),
            m + 1
        );
        return Ok(Stage3Outcome::default());
    }
    let front = archive.front();
    let regions = match m {
        2 => sparsity::sparse_regions_2d(&front, k)?,
        3 => sparsity::sparse_regions_3d(&front, k)?,
        _ => {
            return Err(MpftError::Unsupported(format!(
                "sparse-region detection handles 2 or 3 objectives, got {m}"
            )))
        }
    };
    if regions.len() < k {
        warn!("stage 3: only {} of {} requested regions detectable", regions.len(), k);
    }

    let jobs = effective_jobs(config, regions.len());
    let tasks: Vec<_> = regions
        .iter()
        .enumerate()
        .map(|(region_idx, region)| {
            let region = region.clone();
            move || fill_region(problem, archive, &region, region_idx, config)
        })
        .collect();
    let results = run_parallel(tasks, jobs);

    let mut outcome = Stage3Outcome {
        fills: Vec::with_capacity(regions.len()),
        regions,
        counters: Vec::new(),
    };
    for result in results {
        let (fill, counter) = result?;
        outcome.fills.push(fill);
        outcome.counters.push(counter);
    }
    Ok(outcome)
}

/// Anchor into one region and run the m per-objective sub-tracks.
fn fill_region<P: Problem + ?Sized>(
    problem: &P,
    archive: &ParetoArchive,
    region: &SparseRegion,
    region_idx: usize,
    config: &TrackConfig,
) -> Result<(ParetoArchive, TrackCounter)> {
    let m = problem.objectives();
    let mut counter = TrackCounter::default();

    let warm_start = if config.stage3_warm_start {
        nearest_boundary_policy(archive, region)
    } else {
        None
    };
    let anchor = weight_adjust_anchor(
        problem,
        &region.j_max,
        region_idx,
        config,
        warm_start.as_ref(),
        &mut counter,
    )?;

    let mut fill = ParetoArchive::from_members(vec![anchor.clone()])?;
    let track = format!("interior-{region_idx}");
    let sub_cycles =
        config.psi_interior[region_idx] as u64 / (m as u64 * config.cycle_len());
    for objective in 0..m {
        let mut theta = anchor.params.clone();
        for _ in 0..sub_cycles {
            theta = track_cycle(problem, &theta, objective, config, &mut counter)
                .map_err(|e| track_failure(&track, counter.episodes, e))?;
            let objectives = problem
                .evaluate(&theta)
                .map_err(|e| track_failure(&track, counter.episodes, e))?;
            fill = fill.union_plus(vec![TrackedPolicy {
                params: theta.clone(),
                objectives,
                provenance: Provenance::Interior(region_idx),
                episode_index: counter.episodes,
            }])?;
        }
    }
    Ok((fill, counter))
}

/// The archive member on the region boundary whose objectives sit closest to
/// the steering target.
fn nearest_boundary_policy(archive: &ParetoArchive, region: &SparseRegion) -> Option<PolicyParams> {
    let mut best: Option<(f64, &TrackedPolicy)> = None;
    for member in archive.members() {
        let on_boundary = region
            .boundary_points
            .iter()
            .any(|b| b.values() == member.objectives.values());
        if !on_boundary {
            continue;
        }
        let distance: f64 = member
            .objectives
            .values()
            .iter()
            .zip(region.j_max.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if best.map_or(true, |(d, _)| distance < d) {
            best = Some((distance, member));
        }
    }
    best.map(|(_, member)| member.params.clone())
}

struct ObjectiveTrackOutcome {
    archive: ParetoArchive,
    vertex_episodes: u64,
    total_episodes: u64,
}

fn effective_jobs(config: &TrackConfig, tracks: usize) -> usize {
    config.jobs.unwrap_or(tracks.max(1)).max(1)
}

/// Run independent tasks with at most `jobs` threads, preserving input order.
fn run_parallel<T: Send, F: FnOnce() -> T + Send>(tasks: Vec<F>, jobs: usize) -> Vec<T> {
    if jobs <= 1 || tasks.len() <= 1 {
        return tasks.into_iter().map(|t| t()).collect();
    }
    let mut results: Vec<T> = Vec::with_capacity(tasks.len());
    let mut tasks = tasks;
    while !tasks.is_empty() {
        let wave: Vec<F> = tasks.drain(..tasks.len().min(jobs)).collect();
        let wave_results = std::thread::scope(|scope| {
            let handles: Vec<_> = wave.into_iter().map(|t| scope.spawn(t)).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("track thread panicked"))
                .collect::<Vec<T>>()
        });
        results.extend(wave_results);
    }
    results
}

/// Execute all four stages and assemble the final archive plus its report.
pub fn run_mpft<P: Problem + ?Sized>(
    problem: &P,
    config: &TrackConfig,
) -> Result<(ParetoArchive, RunReport)> {
    let m = problem.objectives();
    config.validate(m)?;

    // Stages 1 and 2: one independent vertex-plus-edge track per objective.
    let jobs = effective_jobs(config, m);
    let tasks: Vec<_> = (0..m)
        .map(|objective| {
            move || -> Result<ObjectiveTrackOutcome> {
                let mut counter = TrackCounter::default();
                let vertex = stage1_vertex(problem, objective, config, &mut counter)?;
                let vertex_episodes = counter.episodes;
                let archive = stage2_track(problem, &vertex, objective, config, &mut counter)?;
                Ok(ObjectiveTrackOutcome {
                    archive,
                    vertex_episodes,
                    total_episodes: counter.episodes,
                })
            }
        })
        .collect();
    let results = run_parallel(tasks, jobs);

    let mut merged = ParetoArchive::new();
    let mut stage1_episodes = 0;
    let mut stage2_episodes = 0;
    for result in results {
        let outcome = result?;
        stage1_episodes += outcome.vertex_episodes;
        stage2_episodes += outcome.total_episodes - outcome.vertex_episodes;
        merged = merged.merge(&outcome.archive)?;
    }
    let after_stage2 = merged.len();

    // Stage 3: fill the sparsest regions.
    let outcome = stage3_fill(problem, &merged, config)?;
    let stage3_episodes: u64 = outcome.counters.iter().map(|c| c.episodes).sum();
    let stage3_kept: usize = outcome.fills.iter().map(|f| f.len()).sum();

    // Stage 4: complete the archive.
    let mut complete = merged;
    for fill in &outcome.fills {
        complete = complete.merge(fill)?;
    }

    let reference_values = config
        .reference_point
        .clone()
        .unwrap_or_else(|| vec![0.0; m]);
    let reference = ObjectiveVector::new(reference_values.clone())?;
    let front = complete.front();
    let hv = metrics::hypervolume(&front, &reference)?;
    let sp = metrics::sparsity(&front).ok();

    let total_episodes = stage1_episodes + stage2_episodes + stage3_episodes;
    let report = RunReport {
        env_steps: metrics::env_steps(config),
        interactions: config.steps * total_episodes,
        hv,
        sp,
        reference_point: reference_values,
        stages: vec![
            StageReport {
                name: "stage1-vertex".into(),
                episodes: stage1_episodes,
                policies_kept: m,
            },
            StageReport {
                name: "stage2-track".into(),
                episodes: stage2_episodes,
                policies_kept: after_stage2,
            },
            StageReport {
                name: "stage3-fill".into(),
                episodes: stage3_episodes,
                policies_kept: stage3_kept,
            },
            StageReport {
                name: "stage4-complete".into(),
                episodes: 0,
                policies_kept: complete.len(),
            },
        ],
        regions: outcome.regions.iter().map(RegionReport::from).collect(),
    };
    Ok((complete, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::dominates;
    use crate::problems::{BiQuadratic, ConcaveGap, TabularMomdp, TabularMomdpSpec};

    fn unit_biquadratic() -> BiQuadratic {
        BiQuadratic::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 2.0]).unwrap()
    }

    fn unit_gap() -> ConcaveGap {
        ConcaveGap::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 2.0]).unwrap()
    }

    fn base_config() -> TrackConfig {
        TrackConfig {
            xi_vertex: vec![500, 500],
            psi_vertex: vec![600, 600],
            lr: 0.05,
            steps: 100,
            seed: 7,
            ..TrackConfig::default_for(2, 0)
        }
    }

    /// Distance from θ to the segment between the two targets.
    fn distance_to_hull(theta: &[f64], t1: &[f64], t2: &[f64]) -> f64 {
        let seg: Vec<f64> = t2.iter().zip(t1).map(|(b, a)| b - a).collect();
        let rel: Vec<f64> = theta.iter().zip(t1).map(|(x, a)| x - a).collect();
        let seg_sq = norm2_sq(&seg);
        let t = if seg_sq == 0.0 {
            0.0
        } else {
            (crate::types::dot(&rel, &seg) / seg_sq).clamp(0.0, 1.0)
        };
        rel.iter()
            .zip(&seg)
            .map(|(r, s)| (r - t * s) * (r - t * s))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn stage1_reaches_first_target() {
        let problem = unit_biquadratic();
        let config = base_config();
        let mut counter = TrackCounter::default();
        let vertex = stage1_vertex(&problem, 0, &config, &mut counter).unwrap();
        assert_eq!(counter.episodes, 500);
        assert_eq!(vertex.episode_index, 500);
        let dist: f64 = vertex
            .params
            .values()
            .iter()
            .zip(&[1.0, 0.0])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(dist <= 1e-2, "vertex missed target: dist {dist}");
        assert!((vertex.objectives.values()[0] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn stage1_vertex_gradient_vanishes() {
        let problem = unit_biquadratic();
        let config = base_config();
        let mut counter = TrackCounter::default();
        let vertex = stage1_vertex(&problem, 0, &config, &mut counter).unwrap();
        let gradient = problem.gradient(&vertex.params).unwrap();
        let own_norm = norm2_sq(gradient.row(0)).sqrt();
        assert!(own_norm <= 1e-3, "‖∇J₀‖ = {own_norm}");
    }

    #[test]
    fn stage1_zero_budget_returns_initial_policy() {
        let problem = unit_biquadratic();
        let config = TrackConfig {
            xi_vertex: vec![0, 0],
            seed: 3,
            ..base_config()
        };
        let mut counter = TrackCounter::default();
        let vertex = stage1_vertex(&problem, 0, &config, &mut counter).unwrap();
        assert_eq!(counter.episodes, 0);
        let mut rng = track_rng(3, 0);
        let expected = sample_initial(&problem, &mut rng).unwrap();
        assert_eq!(vertex.params, expected);
    }

    /// Chain MOMDP where action 0 strictly maximizes objective 0 in every
    /// state while transitions ignore the action.
    fn action0_dominant_momdp() -> TabularMomdp {
        let s_n = 4;
        let mut transitions = vec![vec![vec![0.0; s_n]; 2]; s_n];
        let mut rewards = vec![vec![vec![0.0; 2]; 2]; s_n];
        for s in 0..s_n {
            for a in 0..2 {
                // Move right with probability 1/2 regardless of action.
                let next = (s + 1).min(s_n - 1);
                transitions[s][a][s] += 0.5;
                transitions[s][a][next] += 0.5;
                rewards[s][a] = if a == 0 {
                    vec![1.0, 0.1]
                } else {
                    vec![0.1, 1.0]
                };
            }
        }
        TabularMomdp::from_spec(TabularMomdpSpec {
            num_states: s_n,
            num_actions: 2,
            num_objectives: 2,
            transitions,
            rewards,
            gamma: 0.9,
            horizon: None,
            start: 0,
            done: vec![false; s_n],
        })
        .unwrap()
    }

    #[test]
    fn stage1_momdp_learns_dominant_action() {
        let problem = action0_dominant_momdp();
        let config = TrackConfig {
            xi_vertex: vec![4000, 4000],
            psi_vertex: vec![0, 0],
            lr: 0.5,
            seed: 5,
            ..TrackConfig::default_for(2, 0)
        };
        let mut counter = TrackCounter::default();
        let vertex = stage1_vertex(&problem, 0, &config, &mut counter).unwrap();
        let pi = problem.policy(&vertex.params).unwrap();
        for s in 0..4 {
            assert!(
                pi[s * 2] >= 0.99,
                "state {s}: π(a₀) = {} after stage 1",
                pi[s * 2]
            );
        }
    }

    #[test]
    fn track_cycle_single_ascent_improves_both_objectives() {
        let problem = unit_biquadratic();
        let config = TrackConfig {
            u: 0,
            v: 1,
            ..base_config()
        };
        let start = PolicyParams::new(vec![0.2, 0.2]).unwrap();
        let before = problem.evaluate(&start).unwrap();
        let mut counter = TrackCounter::default();
        let after_params = track_cycle(&problem, &start, 0, &config, &mut counter).unwrap();
        let after = problem.evaluate(&after_params).unwrap();
        assert_eq!(counter.episodes, 1);
        for (b, a) in before.values().iter().zip(after.values()) {
            assert!(a > b, "objective regressed: {b} -> {a}");
        }
        // Equal first-order improvement along the ascent direction.
        let gradient = problem.gradient(&start).unwrap();
        let ascent = pareto_ascent_direction(&gradient).unwrap();
        let p0 = crate::types::dot(gradient.row(0), &ascent.direction);
        let p1 = crate::types::dot(gradient.row(1), &ascent.direction);
        assert!((p0 - p1).abs() <= 1e-9 * (1.0 + p0.abs()));
    }

    #[test]
    fn track_cycle_pure_reverse_follows_other_gradient() {
        let problem = unit_biquadratic();
        let config = TrackConfig {
            u: 1,
            v: 0,
            normalize_steps: false,
            ..base_config()
        };
        let start = PolicyParams::new(vec![0.5, 0.0]).unwrap();
        let gradient = problem.gradient(&start).unwrap();
        let g2 = gradient.row(1).to_vec();
        let mut counter = TrackCounter::default();
        let after = track_cycle(&problem, &start, 0, &config, &mut counter).unwrap();
        for ((a, s), g) in after.values().iter().zip(start.values()).zip(&g2) {
            assert!((a - s - config.lr * g).abs() < 1e-12);
        }
    }

    #[test]
    fn track_cycle_from_vertex_moves_along_front() {
        let problem = unit_biquadratic();
        let config = base_config();
        let vertex = PolicyParams::new(vec![1.0, 0.0]).unwrap();
        let at_vertex = problem.evaluate(&vertex).unwrap();
        let mut counter = TrackCounter::default();
        let after = track_cycle(&problem, &vertex, 0, &config, &mut counter).unwrap();
        let moved = problem.evaluate(&after).unwrap();
        assert!(moved.values()[1] > at_vertex.values()[1]);
        let dist = distance_to_hull(after.values(), &[1.0, 0.0], &[0.0, 1.0]);
        assert!(dist <= 1e-2, "left the optimal segment: {dist}");
    }

    #[test]
    fn stage2_zero_cycles_returns_vertex_only() {
        let problem = unit_biquadratic();
        let config = TrackConfig {
            psi_vertex: vec![2, 2], // below u + v = 3
            ..base_config()
        };
        let mut counter = TrackCounter::default();
        let vertex = stage1_vertex(&problem, 0, &config, &mut counter).unwrap();
        let archive = stage2_track(&problem, &vertex, 0, &config, &mut counter).unwrap();
        assert_eq!(archive.len(), 1);
        assert_eq!(counter.episodes, 500);
    }

    #[test]
    fn stage2_tracks_cover_the_front() {
        let problem = unit_biquadratic();
        let config = base_config();
        let mut total = ParetoArchive::new();
        for objective in 0..2 {
            let mut counter = TrackCounter::default();
            let vertex = stage1_vertex(&problem, objective, &config, &mut counter).unwrap();
            let archive = stage2_track(&problem, &vertex, objective, &config, &mut counter).unwrap();
            assert_eq!(counter.episodes, 500 + 600);
            // Every recorded policy stays near the optimal segment.
            for member in archive.members() {
                let dist = distance_to_hull(member.params.values(), &[1.0, 0.0], &[0.0, 1.0]);
                assert!(dist <= 5e-2, "tracked policy off the front: {dist}");
            }
            total = total.merge(&archive).unwrap();
        }
        let reference = ObjectiveVector::new(vec![0.0, 0.0]).unwrap();
        let hv = metrics::hypervolume(&total.front(), &reference).unwrap();
        let oracle = problem.true_front_hv(&reference, 4000).unwrap();
        assert!(hv >= 0.95 * oracle, "hv {hv} vs oracle {oracle}");
    }

    #[test]
    fn stage2_merge_is_order_independent() {
        let problem = unit_biquadratic();
        let config = base_config();
        let mut archives = Vec::new();
        for objective in 0..2 {
            let mut counter = TrackCounter::default();
            let vertex = stage1_vertex(&problem, objective, &config, &mut counter).unwrap();
            archives.push(stage2_track(&problem, &vertex, objective, &config, &mut counter).unwrap());
        }
        let ab = archives[0].merge(&archives[1]).unwrap();
        let ba = archives[1].merge(&archives[0]).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn adjustment_weights_worked_example() {
        let j_max = ObjectiveVector::new(vec![4.0, 8.0]).unwrap();
        let current = ObjectiveVector::new(vec![2.0, 8.0]).unwrap();
        let w = adjustment_weights(&j_max, &current).unwrap();
        assert!((w.values()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w.values()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn anchor_stops_immediately_when_target_met() {
        let problem = unit_biquadratic();
        let config = TrackConfig {
            xi_interior: vec![50],
            psi_interior: vec![0],
            ..base_config()
        };
        // j_max equal to J at the seeded random start: zero episodes.
        let mut rng = track_rng(config.seed, 2);
        let start = sample_initial(&problem, &mut rng).unwrap();
        let j_at_start = problem.evaluate(&start).unwrap();
        let mut counter = TrackCounter::default();
        let anchor =
            weight_adjust_anchor(&problem, &j_at_start, 0, &config, None, &mut counter).unwrap();
        assert_eq!(counter.episodes, 0);
        assert_eq!(anchor.objectives, j_at_start);
    }

    #[test]
    fn anchor_rejects_non_positive_target() {
        let problem = unit_biquadratic();
        let config = TrackConfig {
            xi_interior: vec![10],
            psi_interior: vec![0],
            ..base_config()
        };
        let j_max = ObjectiveVector::new(vec![1.0, 0.0]).unwrap();
        let mut counter = TrackCounter::default();
        assert!(matches!(
            weight_adjust_anchor(&problem, &j_max, 0, &config, None, &mut counter),
            Err(MpftError::Config(_))
        ));
    }

    fn gap_config(k: usize) -> TrackConfig {
        TrackConfig {
            xi_vertex: vec![300, 300],
            psi_vertex: vec![600, 600],
            xi_interior: vec![150; k],
            psi_interior: vec![450; k],
            lr: 0.05,
            steps: 10,
            seed: 11,
            ..TrackConfig::default_for(2, k)
        }
    }

    #[test]
    fn anchor_lands_in_detected_gap_box() {
        let problem = unit_gap();
        let config = TrackConfig {
            xi_interior: vec![400],
            ..gap_config(1)
        };
        // Build the stage-2 front, then carve out a wide band of the front to
        // leave a genuine sparse region.
        let mut merged = ParetoArchive::new();
        for objective in 0..2 {
            let mut counter = TrackCounter::default();
            let vertex = stage1_vertex(&problem, objective, &config, &mut counter).unwrap();
            let archive = stage2_track(&problem, &vertex, objective, &config, &mut counter).unwrap();
            merged = merged.merge(&archive).unwrap();
        }
        let survivors: Vec<TrackedPolicy> = merged
            .members()
            .iter()
            .filter(|p| {
                let j1 = p.objectives.values()[0];
                !(0.8..=1.5).contains(&j1)
            })
            .cloned()
            .collect();
        let sparse = ParetoArchive::from_members(survivors).unwrap();
        let regions = sparsity::sparse_regions_2d(&sparse.front(), 1).unwrap();
        let region = &regions[0];
        assert!(region.size > 0.5, "carved gap should dominate: {}", region.size);

        let mut counter = TrackCounter::default();
        let anchor =
            weight_adjust_anchor(&problem, &region.j_max, 0, &config, None, &mut counter).unwrap();
        assert!(counter.episodes > 0);
        // Inside the bounding box: component-wise at most j_max and at least
        // the smaller boundary value.
        for i in 0..2 {
            let values: Vec<f64> = region
                .boundary_points
                .iter()
                .map(|b| b.values()[i])
                .collect();
            let floor = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let j = anchor.objectives.values()[i];
            assert!(j <= region.j_max.values()[i] + 1e-6, "J_{i} = {j} above j_max");
            assert!(j >= floor - 1e-6, "J_{i} = {j} below boundary floor {floor}");
        }
    }

    #[test]
    fn stage3_fill_reduces_sparsity_and_keeps_hypervolume() {
        let problem = unit_gap();
        let config = gap_config(1);
        let mut merged = ParetoArchive::new();
        for objective in 0..2 {
            let mut counter = TrackCounter::default();
            let vertex = stage1_vertex(&problem, objective, &config, &mut counter).unwrap();
            let archive = stage2_track(&problem, &vertex, objective, &config, &mut counter).unwrap();
            merged = merged.merge(&archive).unwrap();
        }
        let reference = ObjectiveVector::new(vec![0.0, 0.0]).unwrap();
        let hv_before = metrics::hypervolume(&merged.front(), &reference).unwrap();
        let sp_before = metrics::sparsity(&merged.front()).unwrap();

        let outcome = stage3_fill(&problem, &merged, &config).unwrap();
        assert_eq!(outcome.fills.len(), 1);
        for fill in &outcome.fills {
            // Internally non-dominated by construction; spot-check.
            for a in fill.members() {
                for b in fill.members() {
                    assert!(!dominates(&a.objectives, &b.objectives).unwrap()
                        || a.objectives == b.objectives);
                }
            }
        }
        let mut complete = merged.clone();
        for fill in &outcome.fills {
            complete = complete.merge(fill).unwrap();
        }
        let hv_after = metrics::hypervolume(&complete.front(), &reference).unwrap();
        let sp_after = metrics::sparsity(&complete.front()).unwrap();
        assert!(hv_after >= hv_before, "hv {hv_before} -> {hv_after}");
        assert!(sp_after < sp_before, "sp {sp_before} -> {sp_after}");
    }

    #[test]
    fn stage3_with_zero_regions_is_empty() {
        let problem = unit_gap();
        let config = gap_config(0);
        let archive = ParetoArchive::from_members(vec![crate::archive::policy(&[1.0, 2.0], 0)])
            .unwrap();
        let outcome = stage3_fill(&problem, &archive, &config).unwrap();
        assert!(outcome.fills.is_empty());
        assert!(outcome.regions.is_empty());
    }

    #[test]
    fn run_mpft_vertices_only() {
        let problem = unit_biquadratic();
        let config = TrackConfig {
            xi_vertex: vec![500, 500],
            psi_vertex: vec![0, 0],
            lr: 0.05,
            steps: 100,
            seed: 7,
            ..TrackConfig::default_for(2, 0)
        };
        let (archive, report) = run_mpft(&problem, &config).unwrap();
        assert_eq!(archive.len(), 2);
        assert_eq!(report.interactions, 100 * 1000);
        assert_eq!(report.env_steps, 100 * 1000);
    }

    #[test]
    fn run_mpft_full_budget_reconciles_with_formula() {
        let problem = unit_gap();
        let config = TrackConfig {
            epsilon_anchor: Some(1e-12), // unreachable: anchor consumes its budget
            ..gap_config(1)
        };
        let (_, report) = run_mpft(&problem, &config).unwrap();
        assert_eq!(report.interactions, report.env_steps);
        assert_eq!(report.env_steps, metrics::env_steps(&config));
    }

    #[test]
    fn run_mpft_is_deterministic() {
        let problem = unit_gap();
        let config = gap_config(1);
        let (archive_a, report_a) = run_mpft(&problem, &config).unwrap();
        let (archive_b, report_b) = run_mpft(&problem, &config).unwrap();
        assert_eq!(archive_a, archive_b);
        assert_eq!(report_a, report_b);
        assert_eq!(archive_a.to_csv(), archive_b.to_csv());
        assert_eq!(
            serde_json::to_string(&report_a).unwrap(),
            serde_json::to_string(&report_b).unwrap()
        );
    }

    #[test]
    fn run_mpft_parallel_matches_sequential() {
        let problem = unit_gap();
        let sequential = TrackConfig {
            jobs: Some(1),
            ..gap_config(1)
        };
        let parallel = TrackConfig {
            jobs: Some(4),
            ..gap_config(1)
        };
        let (archive_a, report_a) = run_mpft(&problem, &sequential).unwrap();
        let (archive_b, report_b) = run_mpft(&problem, &parallel).unwrap();
        assert_eq!(archive_a, archive_b);
        assert_eq!(report_a, report_b);
    }

    #[test]
    fn run_mpft_rejects_invalid_config() {
        let problem = unit_biquadratic();
        let config = TrackConfig {
            u: 0,
            v: 0,
            ..TrackConfig::default_for(2, 0)
        };
        assert!(matches!(
            run_mpft(&problem, &config),
            Err(MpftError::Config(_))
        ));
    }

    #[test]
    fn archive_has_no_dominated_members_after_run() {
        let problem = unit_gap();
        let (archive, _) = run_mpft(&problem, &gap_config(1)).unwrap();
        let members = archive.members();
        for a in members {
            for b in members {
                assert!(!dominates(&a.objectives, &b.objectives).unwrap());
            }
        }
    }
}
