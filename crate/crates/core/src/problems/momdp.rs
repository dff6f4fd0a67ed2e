//! Tabular multi-objective MDP with exact evaluation and exact policy
//! gradients. The policy is a softmax over per-state logits, so the return is
//! smooth in θ and the gradient can be derived from occupancies and
//! per-objective advantages with no sampling at all. A REINFORCE-style
//! estimator with a value baseline is provided for gradient-fidelity tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MpftError, Result};
use crate::problems::Problem;
use crate::types::{GradientMatrix, ObjectiveVector, PolicyParams};

/// Tail mass below which the infinite-horizon discounted sum is truncated.
const SERIES_TAIL_TOL: f64 = 1e-12;
/// Hard cap on the truncated horizon.
const MAX_EFFECTIVE_HORIZON: usize = 200_000;

/// Serialized form of a tabular MOMDP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularMomdpSpec {
    #[serde(rename = "S")]
    pub num_states: usize,
    #[serde(rename = "A")]
    pub num_actions: usize,
    #[serde(rename = "m")]
    pub num_objectives: usize,
    /// Transition tensor P[s][a][s'].
    #[serde(rename = "P")]
    pub transitions: Vec<Vec<Vec<f64>>>,
    /// Reward tensor R[s][a][i].
    #[serde(rename = "R")]
    pub rewards: Vec<Vec<Vec<f64>>>,
    pub gamma: f64,
    /// Horizon; null means infinite (the discounted series is truncated at
    /// 1e-12 relative tail mass).
    #[serde(rename = "T", default)]
    pub horizon: Option<u32>,
    pub start: usize,
    /// Termination flag per state; entering a terminal state ends the episode
    /// with no further reward.
    pub done: Vec<bool>,
}

/// Tabular MOMDP with a softmax policy over per-state logits
/// (d = S·A parameters).
#[derive(Debug, Clone)]
pub struct TabularMomdp {
    num_states: usize,
    num_actions: usize,
    num_objectives: usize,
    /// Flattened [s][a][s'].
    transitions: Vec<f64>,
    /// Flattened [s][a][i].
    rewards: Vec<f64>,
    gamma: f64,
    start: usize,
    done: Vec<bool>,
    /// Number of timesteps the truncated return sums over.
    effective_horizon: usize,
}

impl TabularMomdp {
    pub fn from_spec(spec: TabularMomdpSpec) -> Result<Self> {
        let (s_n, a_n, m) = (spec.num_states, spec.num_actions, spec.num_objectives);
        if s_n == 0 || a_n == 0 {
            return Err(MpftError::Config("MOMDP needs S >= 1 and A >= 1".into()));
        }
        if m < 2 {
            return Err(MpftError::Dimension {
                context: "MOMDP objectives",
                expected: 2,
                actual: m,
            });
        }
        if !(0.0..1.0).contains(&spec.gamma) {
            return Err(MpftError::Config(format!(
                "gamma must lie in [0, 1), got {}",
                spec.gamma
            )));
        }
        if spec.start >= s_n {
            return Err(MpftError::Config(format!(
                "start state {} out of range (S = {s_n})",
                spec.start
            )));
        }
        if spec.done.len() != s_n {
            return Err(MpftError::Dimension {
                context: "MOMDP done flags",
                expected: s_n,
                actual: spec.done.len(),
            });
        }
        if spec.transitions.len() != s_n || spec.rewards.len() != s_n {
            return Err(MpftError::Config("P and R must have S outer entries".into()));
        }

        let mut transitions = Vec::with_capacity(s_n * a_n * s_n);
        let mut rewards = Vec::with_capacity(s_n * a_n * m);
        for s in 0..s_n {
            if spec.transitions[s].len() != a_n || spec.rewards[s].len() != a_n {
                return Err(MpftError::Config(format!(
                    "state {s}: P and R must have A action entries"
                )));
            }
            for a in 0..a_n {
                let row = &spec.transitions[s][a];
                if row.len() != s_n {
                    return Err(MpftError::Dimension {
                        context: "MOMDP transition row",
                        expected: s_n,
                        actual: row.len(),
                    });
                }
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-12 {
                    return Err(MpftError::Config(format!(
                        "transition row (s={s}, a={a}) is not a distribution (sum {sum})"
                    )));
                }
                transitions.extend_from_slice(row);
                let r = &spec.rewards[s][a];
                if r.len() != m {
                    return Err(MpftError::Dimension {
                        context: "MOMDP reward row",
                        expected: m,
                        actual: r.len(),
                    });
                }
                if !r.iter().all(|v| v.is_finite()) {
                    return Err(MpftError::NonFinite("MOMDP rewards"));
                }
                rewards.extend_from_slice(r);
            }
        }

        let max_reward = rewards.iter().fold(0.0_f64, |acc, r| acc.max(r.abs()));
        let effective_horizon =
            effective_horizon(spec.gamma, max_reward, spec.horizon);

        Ok(Self {
            num_states: s_n,
            num_actions: a_n,
            num_objectives: m,
            transitions,
            rewards,
            gamma: spec.gamma,
            start: spec.start,
            done: spec.done,
            effective_horizon,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TabularMomdpSpec = serde_json::from_str(text)
            .map_err(|e| MpftError::Config(format!("MOMDP JSON: {e}")))?;
        Self::from_spec(spec)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn start_state(&self) -> usize {
        self.start
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.done[s]
    }

    fn p(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transitions[(s * self.num_actions + a) * self.num_states + s2]
    }

    fn r(&self, s: usize, a: usize, i: usize) -> f64 {
        self.rewards[(s * self.num_actions + a) * self.num_objectives + i]
    }

    /// Row-stochastic softmax policy π(a|s) from the flat logits.
    pub fn policy(&self, theta: &PolicyParams) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let (s_n, a_n) = (self.num_states, self.num_actions);
        let mut pi = vec![0.0; s_n * a_n];
        for s in 0..s_n {
            let logits = &theta.values()[s * a_n..(s + 1) * a_n];
            let max = logits.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let mut sum = 0.0;
            for (slot, &x) in pi[s * a_n..(s + 1) * a_n].iter_mut().zip(logits) {
                *slot = (x - max).exp();
                sum += *slot;
            }
            for slot in &mut pi[s * a_n..(s + 1) * a_n] {
                *slot /= sum;
            }
        }
        Ok(pi)
    }

    fn check_theta(&self, theta: &PolicyParams) -> Result<()> {
        if theta.dim() != self.dim() {
            return Err(MpftError::Dimension {
                context: "MOMDP theta",
                expected: self.dim(),
                actual: theta.dim(),
            });
        }
        Ok(())
    }

    /// Alive occupancy d_t(s) for t = 0..T_eff: probability of being in a
    /// non-terminal state s at time t. Mass entering a terminal state is
    /// dropped, matching the termination mask of the return.
    fn occupancies(&self, pi: &[f64]) -> Vec<Vec<f64>> {
        let (s_n, a_n) = (self.num_states, self.num_actions);
        let mut all = Vec::with_capacity(self.effective_horizon);
        let mut dist = vec![0.0; s_n];
        if !self.done[self.start] {
            dist[self.start] = 1.0;
        }
        for _ in 0..self.effective_horizon {
            all.push(dist.clone());
            let mut next = vec![0.0; s_n];
            for s in 0..s_n {
                if dist[s] == 0.0 {
                    continue;
                }
                for a in 0..a_n {
                    let w = dist[s] * pi[s * a_n + a];
                    if w == 0.0 {
                        continue;
                    }
                    for s2 in 0..s_n {
                        if !self.done[s2] {
                            next[s2] += w * self.p(s, a, s2);
                        }
                    }
                }
            }
            dist = next;
            if dist.iter().all(|&x| x == 0.0) {
                break;
            }
        }
        all
    }

    /// Time-indexed state values V_t(s) per objective, by backward induction
    /// over the truncated horizon. Layout: values[t][s * m + i].
    fn state_values(&self, pi: &[f64], horizon: usize) -> Vec<Vec<f64>> {
        let (s_n, a_n, m) = (self.num_states, self.num_actions, self.num_objectives);
        let mut values = vec![vec![0.0; s_n * m]; horizon + 1];
        for t in (0..horizon).rev() {
            for s in 0..s_n {
                if self.done[s] {
                    continue;
                }
                for a in 0..a_n {
                    let pa = pi[s * a_n + a];
                    if pa == 0.0 {
                        continue;
                    }
                    for i in 0..m {
                        let mut q = self.r(s, a, i);
                        for s2 in 0..s_n {
                            if !self.done[s2] {
                                q += self.gamma * self.p(s, a, s2) * values[t + 1][s2 * m + i];
                            }
                        }
                        values[t][s * m + i] += pa * q;
                    }
                }
            }
        }
        values
    }
}

/// Smallest horizon whose discounted tail is below the truncation tolerance.
fn effective_horizon(gamma: f64, max_reward: f64, horizon: Option<u32>) -> usize {
    let truncated = if max_reward == 0.0 {
        1
    } else if gamma == 0.0 {
        1
    } else {
        // gamma^n * maxR / (1 - gamma) < tol
        let n = ((SERIES_TAIL_TOL * (1.0 - gamma) / max_reward).ln() / gamma.ln()).ceil();
        (n.max(1.0) as usize).min(MAX_EFFECTIVE_HORIZON)
    };
    match horizon {
        // Eq-style finite horizon sums t = 0..=T.
        Some(t) => truncated.min(t as usize + 1),
        None => truncated,
    }
}

impl Problem for TabularMomdp {
    fn objectives(&self) -> usize {
        self.num_objectives
    }

    fn dim(&self) -> usize {
        self.num_states * self.num_actions
    }

    fn nonnegative(&self) -> bool {
        self.rewards.iter().all(|&r| r >= 0.0)
    }

    fn init_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-1.0; self.dim()], vec![1.0; self.dim()])
    }

    /// Exact J(θ) by forward dynamic programming over the alive occupancy.
    fn evaluate(&self, theta: &PolicyParams) -> Result<ObjectiveVector> {
        let pi = self.policy(theta)?;
        let (s_n, a_n, m) = (self.num_states, self.num_actions, self.num_objectives);
        let mut totals = vec![0.0; m];
        let mut dist = vec![0.0; s_n];
        if !self.done[self.start] {
            dist[self.start] = 1.0;
        }
        let mut discount = 1.0;
        for _ in 0..self.effective_horizon {
            let mut next = vec![0.0; s_n];
            for s in 0..s_n {
                if dist[s] == 0.0 {
                    continue;
                }
                for a in 0..a_n {
                    let w = dist[s] * pi[s * a_n + a];
                    if w == 0.0 {
                        continue;
                    }
                    for (i, total) in totals.iter_mut().enumerate() {
                        *total += discount * w * self.r(s, a, i);
                    }
                    for s2 in 0..s_n {
                        if !self.done[s2] {
                            next[s2] += w * self.p(s, a, s2);
                        }
                    }
                }
            }
            dist = next;
            discount *= self.gamma;
            if dist.iter().all(|&x| x == 0.0) {
                break;
            }
        }
        ObjectiveVector::new(totals)
    }

    /// Exact ∇J(θ): γ-discounted occupancies combined with time-indexed
    /// per-objective advantages. For the softmax policy,
    /// ∂J_i/∂θ[s,a] = Σ_t γ^t d_t(s) π(a|s) (Q_t,i(s,a) − V_t,i(s)).
    fn gradient(&self, theta: &PolicyParams) -> Result<GradientMatrix> {
        let pi = self.policy(theta)?;
        let (s_n, a_n, m) = (self.num_states, self.num_actions, self.num_objectives);
        let occupancies = self.occupancies(&pi);
        let horizon = occupancies.len();
        let values = self.state_values(&pi, horizon);

        let mut rows = vec![vec![0.0; self.dim()]; m];
        let mut discount = 1.0;
        for (t, dist) in occupancies.iter().enumerate() {
            for s in 0..s_n {
                if dist[s] == 0.0 || self.done[s] {
                    continue;
                }
                for a in 0..a_n {
                    let pa = pi[s * a_n + a];
                    if pa == 0.0 {
                        continue;
                    }
                    for i in 0..m {
                        let mut q = self.r(s, a, i);
                        for s2 in 0..s_n {
                            if !self.done[s2] {
                                q += self.gamma * self.p(s, a, s2) * values[t + 1][s2 * m + i];
                            }
                        }
                        let advantage = q - values[t][s * m + i];
                        rows[i][s * a_n + a] += discount * dist[s] * pa * advantage;
                    }
                }
            }
            discount *= self.gamma;
        }
        GradientMatrix::new(rows)
    }
}

impl TabularMomdp {
    /// REINFORCE-with-baseline policy-gradient estimate from Monte-Carlo
    /// rollouts. Unbiased for the same truncated objective as `evaluate`,
    /// deterministic given the seed. Returns the estimate together with the
    /// total number of simulated environment timesteps.
    pub fn sampled_gradient(
        &self,
        theta: &PolicyParams,
        episodes: u32,
        seed: u64,
    ) -> Result<(GradientMatrix, u64)> {
        if episodes == 0 {
            return Err(MpftError::Config("sampled_gradient needs episodes >= 1".into()));
        }
        let pi = self.policy(theta)?;
        let (s_n, a_n, m) = (self.num_states, self.num_actions, self.num_objectives);
        let horizon = self.effective_horizon;
        let baselines = self.state_values(&pi, horizon);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = vec![vec![0.0; self.dim()]; m];
        let mut total_steps: u64 = 0;

        let sample_index = |rng: &mut ChaCha8Rng, weights: &[f64]| -> usize {
            let x: f64 = rng.gen();
            let mut cumulative = 0.0;
            for (idx, &w) in weights.iter().enumerate() {
                cumulative += w;
                if x < cumulative {
                    return idx;
                }
            }
            weights.len() - 1
        };

        let mut trajectory: Vec<(usize, usize)> = Vec::with_capacity(horizon);
        let mut returns: Vec<f64> = Vec::new();
        for _ in 0..episodes {
            trajectory.clear();
            let mut s = self.start;
            for _ in 0..horizon {
                if self.done[s] {
                    break;
                }
                let a = sample_index(&mut rng, &pi[s * a_n..(s + 1) * a_n]);
                trajectory.push((s, a));
                let row = &self.transitions
                    [(s * a_n + a) * s_n..(s * a_n + a + 1) * s_n];
                s = sample_index(&mut rng, row);
            }
            total_steps += trajectory.len() as u64;

            // Discounted returns-to-go per objective, computed backwards.
            returns.clear();
            returns.resize(trajectory.len() * m, 0.0);
            let mut tail = vec![0.0; m];
            for (t, &(s, a)) in trajectory.iter().enumerate().rev() {
                for i in 0..m {
                    tail[i] = self.r(s, a, i) + self.gamma * tail[i];
                    returns[t * m + i] = tail[i];
                }
            }

            let mut discount = 1.0;
            for (t, &(s, a)) in trajectory.iter().enumerate() {
                for i in 0..m {
                    let advantage = returns[t * m + i] - baselines[t][s * m + i];
                    let scale = discount * advantage;
                    for b in 0..a_n {
                        let indicator = if b == a { 1.0 } else { 0.0 };
                        rows[i][s * a_n + b] += scale * (indicator - pi[s * a_n + b]);
                    }
                }
                discount *= self.gamma;
            }
        }

        for row in &mut rows {
            for g in row.iter_mut() {
                *g /= episodes as f64;
            }
        }
        Ok((GradientMatrix::new(rows)?, total_steps))
    }
}
