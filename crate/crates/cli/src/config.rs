//! Experiment configuration: one flat JSON document carrying the problem
//! definition, the tracking budgets, and output options.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use mpft_core::problems::{BiQuadratic, ConcaveGap, Problem, TabularMomdp, TabularMomdpSpec};
use mpft_core::tracker::TrackConfig;

/// A per-track budget: a single value applied uniformly, or one entry per
/// track.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Budget {
    Uniform(u32),
    PerTrack(Vec<u32>),
}

impl Budget {
    fn expand(&self, tracks: usize, what: &str) -> Result<Vec<u32>, String> {
        match self {
            Budget::Uniform(value) => Ok(vec![*value; tracks]),
            Budget::PerTrack(values) => {
                if values.len() != tracks {
                    return Err(format!(
                        "{what}: expected {tracks} entries, got {}",
                        values.len()
                    ));
                }
                Ok(values.clone())
            }
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Biquadratic {
        targets: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        #[serde(default)]
        bounds: Option<[Vec<f64>; 2]>,
    },
    ConcaveGap {
        targets: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        #[serde(default)]
        bump_height: Option<f64>,
        #[serde(default)]
        bump_sigma: Option<f64>,
        #[serde(default)]
        bounds: Option<[Vec<f64>; 2]>,
    },
    /// Tabular MOMDP, inline or loaded from a JSON file relative to the
    /// config's directory.
    TabularMomdp {
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        spec: Option<TabularMomdpSpec>,
    },
}

impl ProblemSpec {
    pub fn build(&self, config_dir: &Path) -> Result<Box<dyn Problem>, String> {
        match self {
            ProblemSpec::Biquadratic {
                targets,
                offsets,
                bounds,
            } => {
                let mut problem = BiQuadratic::new(targets.clone(), offsets.clone())
                    .map_err(|e| e.to_string())?;
                if let Some([lo, hi]) = bounds {
                    problem = problem
                        .with_bounds(lo.clone(), hi.clone())
                        .map_err(|e| e.to_string())?;
                }
                Ok(Box::new(problem))
            }
            ProblemSpec::ConcaveGap {
                targets,
                offsets,
                bump_height,
                bump_sigma,
                bounds,
            } => {
                let mut problem = ConcaveGap::with_bump(
                    targets.clone(),
                    offsets.clone(),
                    bump_height.unwrap_or(ConcaveGap::DEFAULT_BUMP_HEIGHT),
                    bump_sigma.unwrap_or(ConcaveGap::DEFAULT_BUMP_SIGMA),
                )
                .map_err(|e| e.to_string())?;
                if let Some([lo, hi]) = bounds {
                    problem = problem
                        .with_bounds(lo.clone(), hi.clone())
                        .map_err(|e| e.to_string())?;
                }
                Ok(Box::new(problem))
            }
            ProblemSpec::TabularMomdp { path, spec } => match (path, spec) {
                (Some(path), None) => {
                    let resolved = config_dir.join(path);
                    let text = std::fs::read_to_string(&resolved)
                        .map_err(|e| format!("cannot read {}: {e}", resolved.display()))?;
                    Ok(Box::new(TabularMomdp::from_json(&text).map_err(|e| e.to_string())?))
                }
                (None, Some(spec)) => Ok(Box::new(
                    TabularMomdp::from_spec(spec.clone()).map_err(|e| e.to_string())?,
                )),
                _ => Err("tabular_momdp needs exactly one of \"path\" or \"spec\"".into()),
            },
        }
    }
}

/// The experiment file. Budgets accept a scalar (uniform) or a list.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub xi_vertex: Budget,
    pub psi_vertex: Budget,
    /// Number of sparse regions to fill in stage 3.
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub xi_interior: Option<Budget>,
    #[serde(default)]
    pub psi_interior: Option<Budget>,
    pub u: u32,
    pub v: u32,
    pub steps: u64,
    pub lr: f64,
    #[serde(default)]
    pub epsilon_anchor: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub normalize_steps: bool,
    #[serde(default)]
    pub stage3_warm_start: bool,
    #[serde(default)]
    pub reference_point: Option<Vec<f64>>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default = "default_true")]
    pub write_svg: bool,
}

impl ExperimentConfig {
    /// Expand budgets against the problem's objective count and validate
    /// everything before any computation runs.
    pub fn track_config(&self, objectives: usize) -> Result<TrackConfig, String> {
        let xi_vertex = self.xi_vertex.expand(objectives, "xi_vertex")?;
        let psi_vertex = self.psi_vertex.expand(objectives, "psi_vertex")?;
        let (xi_interior, psi_interior) = if self.k == 0 {
            if self.xi_interior.is_some() || self.psi_interior.is_some() {
                return Err("xi_interior/psi_interior given but k = 0".into());
            }
            (Vec::new(), Vec::new())
        } else {
            let xi = self
                .xi_interior
                .as_ref()
                .ok_or("k > 0 requires xi_interior")?
                .expand(self.k, "xi_interior")?;
            let psi = self
                .psi_interior
                .as_ref()
                .ok_or("k > 0 requires psi_interior")?
                .expand(self.k, "psi_interior")?;
            (xi, psi)
        };
        let config = TrackConfig {
            xi_vertex,
            psi_vertex,
            xi_interior,
            psi_interior,
            u: self.u,
            v: self.v,
            steps: self.steps,
            lr: self.lr,
            epsilon_anchor: self.epsilon_anchor,
            seed: self.seed,
            normalize_steps: self.normalize_steps,
            stage3_warm_start: self.stage3_warm_start,
            reference_point: self.reference_point.clone(),
            jobs: self.jobs,
        };
        config.validate(objectives).map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(k_part: &str) -> String {
        format!(
            r#"{{
                "problem": {{"kind": "biquadratic", "targets": [[1.0, 0.0], [0.0, 1.0]], "offsets": [2.0, 2.0]}},
                "xi_vertex": 10,
                "psi_vertex": [6, 9],
                {k_part}
                "u": 1, "v": 2, "steps": 100, "lr": 0.05
            }}"#
        )
    }

    #[test]
    fn scalar_budgets_expand_per_track() {
        let config: ExperimentConfig = serde_json::from_str(&minimal("\"k\": 0,")).unwrap();
        let track = config.track_config(2).unwrap();
        assert_eq!(track.xi_vertex, vec![10, 10]);
        assert_eq!(track.psi_vertex, vec![6, 9]);
        assert!(track.xi_interior.is_empty());
    }

    #[test]
    fn interior_budgets_required_when_k_positive() {
        let config: ExperimentConfig = serde_json::from_str(&minimal("\"k\": 2,")).unwrap();
        assert!(config.track_config(2).is_err());
        let with_budgets: ExperimentConfig = serde_json::from_str(&minimal(
            "\"k\": 2, \"xi_interior\": 5, \"psi_interior\": [30, 60],",
        ))
        .unwrap();
        let track = with_budgets.track_config(2).unwrap();
        assert_eq!(track.xi_interior, vec![5, 5]);
        assert_eq!(track.psi_interior, vec![30, 60]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = minimal("\"k\": 0, \"typo_field\": 1,");
        assert!(serde_json::from_str::<ExperimentConfig>(&text).is_err());
    }

    #[test]
    fn invalid_schedule_is_rejected() {
        let config: ExperimentConfig = serde_json::from_str(
            &minimal("\"k\": 0,").replace("\"u\": 1, \"v\": 2", "\"u\": 0, \"v\": 0"),
        )
        .unwrap();
        let err = config.track_config(2).unwrap_err();
        assert!(err.contains("u + v"), "unexpected message: {err}");
    }

    #[test]
    fn builds_momdp_from_inline_spec() {
        let text = r#"{
            "problem": {"kind": "tabular_momdp", "spec": {
                "S": 1, "A": 1, "m": 2,
                "P": [[[1.0]]], "R": [[[1.0, 2.0]]],
                "gamma": 0.5, "T": null, "start": 0, "done": [false]
            }},
            "xi_vertex": 1, "psi_vertex": 0,
            "u": 1, "v": 2, "steps": 10, "lr": 0.1
        }"#;
        let config: ExperimentConfig = serde_json::from_str(text).unwrap();
        let problem = config.problem.build(Path::new(".")).unwrap();
        assert_eq!(problem.objectives(), 2);
        assert_eq!(problem.dim(), 1);
    }
}
