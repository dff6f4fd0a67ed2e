//! Non-dominated policy archive with the merge-and-prune operator used to
//! assemble the tracked Pareto front.

use std::cmp::Ordering;

use crate::error::{MpftError, Result};
use crate::types::{lex_cmp, ObjectiveVector, PolicyParams};

/// Objective vectors closer than this per coordinate are treated as the same
/// point, so floating-point noise cannot bloat the archive.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// Where a tracked policy came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    /// Single-objective track for objective `i` (0-based).
    Vertex(usize),
    /// Interior fill track for sparse region `k` (0-based).
    Interior(usize),
    /// Anchor policy steered into sparse region `k` (0-based).
    Anchor(usize),
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Vertex(i) => write!(f, "vertex-{i}"),
            Provenance::Interior(k) => write!(f, "interior-{k}"),
            Provenance::Anchor(k) => write!(f, "anchor-{k}"),
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (kind, idx) = s
            .rsplit_once('-')
            .ok_or_else(|| format!("bad provenance tag {s:?}"))?;
        let idx: usize = idx.parse().map_err(|_| format!("bad track index in {s:?}"))?;
        match kind {
            "vertex" => Ok(Provenance::Vertex(idx)),
            "interior" => Ok(Provenance::Interior(idx)),
            "anchor" => Ok(Provenance::Anchor(idx)),
            _ => Err(format!("unknown provenance kind {kind:?}")),
        }
    }
}

/// A policy snapshot kept by the archive: parameters, their evaluation, and
/// bookkeeping for deterministic tie-breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedPolicy {
    pub params: PolicyParams,
    pub objectives: ObjectiveVector,
    pub provenance: Provenance,
    /// Episodes consumed by the policy's own track when it was recorded.
    pub episode_index: u64,
}

impl TrackedPolicy {
    /// Total order used for duplicate resolution: earliest discovery wins,
    /// ties broken by provenance and then by the raw vectors.
    fn discovery_cmp(&self, other: &Self) -> Ordering {
        self.episode_index
            .cmp(&other.episode_index)
            .then_with(|| self.provenance.cmp(&other.provenance))
            .then_with(|| self.objectives.lex_cmp(&other.objectives))
            .then_with(|| lex_cmp(self.params.values(), other.params.values()))
    }
}

/// Returns true iff `a` dominates `b`: a ≥ b component-wise and a ≠ b.
/// Comparison is exact.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    if a.len() != b.len() {
        return Err(MpftError::Dimension {
            context: "dominates",
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(dominates_same_len(a.values(), b.values()))
}

pub(crate) fn dominates_same_len(a: &[f64], b: &[f64]) -> bool {
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strictly_better = true;
        }
    }
    strictly_better
}

fn near_duplicate(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DUPLICATE_TOL)
}

/// Set of mutually non-dominated tracked policies.
///
/// A value type: mutation happens only through [`ParetoArchive::union_plus`],
/// which makes archives produced by independent tracks safe to merge in any
/// order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoArchive {
    members: Vec<TrackedPolicy>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_members(members: Vec<TrackedPolicy>) -> Result<Self> {
        Self::new().union_plus(members)
    }

    pub fn members(&self) -> &[TrackedPolicy] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// ∪⁺: set union followed by deletion of dominated members. Among
    /// near-identical objective vectors exactly one member is retained,
    /// the one discovered earliest.
    pub fn union_plus(&self, incoming: Vec<TrackedPolicy>) -> Result<Self> {
        let mut candidates: Vec<TrackedPolicy> = self.members.clone();
        candidates.extend(incoming);
        if candidates.is_empty() {
            return Ok(Self::new());
        }

        let m = candidates[0].objectives.len();
        let d = candidates[0].params.dim();
        for c in &candidates {
            if c.objectives.len() != m {
                return Err(MpftError::Dimension {
                    context: "union_plus objectives",
                    expected: m,
                    actual: c.objectives.len(),
                });
            }
            if c.params.dim() != d {
                return Err(MpftError::Dimension {
                    context: "union_plus params",
                    expected: d,
                    actual: c.params.dim(),
                });
            }
        }

        // Deduplicate in discovery order so the earliest member of each
        // near-duplicate cluster survives, independent of input order.
        candidates.sort_by(|a, b| a.discovery_cmp(b));
        let mut unique: Vec<TrackedPolicy> = Vec::with_capacity(candidates.len());
        for cand in candidates {
            if !unique
                .iter()
                .any(|kept| near_duplicate(kept.objectives.values(), cand.objectives.values()))
            {
                unique.push(cand);
            }
        }

        let mut members: Vec<TrackedPolicy> = Vec::with_capacity(unique.len());
        for (i, cand) in unique.iter().enumerate() {
            let dominated = unique.iter().enumerate().any(|(j, other)| {
                j != i && dominates_same_len(other.objectives.values(), cand.objectives.values())
            });
            if !dominated {
                members.push(cand.clone());
            }
        }

        members.sort_by(|a, b| {
            a.objectives
                .lex_cmp(&b.objectives)
                .then_with(|| a.discovery_cmp(b))
        });
        Ok(Self { members })
    }

    /// Merge two archives (counterpart of ∪⁺ on whole sets).
    pub fn merge(&self, other: &ParetoArchive) -> Result<Self> {
        self.union_plus(other.members.clone())
    }

    /// Objective vectors of all members, ascending by objective 1 then
    /// lexicographically.
    pub fn front(&self) -> Vec<ObjectiveVector> {
        // Members are kept in that order already.
        self.members.iter().map(|p| p.objectives.clone()).collect()
    }

    /// One row per member: `track,episode,obj_1..obj_m,theta_1..theta_d`.
    /// Floats carry 17 significant digits and round-trip exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let (m, d) = match self.members.first() {
            Some(p) => (p.objectives.len(), p.params.dim()),
            None => (0, 0),
        };
        out.push_str("track,episode");
        for i in 1..=m {
            out.push_str(&format!(",obj_{i}"));
        }
        for i in 1..=d {
            out.push_str(&format!(",theta_{i}"));
        }
        out.push('\n');
        for p in &self.members {
            out.push_str(&format!("{},{}", p.provenance, p.episode_index));
            for v in p.objectives.values() {
                out.push_str(&format!(",{v:.16e}"));
            }
            for v in p.params.values() {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV produced by [`ParetoArchive::to_csv`]. Rows must already
    /// be mutually non-dominated; the archive invariant is re-checked.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(MpftError::Parse {
            row: 0,
            reason: "empty file".into(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 2 || cols[0] != "track" || cols[1] != "episode" {
            return Err(MpftError::Parse {
                row: 1,
                reason: "expected header track,episode,obj_1..,theta_1..".into(),
            });
        }
        let m = cols.iter().filter(|c| c.starts_with("obj_")).count();
        let d = cols.iter().filter(|c| c.starts_with("theta_")).count();
        if m < 2 || d < 1 || cols.len() != 2 + m + d {
            return Err(MpftError::Parse {
                row: 1,
                reason: format!("bad column layout: {} objectives, {} parameters", m, d),
            });
        }

        let mut members = Vec::new();
        for (idx, line) in lines {
            let row = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(MpftError::Parse {
                    row,
                    reason: format!("expected {} fields, got {}", cols.len(), fields.len()),
                });
            }
            let provenance: Provenance = fields[0].parse().map_err(|reason| MpftError::Parse {
                row,
                reason,
            })?;
            let episode_index: u64 = fields[1].parse().map_err(|_| MpftError::Parse {
                row,
                reason: format!("bad episode index {:?}", fields[1]),
            })?;
            let parse_f64 = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| MpftError::Parse {
                    row,
                    reason: format!("bad float {s:?}"),
                })
            };
            let mut obj = Vec::with_capacity(m);
            for f in &fields[2..2 + m] {
                obj.push(parse_f64(f)?);
            }
            let mut theta = Vec::with_capacity(d);
            for f in &fields[2 + m..] {
                theta.push(parse_f64(f)?);
            }
            members.push(TrackedPolicy {
                params: PolicyParams::new(theta)?,
                objectives: ObjectiveVector::new(obj)?,
                provenance,
                episode_index,
            });
        }
        if members.is_empty() {
            return Err(MpftError::Parse {
                row: 1,
                reason: "no data rows".into(),
            });
        }
        Self::from_members(members)
    }
}

#[cfg(test)]
pub(crate) fn policy(obj: &[f64], episode: u64) -> TrackedPolicy {
    TrackedPolicy {
        params: PolicyParams::new(vec![episode as f64]).unwrap(),
        objectives: ObjectiveVector::new(obj.to_vec()).unwrap(),
        provenance: Provenance::Vertex(0),
        episode_index: episode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(values: &[f64]) -> ObjectiveVector {
        ObjectiveVector::new(values.to_vec()).unwrap()
    }

    fn fronts(archive: &ParetoArchive) -> Vec<Vec<f64>> {
        archive
            .front()
            .iter()
            .map(|o| o.values().to_vec())
            .collect()
    }

    #[test]
    fn dominates_definition() {
        assert!(dominates(&obj(&[2.0, 3.0]), &obj(&[1.0, 3.0])).unwrap());
        assert!(!dominates(&obj(&[2.0, 3.0]), &obj(&[2.0, 3.0])).unwrap());
        assert!(!dominates(&obj(&[2.0, 1.0]), &obj(&[1.0, 3.0])).unwrap());
    }

    #[test]
    fn dominates_length_mismatch_errors() {
        let a = obj(&[1.0, 2.0]);
        let b = obj(&[1.0, 2.0, 3.0]);
        assert!(dominates(&a, &b).is_err());
    }

    #[test]
    fn union_plus_keeps_mutually_non_dominated() {
        let archive = ParetoArchive::from_members(vec![policy(&[1.0, 3.0], 0)]).unwrap();
        let merged = archive.union_plus(vec![policy(&[2.0, 2.0], 1)]).unwrap();
        assert_eq!(fronts(&merged), vec![vec![1.0, 3.0], vec![2.0, 2.0]]);
    }

    #[test]
    fn union_plus_drops_dominated_member() {
        let archive = ParetoArchive::from_members(vec![policy(&[1.0, 3.0], 0)]).unwrap();
        let merged = archive.union_plus(vec![policy(&[2.0, 3.0], 1)]).unwrap();
        assert_eq!(fronts(&merged), vec![vec![2.0, 3.0]]);
    }

    #[test]
    fn union_plus_filters_incoming_batch() {
        let archive =
            ParetoArchive::from_members(vec![policy(&[1.0, 3.0], 0), policy(&[3.0, 1.0], 1)])
                .unwrap();
        let merged = archive
            .union_plus(vec![policy(&[2.0, 2.0], 2), policy(&[0.0, 0.0], 3)])
            .unwrap();
        assert_eq!(
            fronts(&merged),
            vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]]
        );
    }

    #[test]
    fn duplicate_objectives_keep_earliest_episode() {
        let a = policy(&[1.0, 1.0], 5);
        let b = policy(&[1.0, 1.0], 2);
        let merged = ParetoArchive::from_members(vec![a, b]).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.members()[0].episode_index, 2);
    }

    #[test]
    fn near_duplicates_within_tolerance_are_merged() {
        let a = policy(&[1.0, 1.0], 1);
        let b = policy(&[1.0 + 0.5e-12, 1.0 - 0.5e-12], 4);
        let merged = ParetoArchive::from_members(vec![b, a]).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.members()[0].episode_index, 1);
    }

    #[test]
    fn front_is_sorted_ascending_by_first_objective() {
        let archive =
            ParetoArchive::from_members(vec![policy(&[3.0, 1.0], 0), policy(&[1.0, 3.0], 1)])
                .unwrap();
        assert_eq!(fronts(&archive), vec![vec![1.0, 3.0], vec![3.0, 1.0]]);
        assert!(ParetoArchive::new().front().is_empty());
    }

    #[test]
    fn union_plus_is_idempotent() {
        let archive = ParetoArchive::from_members(vec![
            policy(&[1.0, 3.0], 0),
            policy(&[2.0, 2.0], 1),
            policy(&[3.0, 1.0], 2),
        ])
        .unwrap();
        let again = archive.union_plus(archive.members().to_vec()).unwrap();
        assert_eq!(archive, again);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let archive = ParetoArchive::from_members(vec![
            policy(&[1.0 / 3.0, 3.0], 0),
            policy(&[2.0_f64.sqrt(), 1.0], 7),
        ])
        .unwrap();
        let csv = archive.to_csv();
        let parsed = ParetoArchive::from_csv(&csv).unwrap();
        assert_eq!(archive, parsed);
        assert_eq!(csv, parsed.to_csv());
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(ParetoArchive::from_csv("").is_err());
        assert!(ParetoArchive::from_csv("track,episode,obj_1,theta_1\n").is_err());
        let bad_row = "track,episode,obj_1,obj_2,theta_1\nvertex-0,0,1.0,nope,0.0\n";
        match ParetoArchive::from_csv(bad_row) {
            Err(MpftError::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
