//! Sparse-region detection on a tracked front. Two objectives: sort by the
//! first objective and rank the adjacent Euclidean gaps. Three objectives:
//! project onto the best-fit plane (PCA), triangulate (Bowyer–Watson), and
//! rank triangles by projected area. Each region reports its boundary points
//! and their element-wise maximum, the steering target for interior tracking.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{MpftError, Result};
use crate::types::ObjectiveVector;

/// A detected sparse region of the front.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRegion {
    /// Segment endpoints (two objectives) or triangle vertices (three).
    pub boundary_points: Vec<ObjectiveVector>,
    /// Euclidean gap length or projected triangle area.
    pub size: f64,
    /// Element-wise maximum of the boundary points.
    pub j_max: ObjectiveVector,
}

/// Serialized form embedded in run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub boundary_points: Vec<Vec<f64>>,
    pub size: f64,
    pub j_max: Vec<f64>,
}

impl From<&SparseRegion> for RegionReport {
    fn from(region: &SparseRegion) -> Self {
        Self {
            boundary_points: region
                .boundary_points
                .iter()
                .map(|p| p.values().to_vec())
                .collect(),
            size: region.size,
            j_max: region.j_max.values().to_vec(),
        }
    }
}

fn element_wise_max(points: &[ObjectiveVector]) -> Result<ObjectiveVector> {
    let m = points[0].len();
    let mut out = points[0].values().to_vec();
    for p in &points[1..] {
        for (slot, v) in out.iter_mut().zip(p.values()) {
            *slot = slot.max(*v);
        }
    }
    debug_assert_eq!(out.len(), m);
    ObjectiveVector::new(out)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(MpftError::Config("sparse-region count K must be >= 1".into()));
    }
    Ok(())
}

/// Top-K sparse regions of a two-objective front: the K largest adjacent
/// Euclidean gaps after sorting by the first objective, largest first. Ties
/// prefer the gap whose left endpoint has the lower first objective.
pub fn sparse_regions_2d(front: &[ObjectiveVector], k: usize) -> Result<Vec<SparseRegion>> {
    check_k(k)?;
    if front.len() < 2 {
        warn!("sparse_regions_2d: front has {} point(s), no gaps", front.len());
        return Ok(Vec::new());
    }
    let mut sorted: Vec<&ObjectiveVector> = front.iter().collect();
    sorted.sort_by(|a, b| a.lex_cmp(b));

    let mut gaps: Vec<(f64, usize)> = sorted
        .windows(2)
        .enumerate()
        .map(|(i, w)| (euclidean(w[0].values(), w[1].values()), i))
        .collect();
    gaps.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| sorted[a.1].lex_cmp(sorted[b.1]))
    });

    gaps.iter()
        .take(k.min(gaps.len()))
        .map(|&(size, i)| {
            let boundary_points = vec![sorted[i].clone(), sorted[i + 1].clone()];
            let j_max = element_wise_max(&boundary_points)?;
            Ok(SparseRegion {
                boundary_points,
                size,
                j_max,
            })
        })
        .collect()
}

/// Basis returned by [`pca_project`]: enough to map plane coordinates back
/// into objective space.
#[derive(Debug, Clone)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// The two dominant principal axes, unit length.
    pub axes: [Vec<f64>; 2],
    /// All three eigenvalues, descending.
    pub eigenvalues: [f64; 3],
}

impl PcaBasis {
    /// Map plane coordinates back to the embedded 3-D plane.
    pub fn back_map(&self, point: &[f64; 2]) -> Vec<f64> {
        (0..3)
            .map(|j| self.mean[j] + point[0] * self.axes[0][j] + point[1] * self.axes[1][j])
            .collect()
    }
}

/// Cyclic Jacobi diagonalization of a symmetric 3×3 matrix. Returns
/// eigenvalues (unsorted) and the matching eigenvectors as columns.
fn jacobi_eigen_3x3(mut a: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut v = [[0.0; 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, &x| acc.max(x.abs()))
        .max(1e-300);
    for _ in 0..100 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if off <= (1e-15 * scale) * (1e-15 * scale) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() <= 1e-300 {
                continue;
            }
            let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            for j in 0..3 {
                let (ajp, ajq) = (a[j][p], a[j][q]);
                a[j][p] = c * ajp - s * ajq;
                a[j][q] = s * ajp + c * ajq;
            }
            for j in 0..3 {
                let (apj, aqj) = (a[p][j], a[q][j]);
                a[p][j] = c * apj - s * aqj;
                a[q][j] = s * apj + c * aqj;
            }
            for row in &mut v {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

/// Project three-objective points onto their best-fit plane. Axes are the
/// top-2 covariance eigenvectors, descending by eigenvalue, with the sign
/// convention that each axis's first non-zero component is positive.
pub fn pca_project(points: &[ObjectiveVector]) -> Result<(Vec<[f64; 2]>, PcaBasis)> {
    if points.len() < 3 {
        return Err(MpftError::Degenerate(format!(
            "PCA projection needs at least 3 points, got {}",
            points.len()
        )));
    }
    for p in points {
        if p.len() != 3 {
            return Err(MpftError::Dimension {
                context: "pca_project",
                expected: 3,
                actual: p.len(),
            });
        }
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; 3];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.values()) {
            *m += v / n;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for p in points {
        let centered: Vec<f64> = p.values().iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += centered[i] * centered[j] / n;
            }
        }
    }
    let trace = cov[0][0] + cov[1][1] + cov[2][2];
    if trace <= 1e-24 {
        return Err(MpftError::Degenerate(
            "PCA input has zero variance (all points identical)".into(),
        ));
    }

    let (eigenvalues, vectors) = jacobi_eigen_3x3(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));
    let mut axes: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| (0..3).map(|i| vectors[i][k]).collect())
        .collect();
    for axis in &mut axes {
        if let Some(first) = axis.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                for x in axis.iter_mut() {
                    *x = -*x;
                }
            }
        }
    }
    let basis = PcaBasis {
        mean: mean.clone(),
        axes: [axes[0].clone(), axes[1].clone()],
        eigenvalues: [
            eigenvalues[order[0]],
            eigenvalues[order[1]],
            eigenvalues[order[2]],
        ],
    };
    let projected: Vec<[f64; 2]> = points
        .iter()
        .map(|p| {
            let centered: Vec<f64> = p.values().iter().zip(&mean).map(|(v, m)| v - m).collect();
            [
                centered.iter().zip(&basis.axes[0]).map(|(a, b)| a * b).sum(),
                centered.iter().zip(&basis.axes[1]).map(|(a, b)| a * b).sum(),
            ]
        })
        .collect();
    Ok((projected, basis))
}

fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// In-circle determinant for the counter-clockwise triangle (a, b, c):
/// positive when p lies strictly inside the circumcircle.
fn incircle_det(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2], p: &[f64; 2]) -> f64 {
    let m: [[f64; 3]; 3] = [
        [a[0] - p[0], a[1] - p[1], (a[0] - p[0]).powi(2) + (a[1] - p[1]).powi(2)],
        [b[0] - p[0], b[1] - p[1], (b[0] - p[0]).powi(2) + (b[1] - p[1]).powi(2)],
        [c[0] - p[0], c[1] - p[1], (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2)],
    ];
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Bowyer–Watson incremental Delaunay triangulation.
///
/// Returns index triples into the input slice; coincident points are merged
/// onto their lowest index first. Every returned triangle satisfies the
/// empty-circumcircle property; exactly cocircular configurations resolve to
/// the diagonal containing the lowest merged index.
pub fn delaunay(points: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    // Merge coincident points.
    let mut representatives: Vec<usize> = Vec::with_capacity(points.len());
    let mut unique: Vec<(usize, [f64; 2])> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(MpftError::NonFinite("delaunay input"));
        }
        match unique.iter().find(|(_, q)| {
            (q[0] - p[0]).abs() <= 1e-12 && (q[1] - p[1]).abs() <= 1e-12
        }) {
            Some(&(rep, _)) => {
                warn!("delaunay: point {i} coincides with point {rep}, merged");
                representatives.push(rep);
            }
            None => {
                representatives.push(i);
                unique.push((i, *p));
            }
        }
    }
    if unique.len() < 3 {
        return Err(MpftError::Degenerate(format!(
            "triangulation needs 3 distinct points, got {}",
            unique.len()
        )));
    }

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for (_, p) in &unique {
        for j in 0..2 {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);

    let collinear = {
        let a = unique[0].1;
        let b = unique
            .iter()
            .map(|&(_, p)| p)
            .find(|p| euclidean(p, &a) > 1e-12)
            .unwrap_or(a);
        unique
            .iter()
            .all(|&(_, p)| cross(&a, &b, &p).abs() <= 1e-12 * span * span)
    };
    if collinear {
        return Err(MpftError::Degenerate("all points collinear".into()));
    }

    // Local vertex list: unique points followed by three far-away super
    // vertices enclosing everything.
    let n = unique.len();
    let cx = (lo[0] + hi[0]) / 2.0;
    let cy = (lo[1] + hi[1]) / 2.0;
    let r = span * 64.0;
    let mut verts: Vec<[f64; 2]> = unique.iter().map(|&(_, p)| p).collect();
    verts.push([cx - 2.0 * r, cy - r]);
    verts.push([cx + 2.0 * r, cy - r]);
    verts.push([cx, cy + 2.0 * r]);

    let eps_circle = 1e-10 * span.powi(4);
    let oriented = |t: &[usize; 3]| -> [usize; 3] {
        if cross(&verts[t[0]], &verts[t[1]], &verts[t[2]]) < 0.0 {
            [t[0], t[2], t[1]]
        } else {
            *t
        }
    };

    let mut triangles: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    for idx in 0..n {
        let p = verts[idx];
        let mut bad = Vec::new();
        for (ti, t) in triangles.iter().enumerate() {
            let t = oriented(t);
            if incircle_det(&verts[t[0]], &verts[t[1]], &verts[t[2]], &p) > eps_circle {
                bad.push(ti);
            }
        }
        // Cavity boundary: edges of bad triangles owned by exactly one of them.
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for &ti in &bad {
            let t = triangles[ti];
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                if let Some(pos) = boundary.iter().position(|&b| b == key) {
                    boundary.remove(pos);
                } else {
                    boundary.push(key);
                }
            }
        }
        for &ti in bad.iter().rev() {
            triangles.swap_remove(ti);
        }
        for (a, b) in boundary {
            triangles.push(oriented(&[a, b, idx]));
        }
    }

    triangles.retain(|t| t.iter().all(|&v| v < n));
    if triangles.is_empty() {
        return Err(MpftError::Degenerate("triangulation collapsed".into()));
    }

    resolve_cocircular_ties(&mut triangles, &verts, eps_circle);

    // Map back to original indices and normalize ordering.
    let mut result: Vec<[usize; 3]> = triangles
        .iter()
        .map(|t| {
            let mut tri = [unique[t[0]].0, unique[t[1]].0, unique[t[2]].0];
            tri.sort_unstable();
            tri
        })
        .collect();
    result.sort_unstable();
    Ok(result)
}

/// Flip exactly-cocircular quads so the kept diagonal contains the lowest
/// vertex index. Geometrically indifferent, but makes the output reproducible.
fn resolve_cocircular_ties(triangles: &mut Vec<[usize; 3]>, verts: &[[f64; 2]], eps: f64) {
    for _ in 0..3 * triangles.len().max(1) {
        let mut adjacency: std::collections::BTreeMap<(usize, usize), Vec<(usize, usize)>> =
            std::collections::BTreeMap::new();
        for (ti, t) in triangles.iter().enumerate() {
            for (a, b, c) in [(t[0], t[1], t[2]), (t[1], t[2], t[0]), (t[2], t[0], t[1])] {
                adjacency
                    .entry((a.min(b), a.max(b)))
                    .or_default()
                    .push((ti, c));
            }
        }
        let mut flip: Option<((usize, usize), (usize, usize), (usize, usize))> = None;
        for (&(a, b), owners) in &adjacency {
            if owners.len() != 2 {
                continue;
            }
            let ((t1, c), (t2, d)) = (owners[0], owners[1]);
            let det = incircle_det(&verts[a], &verts[b], &verts[c], &verts[d]).abs();
            if det > eps {
                continue;
            }
            let lowest = a.min(b).min(c).min(d);
            if lowest != c && lowest != d {
                continue; // Desired diagonal already in place.
            }
            // Only flip strictly convex quads.
            let s1 = cross(&verts[a], &verts[b], &verts[c]);
            let s2 = cross(&verts[a], &verts[b], &verts[d]);
            let s3 = cross(&verts[c], &verts[d], &verts[a]);
            let s4 = cross(&verts[c], &verts[d], &verts[b]);
            if s1 * s2 < 0.0 && s3 * s4 < 0.0 {
                flip = Some(((a, b), (c, d), (t1, t2)));
                break;
            }
        }
        match flip {
            Some(((a, b), (c, d), (t1, t2))) => {
                triangles[t1] = [c, d, a];
                triangles[t2] = [c, d, b];
            }
            None => break,
        }
    }
}

/// Top-K sparse regions of a three-objective front: triangles of the
/// projected Delaunay mesh ranked by projected area. A degenerate projection
/// falls back to the adjacent-gap scan on the two highest-variance
/// coordinates.
pub fn sparse_regions_3d(front: &[ObjectiveVector], k: usize) -> Result<Vec<SparseRegion>> {
    check_k(k)?;
    if front.len() < 3 {
        warn!(
            "sparse_regions_3d: front has {} point(s), no triangles",
            front.len()
        );
        return Ok(Vec::new());
    }
    let (projected, _basis) = pca_project(front)?;
    let triangles = match delaunay(&projected) {
        Ok(t) => t,
        Err(MpftError::Degenerate(reason)) => {
            warn!("sparse_regions_3d: degenerate projection ({reason}), falling back to gap scan");
            return fallback_gap_scan_3d(front, k);
        }
        Err(e) => return Err(e),
    };

    let mut ranked: Vec<(f64, [usize; 3])> = triangles
        .into_iter()
        .filter_map(|t| {
            let area = 0.5
                * cross(&projected[t[0]], &projected[t[1]], &projected[t[2]]).abs();
            (area > 0.0).then_some((area, t))
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));

    ranked
        .iter()
        .take(k.min(ranked.len()))
        .map(|&(area, t)| {
            let boundary_points: Vec<ObjectiveVector> =
                t.iter().map(|&i| front[i].clone()).collect();
            let j_max = element_wise_max(&boundary_points)?;
            Ok(SparseRegion {
                boundary_points,
                size: area,
                j_max,
            })
        })
        .collect()
}

/// Gap scan over the two highest-variance coordinates of a 3-D front, used
/// when the plane projection degenerates. Boundary points stay 3-D.
fn fallback_gap_scan_3d(front: &[ObjectiveVector], k: usize) -> Result<Vec<SparseRegion>> {
    let n = front.len() as f64;
    let mut variance = [0.0; 3];
    for j in 0..3 {
        let mean: f64 = front.iter().map(|p| p.values()[j]).sum::<f64>() / n;
        variance[j] = front
            .iter()
            .map(|p| (p.values()[j] - mean).powi(2))
            .sum::<f64>()
            / n;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| variance[j].total_cmp(&variance[i]));
    let (c0, c1) = (order[0], order[1]);

    let mut sorted: Vec<&ObjectiveVector> = front.iter().collect();
    sorted.sort_by(|a, b| {
        a.values()[c0]
            .total_cmp(&b.values()[c0])
            .then(a.values()[c1].total_cmp(&b.values()[c1]))
            .then(a.lex_cmp(b))
    });
    let mut gaps: Vec<(f64, usize)> = sorted
        .windows(2)
        .enumerate()
        .map(|(i, w)| (euclidean(w[0].values(), w[1].values()), i))
        .collect();
    gaps.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| sorted[a.1].lex_cmp(sorted[b.1]))
    });
    gaps.iter()
        .take(k.min(gaps.len()))
        .map(|&(size, i)| {
            let boundary_points = vec![sorted[i].clone(), sorted[i + 1].clone()];
            let j_max = element_wise_max(&boundary_points)?;
            Ok(SparseRegion {
                boundary_points,
                size,
                j_max,
            })
        })
        .collect()
}

/// Steering targets of the detected regions, in order.
pub fn region_boundaries(regions: &[SparseRegion]) -> Vec<ObjectiveVector> {
    regions.iter().map(|r| r.j_max.clone()).collect()
}
