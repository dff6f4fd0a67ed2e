//! Direct SVG writer for tracked fronts: scatter colored by originating
//! track, detected sparse regions shaded. Three-objective fronts render as
//! the three pairwise coordinate projections.

use std::fmt::Write as _;

use mpft_core::archive::{ParetoArchive, Provenance};
use mpft_core::sparsity::RegionReport;

const PANEL: f64 = 360.0;
const MARGIN: f64 = 52.0;
const GAP: f64 = 28.0;

fn provenance_color(provenance: &Provenance) -> &'static str {
    match provenance {
        Provenance::Vertex(0) => "#1f77b4",
        Provenance::Vertex(1) => "#d62728",
        Provenance::Vertex(_) => "#9467bd",
        Provenance::Interior(_) => "#2ca02c",
        Provenance::Anchor(_) => "#ff7f0e",
    }
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn from_values(values: impl Iterator<Item = f64>) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        let pad = ((hi - lo) * 0.06).max(1e-9);
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn scale(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

/// Render the archive (and detected regions) to a standalone SVG document.
pub fn render_front(archive: &ParetoArchive, regions: &[RegionReport]) -> String {
    let m = archive
        .members()
        .first()
        .map(|p| p.objectives.len())
        .unwrap_or(2);
    let pairs: Vec<(usize, usize)> = match m {
        2 => vec![(0, 1)],
        _ => vec![(0, 1), (0, 2), (1, 2)],
    };
    let width = MARGIN + pairs.len() as f64 * (PANEL + GAP) + MARGIN - GAP;
    let height = PANEL + 2.0 * MARGIN + 24.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns='http://www.w3.org/2000/svg' width='{width:.0}' height='{height:.0}' viewBox='0 0 {width:.0} {height:.0}'>"
    );
    let _ = writeln!(svg, "<rect width='100%' height='100%' fill='white'/>");

    for (panel, &(cx, cy)) in pairs.iter().enumerate() {
        let x0 = MARGIN + panel as f64 * (PANEL + GAP);
        let y0 = MARGIN;
        let x_axis = Axis::from_values(
            archive
                .members()
                .iter()
                .map(|p| p.objectives.values()[cx])
                .chain(
                    regions
                        .iter()
                        .flat_map(|r| r.boundary_points.iter().map(move |b| b[cx])),
                ),
        );
        let y_axis = Axis::from_values(
            archive
                .members()
                .iter()
                .map(|p| p.objectives.values()[cy])
                .chain(
                    regions
                        .iter()
                        .flat_map(|r| r.boundary_points.iter().map(move |b| b[cy])),
                ),
        );
        let px = |v: f64| x0 + x_axis.scale(v) * PANEL;
        let py = |v: f64| y0 + (1.0 - y_axis.scale(v)) * PANEL;

        // Frame and ticks.
        let _ = writeln!(
            svg,
            "<rect x='{x0:.1}' y='{y0:.1}' width='{PANEL:.1}' height='{PANEL:.1}' fill='none' stroke='#444' stroke-width='1'/>"
        );
        for tick in 0..=4 {
            let f = tick as f64 / 4.0;
            let vx = x_axis.lo + f * (x_axis.hi - x_axis.lo);
            let vy = y_axis.lo + f * (y_axis.hi - y_axis.lo);
            let tx = x0 + f * PANEL;
            let ty = y0 + (1.0 - f) * PANEL;
            let _ = writeln!(
                svg,
                "<line x1='{tx:.1}' y1='{:.1}' x2='{tx:.1}' y2='{:.1}' stroke='#444'/>",
                y0 + PANEL,
                y0 + PANEL + 5.0
            );
            let _ = writeln!(
                svg,
                "<text x='{tx:.1}' y='{:.1}' font-size='11' text-anchor='middle' fill='#333'>{vx:.3}</text>",
                y0 + PANEL + 18.0
            );
            let _ = writeln!(
                svg,
                "<line x1='{:.1}' y1='{ty:.1}' x2='{x0:.1}' y2='{ty:.1}' stroke='#444'/>",
                x0 - 5.0
            );
            let _ = writeln!(
                svg,
                "<text x='{:.1}' y='{:.1}' font-size='11' text-anchor='end' fill='#333'>{vy:.3}</text>",
                x0 - 8.0,
                ty + 4.0
            );
        }
        let _ = writeln!(
            svg,
            "<text x='{:.1}' y='{:.1}' font-size='13' text-anchor='middle' fill='#000'>objective {}</text>",
            x0 + PANEL / 2.0,
            y0 + PANEL + 38.0,
            cx + 1
        );
        let _ = writeln!(
            svg,
            "<text x='{0:.1}' y='{1:.1}' font-size='13' text-anchor='middle' fill='#000' transform='rotate(-90 {0:.1} {1:.1})'>objective {2}</text>",
            x0 - 36.0,
            y0 + PANEL / 2.0,
            cy + 1
        );

        // Shaded sparse regions: bounding rectangle of the boundary points.
        for region in regions {
            let rx: Vec<f64> = region.boundary_points.iter().map(|b| b[cx]).collect();
            let ry: Vec<f64> = region.boundary_points.iter().map(|b| b[cy]).collect();
            let (lo_x, hi_x) = (
                rx.iter().cloned().fold(f64::INFINITY, f64::min),
                rx.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            );
            let (lo_y, hi_y) = (
                ry.iter().cloned().fold(f64::INFINITY, f64::min),
                ry.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            );
            let _ = writeln!(
                svg,
                "<rect x='{:.1}' y='{:.1}' width='{:.1}' height='{:.1}' fill='#888' fill-opacity='0.25' stroke='#555' stroke-dasharray='4 3'/>",
                px(lo_x),
                py(hi_y),
                (px(hi_x) - px(lo_x)).max(1.0),
                (py(lo_y) - py(hi_y)).max(1.0)
            );
        }

        for member in archive.members() {
            let _ = writeln!(
                svg,
                "<circle cx='{:.2}' cy='{:.2}' r='2.4' fill='{}' fill-opacity='0.85'/>",
                px(member.objectives.values()[cx]),
                py(member.objectives.values()[cy]),
                provenance_color(&member.provenance)
            );
        }
    }

    // Legend.
    let mut tags: Vec<(String, &'static str)> = Vec::new();
    for member in archive.members() {
        let label = match member.provenance {
            Provenance::Vertex(i) => format!("track {}", i + 1),
            Provenance::Interior(_) => "interior fill".to_string(),
            Provenance::Anchor(_) => "anchor".to_string(),
        };
        let color = provenance_color(&member.provenance);
        if !tags.iter().any(|(l, _)| *l == label) {
            tags.push((label, color));
        }
    }
    tags.sort();
    for (i, (label, color)) in tags.iter().enumerate() {
        let lx = MARGIN + i as f64 * 130.0;
        let _ = writeln!(
            svg,
            "<circle cx='{:.1}' cy='{:.1}' r='4' fill='{color}'/>",
            lx,
            MARGIN - 22.0
        );
        let _ = writeln!(
            svg,
            "<text x='{:.1}' y='{:.1}' font-size='12' fill='#000'>{label}</text>",
            lx + 10.0,
            MARGIN - 18.0
        );
    }

    svg.push_str("</svg>\n");
    svg
}
