//! Minimal SVG figures for an experiment result.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{relative_reduction, site_labels, ExperimentResult, Policy};
use crate::grid::Cell;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

struct Svg {
    body: String,
}

/// Linear map from data range to pixel range.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(body, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = write!(body, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
        Self { body }
    }

    fn axes(&mut self, x: Axis, y: Axis, xlabel: &str, ylabel: &str) {
        let (x0, x1, y0, y1) = (MARGIN, W - MARGIN / 2.0, H - MARGIN, MARGIN);
        let _ = write!(self.body, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x.lo + f * (x.hi - x.lo);
            let yv = y.lo + f * (y.hi - y.lo);
            let (px, py) = (x.map(xv), y.map(yv));
            let _ = write!(
                self.body,
                r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="{:.1}" y="{py:.1}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                y0 + 16.0,
                fmt_tick(xv),
                x0 - 6.0,
                fmt_tick(yv)
            );
        }
        let _ = write!(self.body, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 18.0, esc(xlabel));
        let _ = write!(
            self.body,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            esc(ylabel)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
        let _ = write!(self.body, r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#, d.join(" "));
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, color: &str) {
        let _ = write!(self.body, r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{h:.1}" fill="{color}"/>"#);
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, color: &str) {
        let _ = write!(self.body, r#"<circle cx="{x:.1}" cy="{y:.1}" r="{r}" fill="{color}"/>"#);
    }

    fn text(&mut self, x: f64, y: f64, s: &str) {
        let _ = write!(self.body, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="middle">{}</text>"#, esc(s));
    }

    fn legend(&mut self, entries: &[(&str, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = MARGIN + 4.0 + 16.0 * i as f64;
            let x = W - MARGIN / 2.0 - 90.0;
            self.rect(x, y - 9.0, 10.0, 10.0, color);
            let _ = write!(self.body, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 14.0, esc(label));
        }
    }

    fn save(mut self, path: &Path) -> Result<()> {
        self.body.push_str("</svg>\n");
        std::fs::write(path, self.body).map_err(|e| Error::io(path, e))
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn x_axis(lo: f64, hi: f64) -> Axis {
    Axis::new(lo, hi, MARGIN, W - MARGIN / 2.0)
}

fn y_axis(lo: f64, hi: f64) -> Axis {
    Axis::new(lo, hi, H - MARGIN, MARGIN)
}

fn color(i: usize) -> &'static str {
    COLORS[i % COLORS.len()]
}

/// Writes every figure into `dir`.
pub fn write_all(result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    convergence(result, &dir.join("convergence.svg"))?;
    site_counts(result, &dir.join("site_counts.svg"))?;
    channels_vs_size(result, &dir.join("channels_vs_size.svg"))?;
    mean_objective(result, &dir.join("mean_objective.svg"))?;
    grid_map(result, &dir.join("trajectory.svg"))?;
    reduction(result, &dir.join("reduction.svg"))?;
    Ok(())
}

/// Mean best-so-far fitness per iteration, shorter traces padded with their last value.
fn convergence(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut by_policy: BTreeMap<&str, Vec<&Vec<f64>>> = BTreeMap::new();
    for t in &result.convergence {
        by_policy.entry(t.policy.as_str()).or_default().push(&t.trace);
    }
    let means: Vec<(&str, Vec<f64>)> = by_policy
        .into_iter()
        .map(|(p, traces)| {
            let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
            let m = (0..len)
                .map(|i| traces.iter().map(|t| t[i.min(t.len() - 1)]).sum::<f64>() / traces.len() as f64)
                .collect();
            (p, m)
        })
        .collect();
    let len = means.iter().map(|m| m.1.len()).max().unwrap_or(1);
    let (lo, hi) = range(means.iter().flat_map(|m| m.1.iter().copied()));
    let (x, y) = (x_axis(0.0, (len.max(2) - 1) as f64), y_axis(lo.min(hi), hi.max(lo)));
    let mut svg = Svg::new("Convergence of the slot-1 optimization");
    svg.axes(x, y, "iteration", "mean best fitness S");
    let mut legend = Vec::new();
    for (i, (p, m)) in means.iter().enumerate() {
        let pts: Vec<(f64, f64)> = m.iter().enumerate().map(|(k, &v)| (x.map(k as f64), y.map(v))).collect();
        svg.polyline(&pts, color(i));
        legend.push((*p, color(i)));
    }
    svg.legend(&legend);
    svg.save(path)
}

/// Mean number of tasks per execution site, stacked per policy.
fn site_counts(result: &ExperimentResult, path: &Path) -> Result<()> {
    let policies = present_policies(result);
    let mut mean = vec![[0.0f64; 3]; policies.len()];
    for d in &result.runs {
        for o in &d.outcomes {
            if let Some(i) = policies.iter().position(|&p| p == o.policy) {
                for (s, c) in o.site_counts().into_iter().enumerate() {
                    mean[i][s] += c as f64 / result.runs.len() as f64;
                }
            }
        }
    }
    let top = mean.iter().map(|m| m.iter().sum::<f64>()).fold(1.0, f64::max);
    let y = y_axis(0.0, top);
    let x = x_axis(0.0, policies.len().max(1) as f64);
    let mut svg = Svg::new("Tasks per execution site");
    svg.axes(x, y, "policy", "mean tasks");
    let slot = (x.px_hi - x.px_lo) / policies.len().max(1) as f64;
    for (i, p) in policies.iter().enumerate() {
        let mut base = 0.0;
        for (s, &v) in mean[i].iter().enumerate() {
            let (ty, by) = (y.map(base + v), y.map(base));
            svg.rect(x.px_lo + slot * (i as f64 + 0.2), ty, slot * 0.6, by - ty, color(s));
            base += v;
        }
        svg.text(x.px_lo + slot * (i as f64 + 0.5), y.px_lo + 30.0, p.label());
    }
    let labels = site_labels();
    svg.legend(&[(labels[0], color(0)), (labels[1], color(1)), (labels[2], color(2))]);
    svg.save(path)
}

/// Gamma-weighted channels against pending input size, all runs.
fn channels_vs_size(result: &ExperimentResult, path: &Path) -> Result<()> {
    let pts: Vec<(f64, f64)> = result
        .runs
        .iter()
        .flat_map(|d| d.world.pending.iter().zip(&d.world.gamma_channels.channels).map(|(&s, &c)| (s / 1e6, c as f64)))
        .collect();
    let (xl, xh) = range(pts.iter().map(|p| p.0));
    let (_, yh) = range(pts.iter().map(|p| p.1));
    let (x, y) = (x_axis(0.0, xh.max(xl).max(1e-9)), y_axis(0.0, yh.max(1.0)));
    let mut svg = Svg::new("Allocated channels vs pending data");
    svg.axes(x, y, "pending input (Mbit)", "channels");
    for (px, py) in pts {
        svg.circle(x.map(px), y.map(py), 3.0, color(0));
    }
    svg.save(path)
}

fn present_policies(result: &ExperimentResult) -> Vec<Policy> {
    Policy::ALL
        .into_iter()
        .filter(|p| result.summaries.iter().any(|s| s.policy == p.label()))
        .collect()
}

/// Mean final objective per policy.
fn mean_objective(result: &ExperimentResult, path: &Path) -> Result<()> {
    let policies = present_policies(result);
    let means: Vec<f64> = policies
        .iter()
        .map(|p| {
            let ls: Vec<f64> = result.summaries.iter().filter(|s| s.policy == p.label()).map(|s| s.l).collect();
            ls.iter().sum::<f64>() / ls.len() as f64
        })
        .collect();
    let (_, hi) = range(means.iter().copied());
    let y = y_axis(0.0, hi.max(1e-9));
    let x = x_axis(0.0, policies.len().max(1) as f64);
    let mut svg = Svg::new("Mean objective L per policy");
    svg.axes(x, y, "policy", "mean L");
    let slot = (x.px_hi - x.px_lo) / policies.len().max(1) as f64;
    for (i, (p, m)) in policies.iter().zip(&means).enumerate() {
        let top = y.map(*m);
        svg.rect(x.px_lo + slot * (i as f64 + 0.2), top, slot * 0.6, y.px_lo - top, color(i));
        svg.text(x.px_lo + slot * (i as f64 + 0.5), y.px_lo + 30.0, p.label());
    }
    svg.save(path)
}

/// Run-0 obstacle grid with the ACO path and the straight line.
fn grid_map(result: &ExperimentResult, path: &Path) -> Result<()> {
    let Some(d) = result.runs.first() else {
        return Svg::new("No runs").save(path);
    };
    let world = &d.world.obstacle_world;
    let n = world.side_cells as f64;
    let cell = (H - 2.0 * MARGIN) / n;
    let mut svg = Svg::new("Obstacles and trajectories (run 0)");
    let ox = (W - cell * n) / 2.0;
    let to_px = |c: Cell| (ox + (c.x as f64 + 0.5) * cell, H - MARGIN - (c.y as f64 + 0.5) * cell);
    svg.rect(ox, MARGIN, cell * n, cell * n, "#f4f4f4");
    for c in world.obstacles() {
        let (px, py) = to_px(c);
        svg.rect(px - cell / 2.0, py - cell / 2.0, cell, cell, "#555555");
    }
    let mut legend = vec![("straight line", color(0))];
    svg.polyline(&d.world.straight.cells.iter().map(|&c| to_px(c)).collect::<Vec<_>>(), color(0));
    if let Some(aco) = d.outcomes.iter().find(|o| o.policy == Policy::Aco) {
        svg.polyline(&aco.trajectory.cells.iter().map(|&c| to_px(c)).collect::<Vec<_>>(), color(3));
        legend.push(("ACO path", color(3)));
    }
    let (sx, sy) = to_px(d.world.start);
    let (gx, gy) = to_px(d.world.goal);
    svg.circle(sx, sy, cell / 3.0, "#2ca02c");
    svg.circle(gx, gy, cell / 3.0, "#d62728");
    svg.legend(&legend);
    svg.save(path)
}

/// Mean relative reduction against RAN per weighting-factor bin.
fn reduction(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut svg = Svg::new("Relative reduction of L against RAN");
    let mut series = Vec::new();
    if result.rows.iter().any(|r| r.policy == "RAN") {
        for p in present_policies(result).into_iter().filter(|&p| p != Policy::Ran) {
            let buckets = relative_reduction(&result.rows, p.label(), "RAN")?;
            let pts: Vec<(f64, f64)> =
                buckets.iter().filter_map(|b| b.mean.map(|m| ((b.lo + b.hi) / 2.0, m))).collect();
            series.push((p, pts));
        }
    }
    let (lo, hi) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let (x, y) = (x_axis(0.05, 1.0), y_axis(lo.min(0.0), hi.max(0.0).max(lo)));
    svg.axes(x, y, "weighting factor epsilon", "mean (L_RAN - L) / L_RAN");
    let mut legend = Vec::new();
    for (i, (p, pts)) in series.iter().enumerate() {
        let px: Vec<(f64, f64)> = pts.iter().map(|&(a, b)| (x.map(a), y.map(b))).collect();
        svg.polyline(&px, color(i));
        for &(a, b) in &px {
            svg.circle(a, b, 3.0, color(i));
        }
        legend.push((p.label(), color(i)));
    }
    svg.legend(&legend);
    svg.save(path)
}
