// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic SVG renderings of the four influence diagnostics, the
//! plain segmentation plot and the deletion-study summary.
//!
//! Every colored mark carries a `class` so tests can count marks:
//! `cp-line` (one per original changepoint), `delta-bar` (one per non-zero
//! location delta), `param-tick` (one per on-scale index/mean pair),
//! `orig-mean` (one per original segment) and `cell` (one per run of equal
//! non-zero values within a row of the influence matrix).

mod export;
mod svg;

use serde::{Deserialize, Serialize};

use crate::detect::Segmentation;
use crate::influence::{InfluenceReport, LocationClass, StabilityStatus};
use crate::series::TimeSeries;
use crate::simulate::StudyCell;

pub use export::{
    csv_tables, write_csv_bundle, ChangepointStatus, ConfigEcho, LocationDoc, ReportDocument,
    SCHEMA_VERSION,
};

use svg::{fmt_tick, ticks, Scale, Svg};

/// Colors, line styles and canvas sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotStyle {
    pub width: u32,
    pub height: u32,
    /// Side of the square influence map.
    pub map_size: u32,
    pub stable: String,
    pub unstable: String,
    pub outlier: String,
    pub increase: String,
    pub decrease: String,
    pub original_param: String,
    pub neutral: String,
    pub changed_span: String,
    pub data: String,
    pub stable_dash: String,
    pub unstable_dash: String,
    pub outlier_dash: String,
    /// Luminance of a mean seen once; a mean seen in every run is black.
    pub gray_max: f64,
    /// |D| at which heat-map intensity saturates.
    pub saturation: i32,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 960,
            height: 480,
            map_size: 720,
            stable: "#228833".into(),
            unstable: "#EE7733".into(),
            outlier: "#CC3311".into(),
            increase: "#B38B6D".into(),
            decrease: "#4477AA".into(),
            original_param: "#CC3311".into(),
            neutral: "#000000".into(),
            changed_span: "#DDDDDD".into(),
            data: "#555555".into(),
            stable_dash: "6 4".into(),
            unstable_dash: "8 3 2 3".into(),
            outlier_dash: "2 3".into(),
            gray_max: 0.85,
            saturation: 4,
        }
    }
}

impl PlotStyle {
    fn status_stroke(&self, status: StabilityStatus) -> (&str, &str) {
        match status {
            StabilityStatus::Stable => (&self.stable, &self.stable_dash),
            StabilityStatus::Unstable => (&self.unstable, &self.unstable_dash),
            StabilityStatus::Outlier => (&self.outlier, &self.outlier_dash),
        }
    }

    /// Gray hex for a mean seen `count` times out of `total`.
    pub fn gray_for(&self, count: u32, total: u32) -> String {
        let lum = if total <= 1 {
            0.0
        } else {
            self.gray_max * f64::from(total - count.min(total)) / f64::from(total - 1)
        };
        let v = (lum.clamp(0.0, 1.0) * 255.0).round() as u8;
        format!("#{v:02X}{v:02X}{v:02X}")
    }

    /// Fill opacity for an influence value, saturating at `saturation`.
    pub fn intensity(&self, d: i32) -> f64 {
        let sat = self.saturation.max(1);
        let a = d.abs().min(sat);
        if sat == 1 {
            return 1.0;
        }
        0.4 + 0.6 * f64::from(a - 1) / f64::from(sat - 1)
    }
}

const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;

/// Plot area with index on x (1..=n) and value on y.
struct Frame {
    x: Scale,
    y: Scale,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn new(width: u32, height: u32, n: usize, ylo: f64, yhi: f64) -> Self {
        let (right, bottom) = (f64::from(width) - RIGHT, f64::from(height) - BOTTOM);
        let pad = if yhi > ylo { 0.05 * (yhi - ylo) } else { 1.0 };
        Self {
            x: Scale::new(0.5, n as f64 + 0.5, LEFT, right),
            y: Scale::new(ylo - pad, yhi + pad, bottom, TOP),
            left: LEFT,
            right,
            top: TOP,
            bottom,
        }
    }

    fn draw(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str) {
        svg.text(self.left, 18.0, title, "font-size=\"14\" class=\"title\"");
        svg.rect(
            self.left,
            self.top,
            self.right - self.left,
            self.bottom - self.top,
            "fill=\"none\" stroke=\"#999999\" class=\"axis\"",
        );
        let (x0, x1) = self.x.domain();
        for v in ticks(x0.max(1.0), x1, 8) {
            let px = self.x.at(v);
            svg.line(
                px,
                self.bottom,
                px,
                self.bottom + 4.0,
                "stroke=\"#999999\" class=\"axis\"",
            );
            svg.text(
                px,
                self.bottom + 16.0,
                &fmt_tick(v),
                "text-anchor=\"middle\" class=\"axis\"",
            );
        }
        let (y0, y1) = self.y.domain();
        for v in ticks(y0, y1, 6) {
            let py = self.y.at(v);
            svg.line(
                self.left - 4.0,
                py,
                self.left,
                py,
                "stroke=\"#999999\" class=\"axis\"",
            );
            svg.text(
                self.left - 6.0,
                py + 4.0,
                &fmt_tick(v),
                "text-anchor=\"end\" class=\"axis\"",
            );
        }
        svg.text(
            (self.left + self.right) / 2.0,
            self.bottom + 34.0,
            xlabel,
            "text-anchor=\"middle\" class=\"axis\"",
        );
        let cy = (self.top + self.bottom) / 2.0;
        svg.text(
            14.0,
            cy,
            ylabel,
            &format!("text-anchor=\"middle\" transform=\"rotate(-90 14 {cy:.2})\" class=\"axis\""),
        );
    }

    /// Vertical line between index `tau` and `tau + 1`.
    fn boundary(&self, tau: usize) -> f64 {
        self.x.at(tau as f64 + 0.5)
    }
}

fn value_bounds(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn data_polyline(svg: &mut Svg, frame: &Frame, values: &[f64], color: &str) {
    svg.polyline(
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (frame.x.at(i as f64 + 1.0), frame.y.at(v))),
        &format!("stroke=\"{color}\" stroke-width=\"1\" class=\"data\""),
    );
}

fn legend(svg: &mut Svg, style: &PlotStyle, x: f64, y: f64) {
    for (k, st) in [
        StabilityStatus::Stable,
        StabilityStatus::Unstable,
        StabilityStatus::Outlier,
    ]
    .into_iter()
    .enumerate()
    {
        let (color, dash) = style.status_stroke(st);
        let lx = x + k as f64 * 90.0;
        svg.line(
            lx,
            y,
            lx + 24.0,
            y,
            &format!("stroke=\"{color}\" stroke-width=\"2\" stroke-dasharray=\"{dash}\" class=\"legend\""),
        );
        svg.text(lx + 28.0, y + 4.0, st.as_str(), "class=\"legend\"");
    }
}

fn method_title(report: &InfluenceReport, what: &str) -> String {
    format!("{what} ({})", report.method)
}

/// Data series with one vertical line per original changepoint, styled by
/// stability status.
pub fn render_dashboard(report: &InfluenceReport, style: &PlotStyle) -> String {
    let values = report.data.values();
    let (lo, hi) = value_bounds(values);
    let frame = Frame::new(style.width, style.height, values.len(), lo, hi);
    let mut svg = Svg::new(
        style.width,
        style.height,
        &method_title(report, "Stability Dashboard"),
    );
    frame.draw(
        &mut svg,
        &method_title(report, "Stability Dashboard"),
        "index",
        "value",
    );
    data_polyline(&mut svg, &frame, values, &style.data);
    for (&tau, &st) in report.original.changepoints.iter().zip(&report.statuses) {
        let (color, dash) = style.status_stroke(st);
        let x = frame.boundary(tau);
        svg.line(
            x,
            frame.top,
            x,
            frame.bottom,
            &format!(
                "stroke=\"{color}\" stroke-width=\"1.5\" stroke-dasharray=\"{dash}\" class=\"cp-line cp-{}\" data-tau=\"{tau}\"",
                st.as_str()
            ),
        );
    }
    legend(&mut svg, style, frame.right - 270.0, 18.0);
    svg.finish()
}

/// Observed-minus-expected changepoint counts per index.
pub fn render_location_stability(report: &InfluenceReport, style: &PlotStyle) -> String {
    let delta = &report.location.delta;
    let lo = delta.iter().copied().min().unwrap_or(0).min(-1) as f64;
    let hi = delta.iter().copied().max().unwrap_or(0).max(1) as f64;
    let frame = Frame::new(style.width, style.height, delta.len(), lo, hi);
    let title = method_title(report, "Location Stability");
    let mut svg = Svg::new(style.width, style.height, &title);
    frame.draw(
        &mut svg,
        &title,
        "index",
        "observed - expected changepoints",
    );
    let y0 = frame.y.at(0.0);
    svg.line(
        frame.left,
        y0,
        frame.right,
        y0,
        "stroke=\"#000000\" stroke-width=\"1\" class=\"zero-line\"",
    );
    let width = (frame.x.at(2.0) - frame.x.at(1.0)).clamp(1.5, 4.0);
    for (j, (&d, class)) in delta.iter().zip(&report.location.class).enumerate() {
        if d == 0 {
            continue;
        }
        let x = frame.x.at(j as f64 + 1.0);
        let (color, dash, tag) = match class {
            LocationClass::Changepoint(st) => {
                let (c, dsh) = style.status_stroke(*st);
                (c, dsh, st.as_str())
            }
            LocationClass::Other => (style.neutral.as_str(), "none", "other"),
        };
        svg.line(
            x,
            y0,
            x,
            frame.y.at(d as f64),
            &format!(
                "stroke=\"{color}\" stroke-width=\"{width:.2}\" stroke-dasharray=\"{dash}\" class=\"delta-bar bar-{tag}\" data-index=\"{}\" data-delta=\"{d}\"",
                j + 1
            ),
        );
    }
    svg.finish()
}

/// Distinct fitted means per index shaded by frequency, with the original
/// segment means overdrawn as thick lines.
pub fn render_parameter_stability(report: &InfluenceReport, style: &PlotStyle) -> String {
    let ps = &report.parameter_stability;
    let (lo, hi) = value_bounds(report.data.values());
    let n = ps.values.len();
    let frame = Frame::new(style.width, style.height, n, lo, hi);
    let (ymin, ymax) = frame.y.domain();
    let title = method_title(report, "Parameter Stability");
    let mut svg = Svg::new(style.width, style.height, &title);
    frame.draw(&mut svg, &title, "index", "segment mean");

    let mut off_scale = 0usize;
    for (i, vals) in ps.values.iter().enumerate() {
        let total: u32 = vals.iter().map(|(_, c)| c).sum();
        let (x0, x1) = (frame.x.at(i as f64 + 0.5), frame.x.at(i as f64 + 1.5));
        for &(v, c) in vals {
            if v < ymin || v > ymax {
                off_scale += 1;
                continue;
            }
            let y = frame.y.at(v);
            svg.line(
                x0,
                y,
                x1,
                y,
                &format!(
                    "stroke=\"{}\" stroke-width=\"1\" class=\"param-tick\"",
                    style.gray_for(c, total)
                ),
            );
        }
    }
    for ((s, u), &m) in report
        .original
        .segments()
        .zip(&report.original.segment_means)
    {
        let y = frame.y.at(m);
        svg.line(
            frame.x.at(s as f64 - 0.5),
            y,
            frame.x.at(u as f64 + 0.5),
            y,
            &format!(
                "stroke=\"{}\" stroke-width=\"3\" stroke-opacity=\"0.8\" class=\"orig-mean\"",
                style.original_param
            ),
        );
    }
    if off_scale > 0 {
        svg.text(
            frame.right,
            18.0,
            &format!("{off_scale} mean value(s) off scale"),
            "text-anchor=\"end\" class=\"note\"",
        );
    }
    svg.finish()
}

/// Heat map of the influence matrix: altered point on the vertical axis
/// (1 at the bottom), affected point on the horizontal axis.
pub fn render_influence_map(report: &InfluenceReport, style: &PlotStyle) -> String {
    let m = &report.influence_matrix;
    let n = m.n();
    let size = style.map_size;
    let side = f64::from(size);
    let (left, top) = (LEFT, TOP);
    let (right, bottom) = (side - RIGHT, side - BOTTOM);
    let cw = (right - left) / n as f64;
    let ch = (bottom - top) / n as f64;
    let x = |i: usize| left + (i - 1) as f64 * cw;
    let y = |t: usize| top + (n - t) as f64 * ch;

    let title = method_title(report, "Influence Map");
    let mut svg = Svg::new(size, size, &title);
    svg.text(left, 18.0, &title, "font-size=\"14\" class=\"title\"");
    svg.rect(
        left,
        top,
        right - left,
        bottom - top,
        "fill=\"#FFFFFF\" stroke=\"#999999\" class=\"map-bg\"",
    );

    for (t, a, b, d) in m.nonzero_runs() {
        let color = if d > 0 {
            &style.increase
        } else {
            &style.decrease
        };
        svg.rect(
            x(a),
            y(t),
            (b - a + 1) as f64 * cw,
            ch,
            &format!(
                "fill=\"{color}\" fill-opacity=\"{:.3}\" class=\"cell\" data-t=\"{t}\" data-d=\"{d}\"",
                style.intensity(d)
            ),
        );
    }
    svg.line(
        left,
        bottom,
        right,
        top,
        "stroke=\"#BBBBBB\" stroke-width=\"0.5\" stroke-dasharray=\"3 3\" class=\"diagonal\"",
    );

    let r = (0.45 * cw).max(3.0);
    for (&tau, &st) in report.original.changepoints.iter().zip(&report.statuses) {
        if st == StabilityStatus::Stable {
            continue;
        }
        let (color, _) = style.status_stroke(st);
        svg.circle(
            x(tau) + cw / 2.0,
            y(tau) + ch / 2.0,
            r,
            &format!("fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" class=\"diag-marker marker-{}\"", st.as_str()),
        );
    }

    for v in ticks(1.0, n as f64, 6) {
        let i = v as usize;
        let px = x(i) + cw / 2.0;
        svg.text(
            px,
            bottom + 16.0,
            &fmt_tick(v),
            "text-anchor=\"middle\" class=\"axis\"",
        );
        let py = y(i) + ch / 2.0;
        svg.text(
            left - 6.0,
            py + 4.0,
            &fmt_tick(v),
            "text-anchor=\"end\" class=\"axis\"",
        );
    }
    svg.text(
        (left + right) / 2.0,
        bottom + 34.0,
        "affected point",
        "text-anchor=\"middle\" class=\"axis\"",
    );
    let cy = (top + bottom) / 2.0;
    svg.text(
        14.0,
        cy,
        "altered point",
        &format!("text-anchor=\"middle\" transform=\"rotate(-90 14 {cy:.2})\" class=\"axis\""),
    );
    svg.finish()
}

/// Data with detected changepoints and segment means.
pub fn render_segmentation(ts: &TimeSeries, seg: &Segmentation, style: &PlotStyle) -> String {
    let values = ts.values();
    let (lo, hi) = value_bounds(values);
    let frame = Frame::new(style.width, style.height, values.len(), lo, hi);
    let title = format!("Segmentation ({} changepoints)", seg.num_changepoints());
    let mut svg = Svg::new(style.width, style.height, &title);
    frame.draw(&mut svg, &title, "index", "value");
    data_polyline(&mut svg, &frame, values, &style.data);
    for &tau in &seg.changepoints {
        let x = frame.boundary(tau);
        svg.line(
            x,
            frame.top,
            x,
            frame.bottom,
            &format!(
                "stroke=\"{}\" stroke-width=\"1.5\" stroke-dasharray=\"{}\" class=\"cp-line\" data-tau=\"{tau}\"",
                style.decrease, style.stable_dash
            ),
        );
    }
    for ((s, u), &m) in seg.segments().zip(&seg.segment_means) {
        let y = frame.y.at(m);
        svg.line(
            frame.x.at(s as f64 - 0.5),
            y,
            frame.x.at(u as f64 + 0.5),
            y,
            &format!(
                "stroke=\"{}\" stroke-width=\"2\" class=\"segment-mean\"",
                style.original_param
            ),
        );
    }
    svg.finish()
}

const SERIES_COLORS: [&str; 6] = [
    "#4477AA", "#EE6677", "#228833", "#CCBB44", "#66CCEE", "#AA3377",
];

/// Mean moved-proportion against shift size, one line per sample size, with
/// dashed ±2 standard-error bands.
pub fn render_study(cells: &[StudyCell], style: &PlotStyle) -> String {
    let mut sizes: Vec<usize> = cells.iter().map(|c| c.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let (dlo, dhi) = value_bounds(&cells.iter().map(|c| c.delta).collect::<Vec<_>>());
    let yhi = cells
        .iter()
        .map(|c| c.upper)
        .fold(0.0f64, f64::max)
        .max(0.01);
    let (right, bottom) = (
        f64::from(style.width) - 140.0,
        f64::from(style.height) - BOTTOM,
    );
    let xs = Scale::new(dlo, dhi, LEFT, right);
    let ys = Scale::new(0.0, yhi * 1.05, bottom, TOP);

    let title = "Deletion study: proportion of moved changepoints";
    let mut svg = Svg::new(style.width, style.height, title);
    svg.text(LEFT, 18.0, title, "font-size=\"14\" class=\"title\"");
    svg.rect(
        LEFT,
        TOP,
        right - LEFT,
        bottom - TOP,
        "fill=\"none\" stroke=\"#999999\" class=\"axis\"",
    );
    let mut deltas: Vec<f64> = cells.iter().map(|c| c.delta).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    for d in deltas {
        svg.text(
            xs.at(d),
            bottom + 16.0,
            &fmt_tick(d),
            "text-anchor=\"middle\" class=\"axis\"",
        );
    }
    for v in ticks(0.0, yhi * 1.05, 5) {
        svg.text(
            LEFT - 6.0,
            ys.at(v) + 4.0,
            &fmt_tick(v),
            "text-anchor=\"end\" class=\"axis\"",
        );
    }
    svg.text(
        (LEFT + right) / 2.0,
        bottom + 34.0,
        "shift size",
        "text-anchor=\"middle\" class=\"axis\"",
    );

    for (k, &n) in sizes.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        let mut row: Vec<&StudyCell> = cells.iter().filter(|c| c.n == n).collect();
        row.sort_by(|a, b| a.delta.total_cmp(&b.delta));
        svg.polyline(
            row.iter().map(|c| (xs.at(c.delta), ys.at(c.mean))),
            &format!("stroke=\"{color}\" stroke-width=\"1.5\" class=\"study-line\" data-n=\"{n}\""),
        );
        for band in [
            row.iter().map(|c| c.lower.max(0.0)).collect::<Vec<_>>(),
            row.iter().map(|c| c.upper).collect(),
        ] {
            svg.polyline(
                row.iter().zip(&band).map(|(c, &v)| (xs.at(c.delta), ys.at(v))),
                &format!("stroke=\"{color}\" stroke-width=\"0.8\" stroke-dasharray=\"4 3\" class=\"study-band\""),
            );
        }
        let ly = TOP + 14.0 + 16.0 * k as f64;
        svg.line(
            right + 12.0,
            ly,
            right + 32.0,
            ly,
            &format!("stroke=\"{color}\" stroke-width=\"1.5\" class=\"legend\""),
        );
        svg.text(
            right + 36.0,
            ly + 4.0,
            &format!("n = {n}"),
            "class=\"legend\"",
        );
    }
    svg.finish()
}
