//! Static SVG of the sigma plane.
//!
//! The boundary `sigma_R = sigma_I^2 - 1/4` is one `path.boundary`, each
//! non-swing bus one `polyline.trajectory`, and every reactive-limit switch a
//! `circle.switch`. The window fits all samples and the parabola vertex.

use std::fmt::Write;

use sigma_he::he::StagedSolution;
use sigma_he::sigma::{sample_grid, ChannelTrajectory};
use sigma_he::EvalMethod;

use crate::commands::Output;
use crate::config::{CliError, Range, RunConfig};
use crate::numfmt::fmt12;
use crate::trace::{collapse_in_range, compute};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Data window `(x0, x1, y0, y1)` in sigma coordinates.
fn window(points: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (-0.25_f64, -0.25_f64, 0.0_f64, 0.0_f64);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = |a: f64, b: f64| if b - a > 1e-9 { b - a } else { 0.5 };
    let (px, py) = (0.08 * span(x0, x1), 0.08 * span(y0, y1));
    (x0 - px, x1 + px, y0 - py, y1 + py)
}

fn num(x: f64) -> String {
    format!("{x:.2}")
}

pub fn render(
    st: &StagedSolution,
    traj: &[ChannelTrajectory],
    r: Range,
    method: EvalMethod,
) -> String {
    let markers: Vec<(usize, (f64, f64))> = st
        .plan
        .switches
        .iter()
        .filter(|e| e.s >= r.from && e.s <= r.to)
        .filter_map(|e| {
            let k = traj.iter().position(|t| t.bus == e.bus)?;
            let sol = st.solution_at(e.s);
            let sig = sol.sigma_at(e.bus, e.s, method)?.value;
            Some((k, (sig.re, sig.im)))
        })
        .collect();
    let mut pts: Vec<(f64, f64)> = traj
        .iter()
        .flat_map(|t| t.samples.iter().map(|p| (p.sigma.re, p.sigma.im)))
        .collect();
    pts.extend(markers.iter().map(|m| m.1));
    let (x0, x1, y0, y1) = window(&pts);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    let o = &mut out;
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(o, "<title>sigma plane, s = {} to {}</title>", fmt12(r.from), fmt12(r.to));
    let _ = writeln!(
        o,
        r#"<defs><clipPath id="plot-area"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath></defs>"#,
        num(LEFT),
        num(TOP),
        num(pw),
        num(ph)
    );
    let _ = writeln!(
        o,
        r##"<rect class="frame" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        num(LEFT),
        num(TOP),
        num(pw),
        num(ph)
    );
    if (x0..=x1).contains(&0.0) {
        let _ = writeln!(
            o,
            r##"<line class="axis" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#bbb"/>"##,
            num(TOP),
            num(TOP + ph),
            x = num(sx(0.0))
        );
    }
    if (y0..=y1).contains(&0.0) {
        let _ = writeln!(
            o,
            r##"<line class="axis" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#bbb"/>"##,
            num(LEFT),
            num(LEFT + pw),
            y = num(sy(0.0))
        );
    }
    for (x, anchor, label) in [(LEFT, "start", x0), (LEFT + pw, "end", x1)] {
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}" text-anchor="{anchor}">{}</text>"#,
            num(x),
            num(TOP + ph + 16.0),
            fmt12(round4(label))
        );
    }
    for (y, label) in [(TOP + ph, y0), (TOP + 10.0, y1)] {
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(LEFT - 6.0),
            num(y),
            fmt12(round4(label))
        );
    }
    let _ = writeln!(
        o,
        r#"<text x="{}" y="{}" text-anchor="middle">sigma_R</text>"#,
        num(LEFT + pw / 2.0),
        num(HEIGHT - 12.0)
    );
    let _ = writeln!(
        o,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">sigma_I</text>"#,
        num(TOP + ph / 2.0),
        num(TOP + ph / 2.0)
    );

    // the parabola, sampled over the visible sigma_I range
    let n = 200;
    let mut d = String::new();
    for i in 0..=n {
        let y = y0 + (y1 - y0) * i as f64 / n as f64;
        let x = y * y - 0.25;
        let _ = write!(d, "{}{},{}", if i == 0 { "M" } else { " L" }, num(sx(x)), num(sy(y)));
    }
    let _ = writeln!(
        o,
        r##"<path class="boundary" clip-path="url(#plot-area)" d="{d}" fill="none" stroke="#000" stroke-width="1.5"/>"##
    );

    for (k, t) in traj.iter().enumerate() {
        let points: Vec<String> = t
            .samples
            .iter()
            .map(|p| format!("{},{}", num(sx(p.sigma.re)), num(sy(p.sigma.im))))
            .collect();
        let _ = writeln!(
            o,
            r#"<polyline class="trajectory" data-bus="{}" points="{}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
            t.bus,
            points.join(" "),
            PALETTE[k % PALETTE.len()]
        );
    }
    for (k, (x, y)) in &markers {
        let _ = writeln!(
            o,
            r##"<circle class="switch" data-bus="{}" cx="{}" cy="{}" r="4" fill="none" stroke="#7b2cbf" stroke-width="1.5"/>"##,
            traj[*k].bus,
            num(sx(*x)),
            num(sy(*y))
        );
    }

    let _ = writeln!(o, r#"<g class="legend">"#);
    let lx = LEFT + pw + 14.0;
    for (k, t) in traj.iter().enumerate() {
        let y = TOP + 8.0 + 16.0 * k as f64;
        let _ = writeln!(
            o,
            r#"<rect x="{}" y="{}" width="14" height="3" fill="{}"/><text x="{}" y="{}">bus {}</text>"#,
            num(lx),
            num(y - 3.0),
            PALETTE[k % PALETTE.len()],
            num(lx + 20.0),
            num(y + 1.0),
            t.bus
        );
    }
    if !markers.is_empty() {
        let y = TOP + 8.0 + 16.0 * traj.len() as f64;
        let _ = writeln!(
            o,
            r##"<rect x="{}" y="{}" width="8" height="8" fill="none" stroke="#7b2cbf"/><text x="{}" y="{}">PV to PQ</text>"##,
            num(lx + 3.0),
            num(y - 6.0),
            num(lx + 20.0),
            num(y + 1.0)
        );
    }
    let _ = writeln!(o, "</g>");
    let _ = writeln!(o, "</svg>");
    out
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

pub fn cmd_plot(cfg: &RunConfig, r: Range) -> Result<Output, CliError> {
    let grid = sample_grid(r.from, r.to, r.step)?;
    let (st, traj) = compute(cfg, r)?;
    Ok(Output {
        body: render(&st, &traj, r, cfg.method),
        infeasible: collapse_in_range(&traj, grid.len()),
    })
}
