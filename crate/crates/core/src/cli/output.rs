//! Trajectory CSV, run-report JSON and SVG plots.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::Serialize;

use crate::control::ControlLaw;
use crate::simulator::{convergence_time, side_lengths, Trajectory};
use crate::stability::{classify, Verdict};
use crate::Point;

/// Formats a value with 17 significant digits, which round-trips every
/// `f64` exactly.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header `t,x1,y1,…,xn,yn,e_theta_norm,e_d`, then one row per sample. The
/// `e_d` cell is empty when the chain end distance is not controlled.
pub fn write_csv<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    let n = traj.agents();
    let mut header = String::from("t");
    for i in 1..=n {
        write!(header, ",x{i},y{i}").unwrap();
    }
    header.push_str(",e_theta_norm,e_d\n");
    w.write_all(header.as_bytes())?;

    let mut row = String::new();
    for k in 0..traj.len() {
        row.clear();
        row.push_str(&num(traj.times[k]));
        for q in &traj.positions[k] {
            row.push(',');
            row.push_str(&num(q.x));
            row.push(',');
            row.push_str(&num(q.y));
        }
        row.push(',');
        row.push_str(&num(traj.e_theta_norm[k]));
        row.push(',');
        if let Some(e) = traj.e_d[k] {
            row.push_str(&num(e));
        }
        row.push('\n');
        w.write_all(row.as_bytes())?;
    }
    w.flush()
}

pub fn csv_string(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_csv(traj, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ASCII")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidFitSummary {
    pub v: [f64; 2],
    pub omega: f64,
    /// Largest per-sample RMS misfit over the tail.
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventSnapshot {
    pub scheduled: f64,
    pub applied: f64,
    pub sides_before: Vec<f64>,
}

/// Summary of one run, written as `<prefix>.report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub converged: bool,
    pub convergence_time: Option<f64>,
    pub tolerance: f64,
    pub final_time: f64,
    /// Chain edge lengths followed by `‖p_n − p_1‖`.
    pub final_sides: Vec<f64>,
    /// Realized turn angles; `null` where an edge has zero length.
    pub final_angles: Vec<Option<f64>>,
    pub e_theta_final: f64,
    pub e_d_final: Option<f64>,
    /// Spectral verdict for the law's turn angles and ratios; `null` for
    /// the three-agent gradient laws.
    pub verdict: Option<Verdict>,
    /// Mean rigid motion over the last tenth of the samples.
    pub rigid_fit: Option<RigidFitSummary>,
    pub diverged: bool,
    pub diverged_at: Option<f64>,
    pub events: Vec<EventSnapshot>,
}

impl RunReport {
    pub fn new(traj: &Trajectory, law: &ControlLaw, tol: f64) -> Self {
        let last = traj.len() - 1;
        let p = traj.final_positions();
        let convergence = convergence_time(traj, tol);
        let verdict = if law.mode().is_three_agent() {
            None
        } else {
            classify(law.spec()).ok().map(|r| r.verdict)
        };
        RunReport {
            converged: convergence.is_some(),
            convergence_time: convergence,
            tolerance: tol,
            final_time: traj.times[last],
            final_sides: side_lengths(p),
            final_angles: traj.metrics[last].angles.clone(),
            e_theta_final: traj.e_theta_norm[last],
            e_d_final: traj.e_d[last],
            verdict,
            rigid_fit: tail_fit(traj),
            diverged: traj.diverged.is_some(),
            diverged_at: traj.diverged,
            events: traj
                .events
                .iter()
                .map(|e| EventSnapshot {
                    scheduled: e.scheduled,
                    applied: e.applied,
                    sides_before: e.sides_before.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn tail_fit(traj: &Trajectory) -> Option<RigidFitSummary> {
    if traj.diverged.is_some() {
        return None;
    }
    let start = traj.len() - traj.len().div_ceil(10);
    let fits: Vec<_> = traj.metrics[start..].iter().filter_map(|m| m.rigid_fit).collect();
    if fits.is_empty() {
        return None;
    }
    let k = fits.len() as f64;
    let v = fits.iter().map(|f| f.v).sum::<Point>() / k;
    Some(RigidFitSummary {
        v: [v.x, v.y],
        omega: fits.iter().map(|f| f.omega).sum::<f64>() / k,
        residual: fits.iter().map(|f| f.residual).fold(0.0, f64::max),
        samples: fits.len(),
    })
}

const PALETTE: [&str; 10] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#bcbd22", "#7f7f7f", "#e377c2",
];

fn color(i: usize, n: usize) -> String {
    if n <= PALETTE.len() {
        PALETTE[i].to_string()
    } else {
        format!("hsl({:.1},70%,45%)", 360.0 * i as f64 / n as f64)
    }
}

/// Agent paths in the plane: one polyline per agent, a cross at each start,
/// a dot at each end and, for closed chains, the final `p_1 – p_n` edge
/// dashed. The y axis points up.
pub fn write_svg<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    let n = traj.agents();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for q in traj.positions.iter().flatten() {
        xmin = xmin.min(q.x);
        xmax = xmax.max(q.x);
        ymin = ymin.min(q.y);
        ymax = ymax.max(q.y);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(1e-9);
    let margin = 0.05 * span;
    let (w_box, h_box) = ((xmax - xmin).max(1e-9) + 2.0 * margin, (ymax - ymin).max(1e-9) + 2.0 * margin);
    let stroke = span / 400.0;
    let mark = span / 80.0;
    let f = |v: f64| format!("{v:.6}");
    // SVG y grows downward; plot (x, −y).
    let pt = |q: &Point| format!("{},{}", f(q.x), f(-q.y));

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}" width="800" height="{}">"#,
        f(xmin - margin),
        f(-ymax - margin),
        f(w_box),
        f(h_box),
        (800.0 * h_box / w_box).round().max(1.0)
    )
    .unwrap();
    writeln!(s, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>"#, f(xmin - margin), f(-ymax - margin), f(w_box), f(h_box)).unwrap();

    for i in 0..n {
        let points: Vec<String> = traj.positions.iter().map(|p| pt(&p[i])).collect();
        writeln!(
            s,
            r#"<polyline class="path" fill="none" stroke="{}" stroke-width="{}" points="{}"/>"#,
            color(i, n),
            f(stroke),
            points.join(" ")
        )
        .unwrap();
    }

    if traj.closes_chain {
        let p = traj.final_positions();
        writeln!(
            s,
            r#"<line class="closing" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}" stroke-dasharray="{} {}"/>"#,
            f(p[0].x),
            f(-p[0].y),
            f(p[n - 1].x),
            f(-p[n - 1].y),
            color(0, n),
            f(2.0 * stroke),
            f(4.0 * stroke),
            f(3.0 * stroke)
        )
        .unwrap();
    }

    let first = &traj.positions[0];
    for (i, q) in first.iter().enumerate() {
        writeln!(
            s,
            r#"<path class="start" d="M {} {} L {} {} M {} {} L {} {}" stroke="{}" stroke-width="{}"/>"#,
            f(q.x - mark),
            f(-q.y - mark),
            f(q.x + mark),
            f(-q.y + mark),
            f(q.x - mark),
            f(-q.y + mark),
            f(q.x + mark),
            f(-q.y - mark),
            color(i, n),
            f(stroke * 1.5)
        )
        .unwrap();
    }
    for (i, q) in traj.final_positions().iter().enumerate() {
        writeln!(s, r#"<circle class="end" cx="{}" cy="{}" r="{}" fill="{}"/>"#, f(q.x), f(-q.y), f(mark * 0.8), color(i, n)).unwrap();
    }
    s.push_str("</svg>\n");
    w.write_all(s.as_bytes())?;
    w.flush()
}

pub fn svg_string(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_svg(traj, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("svg output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ShapeSpec;
    use crate::simulator::{run, Initial, Integrator, Method, Scenario};

    fn line_run(n: usize, t_end: f64, positions: Vec<Point>) -> (Trajectory, ControlLaw) {
        let law = ControlLaw::line(ShapeSpec::line(n).unwrap()).unwrap();
        let s = Scenario::new(
            Initial::Positions(positions),
            law.clone(),
            Integrator {
                dt: 0.01,
                t_end,
                method: Method::Rk4,
            },
            vec![],
            1,
        )
        .unwrap();
        (run(&s).unwrap(), law)
    }

    fn single_sample() -> Trajectory {
        let (mut traj, _) = line_run(3, 0.01, vec![Point::new(0.0, 0.0), Point::new(0.5, 0.25), Point::new(1.0, 0.0)]);
        traj.times.truncate(1);
        traj.positions.truncate(1);
        traj.e_theta_norm.truncate(1);
        traj.e_d.truncate(1);
        traj.metrics.truncate(1);
        traj
    }

    #[test]
    fn one_sample_three_agents() {
        let csv = csv_string(&single_sample());
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,x1,y1,x2,y2,x3,y3,e_theta_norm,e_d");
        assert_eq!(lines.len(), 2);
        let cells: Vec<_> = lines[1].split(',').collect();
        assert_eq!(cells.len(), 9);
        assert_eq!(cells[8], "");
        assert_eq!(cells[0], "0.0000000000000000e0");
    }

    #[test]
    fn csv_round_trips_exactly() {
        let (traj, _) = line_run(
            4,
            1.0,
            vec![Point::new(0.1, -0.3), Point::new(1.0 / 3.0, 2.0), Point::new(-7.25, 1e-300), Point::new(5.0, 4.0)],
        );
        let csv = csv_string(&traj);
        for (k, line) in csv.lines().skip(1).enumerate() {
            let v: Vec<f64> = line.split(',').filter(|c| !c.is_empty()).map(|c| c.parse().unwrap()).collect();
            assert_eq!(v[0].to_bits(), traj.times[k].to_bits());
            for (i, q) in traj.positions[k].iter().enumerate() {
                assert_eq!(v[1 + 2 * i].to_bits(), q.x.to_bits());
                assert_eq!(v[2 + 2 * i].to_bits(), q.y.to_bits());
            }
            assert_eq!(v[9].to_bits(), traj.e_theta_norm[k].to_bits());
        }
        assert!(!csv.contains(' '));
    }

    #[test]
    fn report_for_equilibrium() {
        let p: Vec<_> = (0..4).map(|i| Point::new(i as f64, 0.0)).collect();
        let (traj, law) = line_run(4, 1.0, p);
        let r = RunReport::new(&traj, &law, 1e-9);
        assert!(r.converged);
        assert_eq!(r.convergence_time, Some(0.0));
        assert_eq!(r.final_sides, vec![1.0, 1.0, 1.0, 3.0]);
        assert_eq!(r.final_angles, vec![Some(0.0), Some(0.0)]);
        assert_eq!(r.verdict, Some(Verdict::Stable));
        assert!(!r.diverged);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["converged", "convergence_time", "final_sides", "final_angles", "e_d_final", "verdict", "rigid_fit"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["verdict"], "stable");
        let fit = &json["rigid_fit"];
        assert!(fit["v"].is_array() && fit["omega"].is_number() && fit["residual"].is_number());
    }

    #[test]
    fn static_svg_has_markers_and_degenerate_paths() {
        let p: Vec<_> = (0..4).map(|i| Point::new(i as f64, 0.0)).collect();
        let (traj, _) = line_run(4, 0.05, p);
        let svg = svg_string(&traj);
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches(r#"class="start""#).count(), 4);
        assert_eq!(svg.matches(r#"class="end""#).count(), 4);
        assert!(!svg.contains("stroke-dasharray"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
