//! End-to-end verification criteria.
//!
//! Each criterion is a self-contained check returning a [`Check`]; the
//! runner times it and compares against its runtime budget. `polyform
//! verify` and the `acceptance` test target both go through
//! [`run_criterion`], so they report identical results.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::cli::output::csv_string;
use crate::cli::scenario::{hexagon, load_scenario, LoadError};
use crate::control::{deployment_law, mismatch_only_law_3, scale_law, steering_law, ControlLaw, MotionParams};
use crate::geometry::{line_error, polygon_error, ShapeSpec};
use crate::simulator::{
    centroid, collinearity_residual, fit_rigid_motion, random_positions, realized_angles, run, run_batch,
    side_lengths, step, FnField, Initial, Integrator, Method, Scenario, Trajectory,
};
use crate::stability::{assemble_a, classify, closed_form_eigs, numerical_eigs, stability_bound};
use crate::topology::{stack, Topology};
use crate::{FormationError, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Check {
            passed,
            detail: detail.into(),
        }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Check::new(false, detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<32} {} ({:.3} s) {}",
            self.id,
            self.title,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Inputs shared by the criteria: the hexagon scenario and its (lazily
/// computed, cached) trajectory.
pub struct Fixtures {
    pub hexagon: Scenario,
    hexagon_run: OnceLock<Result<Trajectory, FormationError>>,
}

impl Fixtures {
    pub fn new(hexagon: Scenario) -> Self {
        Fixtures {
            hexagon,
            hexagon_run: OnceLock::new(),
        }
    }

    /// The scenario compiled into the crate.
    pub fn bundled() -> Self {
        Fixtures::new(hexagon())
    }

    /// Loads `hexagon.json` from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, LoadError> {
        Ok(Fixtures::new(load_scenario(&dir.join("hexagon.json"))?))
    }

    pub fn hexagon_run(&self) -> Result<&Trajectory, FormationError> {
        self.hexagon_run
            .get_or_init(|| run(&self.hexagon))
            .as_ref()
            .map_err(Clone::clone)
    }
}

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub budget: Option<Duration>,
    check: fn(&Fixtures) -> Check,
}

const fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, title: "eigenvalue oracle", budget: secs(5), check: |_| eigenvalue_oracle() },
    Criterion { id: 2, title: "stability bound, both directions", budget: secs(30), check: |_| stability_bound_both_directions() },
    Criterion { id: 3, title: "line deployment", budget: secs(10), check: |_| line_deployment() },
    Criterion { id: 4, title: "ratio control", budget: None, check: |_| ratio_control() },
    Criterion { id: 5, title: "hexagon experiment", budget: secs(10), check: hexagon_experiment },
    Criterion { id: 6, title: "spin about the centroid", budget: None, check: spin_about_centroid },
    Criterion { id: 7, title: "error-dynamics consistency", budget: None, check: |_| error_dynamics_consistency() },
    Criterion { id: 8, title: "scale-law sign", budget: None, check: |_| scale_law_sign() },
    Criterion { id: 9, title: "reduction identities", budget: None, check: |_| reduction_identities() },
    Criterion { id: 10, title: "determinism", budget: None, check: determinism },
];

/// Runs criterion `id` (1-based). A criterion that exceeds its runtime
/// budget fails even if its check passed.
pub fn run_criterion(id: u8, fixtures: &Fixtures) -> Outcome {
    let c = CRITERIA
        .iter()
        .find(|c| c.id == id)
        .unwrap_or_else(|| panic!("no criterion {id}"));
    let start = Instant::now();
    let check = (c.check)(fixtures);
    let elapsed = start.elapsed();
    let over = c.budget.is_some_and(|b| elapsed > b);
    let mut detail = check.detail;
    if over {
        detail.push_str(&format!("; exceeded budget of {:?}", c.budget.unwrap()));
    }
    Outcome {
        id,
        title: c.title,
        passed: check.passed && !over,
        detail,
        elapsed,
        budget: c.budget,
    }
}

pub fn run_all(fixtures: &Fixtures) -> Vec<Outcome> {
    CRITERIA.iter().map(|c| run_criterion(c.id, fixtures)).collect()
}

/// Twenty-five angles spanning `(−π, π]`, ending at `π`.
pub fn oracle_angles() -> Vec<f64> {
    (1..=25).map(|j| -PI + 2.0 * PI * j as f64 / 25.0).collect()
}

/// Numerical spectrum of `A(θ*)` against the closed form, each closed-form
/// value counted twice, for `n = 3..=12`.
pub fn eigenvalue_oracle() -> Check {
    let mut worst = 0.0f64;
    let mut worst_at = (0, 0.0);
    for n in 3..=12 {
        for theta in oracle_angles() {
            let spec = match ShapeSpec::uniform(n, theta) {
                Ok(s) => s,
                Err(e) => return Check::fail(format!("n={n}, θ={theta}: {e}")),
            };
            let eigs = match assemble_a(&spec).and_then(|a| numerical_eigs(&a)) {
                Ok(e) => e,
                Err(e) => return Check::fail(format!("n={n}, θ={theta}: {e}")),
            };
            let mut expected: Vec<f64> = closed_form_eigs(theta, n)
                .expect("n ≥ 3")
                .into_iter()
                .flat_map(|l| [l, l])
                .collect();
            expected.sort_by(f64::total_cmp);
            let mut got = eigs;
            got.sort_by(|a, b| a.re.total_cmp(&b.re));
            if got.len() != expected.len() {
                return Check::fail(format!("n={n}: {} eigenvalues, expected {}", got.len(), expected.len()));
            }
            for (g, e) in got.iter().zip(&expected) {
                let dev = (g.re - e).hypot(g.im);
                if dev > worst {
                    worst = dev;
                    worst_at = (n, theta);
                }
            }
        }
    }
    Check::new(
        worst <= 1e-9,
        format!(
            "max deviation {worst:.2e} (n={}, θ={:.4}) over 250 cases, tolerance 1e-9",
            worst_at.0, worst_at.1
        ),
    )
}

/// Chain positions whose polygon error has unit norm, in polygon mode.
fn unit_error_start(law: &ControlLaw, seed: u64) -> Result<Vec<Point>, FormationError> {
    let p = random_positions(law.agents(), seed, [-1.0, -1.0, 1.0, 1.0]);
    let e0 = law.error_norms(&p)?.shape;
    Ok(p.iter().map(|q| q / e0).collect())
}

fn polygon_run(law: ControlLaw, p0: Vec<Point>, dt: f64, steps: usize) -> Result<Trajectory, FormationError> {
    let s = Scenario::new(
        Initial::Positions(p0),
        law,
        Integrator {
            dt,
            t_end: steps as f64 * dt,
            method: Method::Rk4,
        },
        vec![],
        steps,
    )?;
    run(&s)
}

/// `θ* = 0.95·2π/(n−1)` must be stable and converge within 2000 steps;
/// `θ* = 1.05·2π/(n−1)` must be unstable and grow, for `n = 4..=10`.
pub fn stability_bound_both_directions() -> Check {
    const STEPS: usize = 2000;
    let mut notes = Vec::new();
    for n in 4..=10 {
        for (factor, expect_stable) in [(0.95, true), (1.05, false)] {
            let theta = factor * stability_bound(n);
            let outcome = (|| -> Result<(f64, f64, f64), FormationError> {
                let spec = ShapeSpec::uniform(n, theta)?;
                let report = classify(&spec)?;
                let lambda_max = report.eigenvalues.iter().map(|e| e[0].abs()).fold(0.0, f64::max);
                let law = ControlLaw::polygon(spec)?;
                let p0 = unit_error_start(&law, 1000 + n as u64)?;
                // Step size at the edge of the RK4 real-axis stability interval
                // for the fastest mode; the slow modes set the run length.
                let traj = polygon_run(law, p0, 2.4 / lambda_max, STEPS)?;
                if traj.diverged.is_some() {
                    return Err(FormationError::Diverged { time: traj.times[traj.len() - 1] });
                }
                Ok((report.min_real, traj.e_theta_norm[0], traj.e_theta_norm[traj.len() - 1]))
            })();
            let (min_real, e0, e_end) = match outcome {
                Ok(v) => v,
                Err(e) => return Check::fail(format!("n={n}, θ*={theta:.4}: {e}")),
            };
            let ok = if expect_stable {
                min_real > 0.0 && e_end < 1e-6
            } else {
                min_real < 0.0 && e_end > e0
            };
            if !ok {
                return Check::fail(format!(
                    "n={n}, θ*={theta:.4}: min_real={min_real:.3e}, ‖e(0)‖={e0:.3e}, ‖e(end)‖={e_end:.3e}"
                ));
            }
            if n == 10 {
                notes.push(format!("n=10 ×{factor}: ‖e(end)‖={e_end:.2e}"));
            }
        }
    }
    Check::new(true, format!("14 runs agree with the spectrum; {}", notes.join(", ")))
}

/// Least-squares slope of `ln y` against `t`.
fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let k = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let tm = t.iter().sum::<f64>() / k;
    let lm = ly.iter().sum::<f64>() / k;
    let num: f64 = t.iter().zip(&ly).map(|(a, b)| (a - tm) * (b - lm)).sum();
    let den: f64 = t.iter().map(|a| (a - tm).powi(2)).sum();
    num / den
}

/// Smallest eigenvalue of `B_θᵀ B_θ` for an `n`-agent chain.
pub fn path_gram_min_eig(n: usize) -> f64 {
    2.0 - 2.0 * (PI / (n - 1) as f64).cos()
}

/// Line mode from random starts: collinear, equally spaced, and decaying at
/// the rate of the slowest path mode.
pub fn line_deployment() -> Check {
    let c = 1.0;
    let mut parts = Vec::new();
    for (n, seed) in [(3usize, 31u64), (5, 52), (8, 83)] {
        let outcome = (|| -> Result<(f64, f64, f64), FormationError> {
            let law = ControlLaw::line(ShapeSpec::line(n)?)?.with_gain(c)?;
            let s = Scenario::new(
                Initial::Random {
                    seed,
                    bounds: [-5.0, -5.0, 5.0, 5.0],
                },
                law,
                Integrator {
                    dt: 0.05,
                    t_end: 200.0,
                    method: Method::Rk4,
                },
                vec![],
                1,
            )?;
            let traj = run(&s)?;
            let p = traj.final_positions();
            let col = collinearity_residual(p).residual;
            let spacing = side_lengths(p);
            let chain = &spacing[..n - 1];
            let spread = chain.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - chain.iter().cloned().fold(f64::INFINITY, f64::min);
            let e0 = traj.e_theta_norm[0];
            let (ts, es): (Vec<f64>, Vec<f64>) = traj
                .times
                .iter()
                .zip(&traj.e_theta_norm)
                .filter(|(_, &e)| (1e-11..=1e-5).contains(&(e / e0)))
                .map(|(&t, &e)| (t, e))
                .unzip();
            if ts.len() < 10 {
                return Err(FormationError::Degenerate("too few samples in the tail window"));
            }
            Ok((col, spread, log_slope(&ts, &es)))
        })();
        let (col, spread, slope) = match outcome {
            Ok(v) => v,
            Err(e) => return Check::fail(format!("n={n}: {e}")),
        };
        let expected = -c * path_gram_min_eig(n);
        let rel = (slope - expected).abs() / expected.abs();
        if !(col < 1e-8 && spread < 1e-8 && rel <= 0.05) {
            return Check::fail(format!(
                "n={n}: collinearity {col:.2e}, spacing spread {spread:.2e}, slope {slope:.5} vs {expected:.5}"
            ));
        }
        parts.push(format!("n={n} slope {slope:.4}/{expected:.4}"));
    }
    Check::new(true, parts.join(", "))
}

/// Ratio-spaced line, `n = 5`, ratios `(1, 2, 1, 2)`.
pub fn ratio_control() -> Check {
    let ratios = vec![1.0, 2.0, 1.0, 2.0];
    let outcome = (|| -> Result<Trajectory, FormationError> {
        let law = ControlLaw::line(ShapeSpec::line(5)?.with_ratios(ratios.clone())?)?;
        let s = Scenario::new(
            Initial::Random {
                seed: 45,
                bounds: [-5.0, -5.0, 5.0, 5.0],
            },
            law,
            Integrator {
                dt: 0.05,
                t_end: 200.0,
                method: Method::Rk4,
            },
            vec![],
            100,
        )?;
        run(&s)
    })();
    let traj = match outcome {
        Ok(t) => t,
        Err(e) => return Check::fail(e.to_string()),
    };
    let p = traj.final_positions();
    let z = Topology::daisy_chain(5).expect("n = 5").relative_positions(p).expect("five agents");
    let mut err_max = 0.0f64;
    let mut ratio_max = 0.0f64;
    for k in 0..3 {
        err_max = err_max.max((z[k] * ratios[k] - z[k + 1] * ratios[k + 1]).norm());
        let observed = z[k].norm() / z[k + 1].norm();
        ratio_max = ratio_max.max((observed - ratios[k + 1] / ratios[k]).abs());
    }
    Check::new(
        err_max < 1e-8 && ratio_max < 1e-6,
        format!("max ‖r_k z_k − r_(k+1) z_(k+1)‖ {err_max:.2e}, max ratio deviation {ratio_max:.2e}"),
    )
}

fn max_dev(values: &[f64], target: f64) -> f64 {
    values.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
}

fn sides_and_angles(p: &[Point]) -> Result<(Vec<f64>, Vec<f64>), FormationError> {
    let z: Vec<Point> = p.windows(2).map(|w| w[0] - w[1]).collect();
    Ok((side_lengths(p), realized_angles(&z)?))
}

/// Six agents form a hexagon of side 10 by `t = 150` and of side 30 by the
/// end of the run after the event rescales the target.
pub fn hexagon_experiment(fx: &Fixtures) -> Check {
    let traj = match fx.hexagon_run() {
        Ok(t) => t,
        Err(e) => return Check::fail(e.to_string()),
    };
    if let Some(t) = traj.diverged {
        return Check::fail(format!("diverged at t={t}"));
    }
    let Some(event) = fx.hexagon.events().first() else {
        return Check::fail("scenario has no rescaling event");
    };
    let d0 = fx.hexagon.law().spec().closing_distance().unwrap_or(f64::NAN);
    let d1 = fx.hexagon.final_law().spec().closing_distance().unwrap_or(f64::NAN);
    let theta = fx.hexagon.law().spec().theta()[0];
    let Some(mid) = traj.index_at(event.t) else {
        return Check::fail("no sample at the event time");
    };
    let last = traj.len() - 1;
    let (sides_mid, angles_mid) = match sides_and_angles(&traj.positions[mid]) {
        Ok(v) => v,
        Err(e) => return Check::fail(e.to_string()),
    };
    let (sides_end, angles_end) = match sides_and_angles(&traj.positions[last]) {
        Ok(v) => v,
        Err(e) => return Check::fail(e.to_string()),
    };
    let (s_mid, a_mid) = (max_dev(&sides_mid, d0), max_dev(&angles_mid, theta));
    let (s_end, a_end) = (max_dev(&sides_end, d1), max_dev(&angles_end, theta));
    let passed = sides_mid.len() == 6
        && angles_mid.len() == 4
        && s_mid < 1e-3
        && a_mid < 1e-4
        && s_end < 1e-3
        && d1 == 3.0 * d0;
    Check::new(
        passed,
        format!(
            "t={:.0}: sides within {s_mid:.1e} of {d0}, angles within {a_mid:.1e}; t={:.0}: sides within {s_end:.1e} of {d1}, angles within {a_end:.1e}",
            traj.times[mid], traj.times[last]
        ),
    )
}

/// Tail span, in time units, examined for the steady spin.
pub const SPIN_TAIL: f64 = 50.0;

/// The converged hexagon rotates rigidly about a fixed centroid at a
/// constant rate.
pub fn spin_about_centroid(fx: &Fixtures) -> Check {
    let traj = match fx.hexagon_run() {
        Ok(t) => t,
        Err(e) => return Check::fail(e.to_string()),
    };
    let law = fx.hexagon.final_law();
    let t_end = traj.times[traj.len() - 1];
    let start = traj.times.partition_point(|&t| t < t_end - SPIN_TAIL);
    let tail = start..traj.len();
    if tail.len() < 10 {
        return Check::fail("tail too short");
    }

    let mut fit_ratio = 0.0f64;
    let mut v_ratio = 0.0f64;
    for k in tail.clone() {
        let p = &traj.positions[k];
        let u = match law.velocities(p) {
            Ok(u) => u,
            Err(e) => return Check::fail(e.to_string()),
        };
        let fit = match fit_rigid_motion(p, &u) {
            Ok(f) => f,
            Err(e) => return Check::fail(e.to_string()),
        };
        let speed = (u.iter().map(|v| v.norm_squared()).sum::<f64>() / u.len() as f64).sqrt();
        let c = centroid(p);
        let radius = p.iter().map(|q| (q - c).norm()).sum::<f64>() / p.len() as f64;
        fit_ratio = fit_ratio.max(fit.residual / speed);
        v_ratio = v_ratio.max(fit.v.norm() / (fit.omega.abs() * radius));
    }

    // Rotation rate from the heading of agent 1 about the centroid over
    // disjoint windows.
    let windows = 5;
    let per = (tail.len() - 1) / windows;
    let heading = |k: usize| {
        let p = &traj.positions[k];
        p[0] - centroid(p)
    };
    let omegas: Vec<f64> = (0..windows)
        .map(|w| {
            let (a, b) = (start + w * per, start + (w + 1) * per);
            let (ha, hb) = (heading(a), heading(b));
            let angle = ha.perp(&hb).atan2(ha.dot(&hb));
            angle / (traj.times[b] - traj.times[a])
        })
        .collect();
    let mean = omegas.iter().sum::<f64>() / windows as f64;
    let sd = (omegas.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / windows as f64).sqrt();
    let cv = sd / mean.abs();

    let c0 = centroid(&traj.positions[start]);
    let drift = tail.map(|k| (centroid(&traj.positions[k]) - c0).norm()).fold(0.0, f64::max);

    Check::new(
        fit_ratio < 1e-4 && v_ratio < 1e-4 && cv < 0.01 && drift < 1e-3,
        format!(
            "ω={mean:.6}, residual/‖u‖ {fit_ratio:.1e}, ‖v‖/(ωR) {v_ratio:.1e}, ω CV {cv:.1e}, centroid drift {drift:.1e}"
        ),
    )
}

/// Forward differences of `e_θ` along a polygon run approach `−c A e_θ` at
/// first order in the step.
pub fn error_dynamics_consistency() -> Check {
    let steps: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
    let outcome = (|| -> Result<Vec<f64>, FormationError> {
        let spec = ShapeSpec::new(vec![1.2, 0.8, 1.0], vec![1.0; 4], None)?;
        let c = 1.5;
        let law = ControlLaw::polygon(spec.clone())?.with_gain(c)?;
        let a = assemble_a(&spec)? * c;
        let t = law.topology().clone();
        let error = |p: &[Point]| -> Result<DVector<f64>, FormationError> {
            Ok(stack(&polygon_error(&t.relative_positions(p)?, &t, &spec)?.e_theta))
        };
        let p0 = random_positions(5, 77, [-2.0, -2.0, 2.0, 2.0]);
        let mut errors = Vec::new();
        for &h in &steps {
            let per_sample = (0.05 / h).round() as usize;
            let mut p = p0.clone();
            let (mut worst, mut scale) = (0.0f64, 0.0f64);
            for s in 0..=20 {
                if s > 0 {
                    for _ in 0..per_sample {
                        p = step(&law, &p, h, Method::Rk4)?;
                    }
                }
                let e = error(&p)?;
                let next = step(&law, &p, h, Method::Rk4)?;
                let fd = (error(&next)? - &e) / h;
                let exact = -(&a * &e);
                worst = worst.max((fd - &exact).norm());
                scale = scale.max(exact.norm());
            }
            errors.push(worst / scale);
        }
        Ok(errors)
    })();
    let errors = match outcome {
        Ok(e) => e,
        Err(e) => return Check::fail(e.to_string()),
    };
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    Check::new(
        min_order >= 0.9,
        format!(
            "relative FD error {:.2e} / {:.2e} / {:.2e}, observed orders {:.3}, {:.3}",
            errors[0], errors[1], errors[2], orders[0], orders[1]
        ),
    )
}

/// Scale law on two agents: distance moves monotonically to `d`, midpoint
/// fixed.
pub fn scale_law_sign() -> Check {
    scale_law_sign_with(|p, d| scale_law(p, d, 1.0, false).expect("valid inputs").velocities)
}

/// [`scale_law_sign`] for an arbitrary two-agent scale field `f(p, d)`.
pub fn scale_law_sign_with<F>(field: F) -> Check
where
    F: Fn(&[Point], f64) -> Vec<Point>,
{
    let d = 2.0;
    let mut parts = Vec::new();
    for start in [1.0, 3.0] {
        let f = FnField(|p: &[Point]| field(p, d));
        let mut p = vec![Point::new(0.0, 0.0), Point::new(start, 0.0)];
        let mid0 = (p[0] + p[1]) / 2.0;
        let increasing = start < d;
        let mut dist = start;
        let mut mid_drift = 0.0f64;
        for k in 0..5000 {
            p = match step(&f, &p, 1e-3, Method::Rk4) {
                Ok(next) => next,
                Err(e) => return Check::fail(format!("from {start}: {e}")),
            };
            let next = (p[1] - p[0]).norm();
            let monotone = if increasing { next > dist } else { next < dist };
            let settled = (dist - d).abs() <= 1e-12;
            if !monotone && !settled {
                return Check::fail(format!(
                    "from {start}: distance {dist:.12} → {next:.12} at step {k} moves the wrong way"
                ));
            }
            if (increasing && next > d + 1e-12) || (!increasing && next < d - 1e-12) {
                return Check::fail(format!("from {start}: overshoot to {next:.12}"));
            }
            dist = next;
            mid_drift = mid_drift.max(((p[0] + p[1]) / 2.0 - mid0).norm());
        }
        if (dist - d).abs() > 1e-6 || mid_drift > 1e-9 {
            return Check::fail(format!(
                "from {start}: final distance {dist:.9}, midpoint drift {mid_drift:.1e}"
            ));
        }
        parts.push(format!("{start} → {dist:.9} (midpoint drift {mid_drift:.0e})"));
    }
    Check::new(true, parts.join(", "))
}

fn unit(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Three exact identities, each on 100 random configurations.
pub fn reduction_identities() -> Check {
    let mut rng = SplitMix64::seed_from_u64(2024);
    let trials = 100;
    for trial in 0..trials {
        let n = 3 + (rng.next_u64() % 8) as usize;
        let p = random_positions(n, rng.next_u64(), [-10.0, -10.0, 10.0, 10.0]);
        let t = Topology::daisy_chain(n).expect("n ≥ 3");
        let z = t.relative_positions(&p).expect("n agents");

        let flat = ShapeSpec::line(n).expect("n ≥ 3");
        let e_poly = polygon_error(&z, &t, &flat).expect("valid inputs").e_theta;
        let e_line = line_error(&z, &t).expect("valid inputs").e_theta;
        if e_poly != e_line {
            return Check::fail(format!("trial {trial}: θ=0 polygon error differs from line error"));
        }

        let theta = -PI + 2.0 * PI * unit(&mut rng).max(1e-12);
        let d = 0.5 + 20.0 * unit(&mut rng);
        let c = 0.1 + 3.0 * unit(&mut rng);
        let k_d = 0.01 + 2.0 * unit(&mut rng);
        let spec = ShapeSpec::uniform(n, theta)
            .and_then(|s| s.with_closing_distance(d))
            .expect("valid spec");
        let law = ControlLaw::steered(spec, MotionParams::uniform(n, 0.0).expect("finite"))
            .and_then(|l| l.with_gain(c))
            .and_then(|l| l.with_scale_gain(k_d))
            .expect("valid law");
        let steer = steering_law(&p, &law).expect("valid inputs");
        let deploy = deployment_law(&p, &law).expect("valid inputs");
        let scale = scale_law(&p, d, k_d, false).expect("valid inputs").velocities;
        let sum: Vec<Point> = deploy.iter().zip(&scale).map(|(a, b)| a + b).collect();
        if steer != sum {
            return Check::fail(format!("trial {trial}: μ=0 steering differs from deployment + scale"));
        }

        // Powers of two make scaling commute with rounding, so
        // `c·z₁ − c·z₂` and `c·(z₁ − z₂)` agree bit for bit.
        let c = 2f64.powi((rng.next_u64() % 7) as i32 - 3);
        let q = random_positions(3, rng.next_u64(), [-10.0, -10.0, 10.0, 10.0]);
        let t3 = Topology::daisy_chain(3).expect("n = 3");
        let mid = mismatch_only_law_3(&q, c, c).expect("three agents")[1];
        let e = line_error(&t3.relative_positions(&q).expect("three agents"), &t3).expect("valid").e_theta[0] * c;
        if mid != e {
            return Check::fail(format!("trial {trial}: mismatch law with μ₁=μ₂={c} differs from c·e"));
        }
    }
    Check::new(true, format!("{trials} configurations per identity, all bitwise equal"))
}

/// The hexagon scenario's CSV is byte-identical across reruns, including
/// runs on other threads.
pub fn determinism(fx: &Fixtures) -> Check {
    let first = match fx.hexagon_run() {
        Ok(t) => csv_string(t),
        Err(e) => return Check::fail(e.to_string()),
    };
    let reruns = run_batch(&[fx.hexagon.clone(), fx.hexagon.clone()]);
    for (i, r) in reruns.iter().enumerate() {
        match r {
            Ok(t) if csv_string(t) == first => {}
            Ok(_) => return Check::fail(format!("rerun {} produced different bytes", i + 1)),
            Err(e) => return Check::fail(e.to_string()),
        }
    }
    Check::new(true, format!("3 runs, {} bytes each, identical", first.len()))
}
