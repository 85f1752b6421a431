//! Fixed-step integration of `ṗ = u(p)`, parameter events and formation
//! metrics.
//!
//! A run is a pure function of its [`Scenario`]: the same scenario (and
//! seed) yields a bitwise-identical [`Trajectory`].

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControlLaw, Mode, MotionParams};
use crate::{FormationError, Point, Result};

/// Anything that maps a configuration to agent velocities.
pub trait VelocityField {
    fn velocities(&self, p: &[Point]) -> Result<Vec<Point>>;
}

impl VelocityField for ControlLaw {
    fn velocities(&self, p: &[Point]) -> Result<Vec<Point>> {
        ControlLaw::velocities(self, p)
    }
}

/// Adapts a closure into a [`VelocityField`].
pub struct FnField<F>(pub F);

impl<F> VelocityField for FnField<F>
where
    F: Fn(&[Point]) -> Vec<Point>,
{
    fn velocities(&self, p: &[Point]) -> Result<Vec<Point>> {
        Ok((self.0)(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Rk4,
}

fn axpy(p: &[Point], h: f64, k: &[Point]) -> Vec<Point> {
    p.iter().zip(k).map(|(a, b)| a + b * h).collect()
}

/// One explicit step of size `dt`.
///
/// A non-finite result is reported as [`FormationError::Diverged`] with
/// `time = dt`, i.e. relative to the start of the step.
pub fn step<F: VelocityField + ?Sized>(
    field: &F,
    p: &[Point],
    dt: f64,
    method: Method,
) -> Result<Vec<Point>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FormationError::invalid("dt", format!("{dt} must be positive")));
    }
    let next = match method {
        Method::Euler => axpy(p, dt, &field.velocities(p)?),
        Method::Rk4 => {
            let k1 = field.velocities(p)?;
            let k2 = field.velocities(&axpy(p, dt / 2.0, &k1))?;
            let k3 = field.velocities(&axpy(p, dt / 2.0, &k2))?;
            let k4 = field.velocities(&axpy(p, dt, &k3))?;
            p.iter()
                .enumerate()
                .map(|(i, q)| q + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0))
                .collect::<Vec<_>>()
        }
    };
    if next.iter().all(|q| q.x.is_finite() && q.y.is_finite()) {
        Ok(next)
    } else {
        Err(FormationError::Diverged { time: dt })
    }
}

/// Uniform placement in `[xmin, xmax] × [ymin, ymax]`.
///
/// Generator: SplitMix64 with its state initialised to `seed`. Each agent
/// draws `x` then `y`; a draw maps `next_u64() >> 11` to `[0, 1)` by
/// multiplying with `2⁻⁵³`.
pub fn random_positions(n: usize, seed: u64, bounds: [f64; 4]) -> Vec<Point> {
    let [xmin, ymin, xmax, ymax] = bounds;
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (0..n)
        .map(|_| {
            let x = xmin + (xmax - xmin) * unit();
            let y = ymin + (ymax - ymin) * unit();
            Point::new(x, y)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Positions(Vec<Point>),
    Random { seed: u64, bounds: [f64; 4] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator {
            dt: 0.005,
            t_end: 100.0,
            method: Method::Rk4,
        }
    }
}

/// Parameters an event may change. Positions are never patched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterPatch {
    pub d: Option<f64>,
    pub c: Option<f64>,
    pub k_d: Option<f64>,
    pub motion: Option<MotionParams>,
    pub mismatches: Option<[f64; 2]>,
    pub distances: Option<[f64; 2]>,
}

impl ParameterPatch {
    /// Applies the patch. Parameters the law's mode does not use are
    /// rejected rather than silently stored.
    pub fn apply(&self, law: &mut ControlLaw) -> Result<()> {
        let mode = law.mode();
        let unsupported = |operation| FormationError::UnsupportedMode {
            mode: mode.name(),
            operation,
        };
        if (self.d.is_some() || self.k_d.is_some()) && !mode.closes_chain() {
            return Err(unsupported("closing-distance parameters"));
        }
        if self.motion.is_some() && mode != Mode::Steered {
            return Err(unsupported("motion parameters"));
        }
        if self.mismatches.is_some() && mode != Mode::Mismatched3 {
            return Err(unsupported("distance mismatches"));
        }
        if let Some(d) = self.d {
            law.set_closing_distance(d)?;
        }
        if let Some(c) = self.c {
            law.set_gain(c)?;
        }
        if let Some(k) = self.k_d {
            law.set_scale_gain(k)?;
        }
        if let Some(m) = &self.motion {
            law.set_motion(m.clone())?;
        }
        if let Some(m) = self.mismatches {
            law.set_mismatches(m)?;
        }
        if let Some(d) = self.distances {
            law.set_distances(d)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub patch: ParameterPatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    initial: Initial,
    law: ControlLaw,
    integrator: Integrator,
    events: Vec<Event>,
    record_every: usize,
}

impl Scenario {
    pub fn new(
        initial: Initial,
        law: ControlLaw,
        integrator: Integrator,
        events: Vec<Event>,
        record_every: usize,
    ) -> Result<Self> {
        let n = law.agents();
        match &initial {
            Initial::Positions(p) => {
                FormationError::check_len("initial positions", n, p.len())?;
                if p.iter().any(|q| !(q.x.is_finite() && q.y.is_finite())) {
                    return Err(FormationError::invalid("positions", "coordinates must be finite"));
                }
            }
            Initial::Random { bounds, .. } => {
                let [xmin, ymin, xmax, ymax] = *bounds;
                if !bounds.iter().all(|b| b.is_finite()) || xmin > xmax || ymin > ymax {
                    return Err(FormationError::invalid("box", "expected [xmin, ymin, xmax, ymax]"));
                }
            }
        }
        let Integrator { dt, t_end, .. } = integrator;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FormationError::invalid("dt", format!("{dt} must be positive")));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(FormationError::invalid("t_end", format!("{t_end} must be positive")));
        }
        if record_every == 0 {
            return Err(FormationError::invalid("stride", "must be at least 1"));
        }
        let mut probe = law.clone();
        let mut prev = f64::NEG_INFINITY;
        for e in &events {
            if !(e.t > prev && e.t >= 0.0 && e.t <= t_end) {
                return Err(FormationError::invalid(
                    "events",
                    format!("event time {} must be increasing and within [0, t_end]", e.t),
                ));
            }
            prev = e.t;
            e.patch.apply(&mut probe)?;
        }
        Ok(Scenario {
            initial,
            law,
            integrator,
            events,
            record_every,
        })
    }

    pub fn agents(&self) -> usize {
        self.law.agents()
    }

    pub fn law(&self) -> &ControlLaw {
        &self.law
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn record_every(&self) -> usize {
        self.record_every
    }

    pub fn initial(&self) -> &Initial {
        &self.initial
    }

    pub fn initial_positions(&self) -> Vec<Point> {
        match &self.initial {
            Initial::Positions(p) => p.clone(),
            Initial::Random { seed, bounds } => random_positions(self.agents(), *seed, *bounds),
        }
    }

    /// The law in force after every event has fired.
    pub fn final_law(&self) -> ControlLaw {
        let mut law = self.law.clone();
        for e in &self.events {
            // validated in `new`
            e.patch.apply(&mut law).expect("event patch validated at construction");
        }
        law
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Result<Self> {
        self.integrator = integrator;
        Scenario::new(self.initial, self.law, self.integrator, self.events, self.record_every)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Initial::Random { seed: s, .. } = &mut self.initial {
            *s = seed;
        }
        self
    }
}

/// Number of grid steps needed to reach `t_end`.
fn step_count(t_end: f64, dt: f64) -> usize {
    ((t_end / dt) - 1e-9).ceil().max(1.0) as usize
}

/// First grid index whose time is at or after `t`.
fn grid_index(t: f64, dt: f64) -> usize {
    ((t / dt) - 1e-9).ceil().max(0.0) as usize
}

/// Least-squares rigid motion `u_i ≈ v + ω S (p_i − centroid)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidFit {
    pub v: Point,
    pub omega: f64,
    /// Root-mean-square misfit speed.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collinearity {
    pub residual: f64,
    /// Set when all agents coincide and no line is defined.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricFrame {
    pub collinearity_residual: f64,
    pub spacing: Vec<f64>,
    /// Signed turn angle from `z_k` to `z_{k+1}`, `None` where an edge has
    /// zero length.
    pub angles: Vec<Option<f64>>,
    pub closing_distance: f64,
    pub centroid: Point,
    pub rigid_fit: Option<RigidFit>,
}

impl MetricFrame {
    pub fn measure(p: &[Point], u: Option<&[Point]>) -> Self {
        let z: Vec<Point> = p.windows(2).map(|w| w[0] - w[1]).collect();
        MetricFrame {
            collinearity_residual: collinearity_residual(p).residual,
            spacing: z.iter().map(|v| v.norm()).collect(),
            angles: z.windows(2).map(|w| realized_angle(&w[0], &w[1])).collect(),
            closing_distance: (p[p.len() - 1] - p[0]).norm(),
            centroid: centroid(p),
            rigid_fit: u.and_then(|u| fit_rigid_motion(p, u).ok()),
        }
    }
}

/// Record of an event as applied on the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedEvent {
    pub scheduled: f64,
    pub applied: f64,
    /// Chain edge lengths (plus the closing distance) just before the patch.
    pub sides_before: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<Point>>,
    pub e_theta_norm: Vec<f64>,
    pub e_d: Vec<Option<f64>>,
    pub metrics: Vec<MetricFrame>,
    /// Time at which the state stopped being finite.
    pub diverged: Option<f64>,
    pub closes_chain: bool,
    pub events: Vec<AppliedEvent>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn agents(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    pub fn final_positions(&self) -> &[Point] {
        self.positions.last().map_or(&[], Vec::as_slice)
    }

    /// Index of the last sample with time `≤ t`.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let idx = self.times.partition_point(|&s| s <= t + 1e-9);
        idx.checked_sub(1)
    }
}

/// Chain edge lengths followed by `‖p_n − p_1‖`.
pub fn side_lengths(p: &[Point]) -> Vec<f64> {
    let mut sides: Vec<f64> = p.windows(2).map(|w| (w[0] - w[1]).norm()).collect();
    sides.push((p[p.len() - 1] - p[0]).norm());
    sides
}

fn record(traj: &mut Trajectory, t: f64, p: &[Point], law: &ControlLaw) -> Result<()> {
    let norms = law.error_norms(p)?;
    let u = law.velocities(p).ok();
    traj.times.push(t);
    traj.positions.push(p.to_vec());
    traj.e_theta_norm.push(norms.shape);
    traj.e_d.push(norms.closing);
    traj.metrics.push(MetricFrame::measure(p, u.as_deref()));
    Ok(())
}

/// Integrates a scenario from `t = 0` to `t_end`.
///
/// Events fire at the first grid time `k·dt ≥ t_event`, before that step is
/// recorded or taken. Samples are kept every `record_every` steps plus the
/// final state. A non-finite state stops the run and sets
/// [`Trajectory::diverged`]; the trajectory up to the last finite state is
/// returned.
pub fn run(s: &Scenario) -> Result<Trajectory> {
    let Integrator { dt, t_end, method } = s.integrator;
    let mut law = s.law.clone();
    let mut p = s.initial_positions();
    let steps = step_count(t_end, dt);
    let event_steps: Vec<usize> = s.events.iter().map(|e| grid_index(e.t, dt)).collect();
    let mut next_event = 0;

    let mut traj = Trajectory {
        times: Vec::new(),
        positions: Vec::new(),
        e_theta_norm: Vec::new(),
        e_d: Vec::new(),
        metrics: Vec::new(),
        diverged: None,
        closes_chain: law.mode().closes_chain(),
        events: Vec::new(),
    };

    for k in 0..=steps {
        let t = k as f64 * dt;
        while next_event < s.events.len() && k >= event_steps[next_event] {
            let e = &s.events[next_event];
            traj.events.push(AppliedEvent {
                scheduled: e.t,
                applied: t,
                sides_before: side_lengths(&p),
            });
            e.patch.apply(&mut law)?;
            next_event += 1;
        }
        let recorded = k % s.record_every == 0 || k == steps;
        if recorded {
            record(&mut traj, t, &p, &law)?;
        }
        if k == steps {
            break;
        }
        match step(&law, &p, dt, method) {
            Ok(next) => p = next,
            Err(FormationError::Diverged { .. }) => {
                if !recorded {
                    record(&mut traj, t, &p, &law)?;
                }
                traj.diverged = Some(t + dt);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

/// Runs independent scenarios in parallel; output order matches input.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<Trajectory>> {
    scenarios.par_iter().map(run).collect()
}

pub fn centroid(p: &[Point]) -> Point {
    p.iter().sum::<Point>() / p.len() as f64
}

/// Largest orthogonal distance from any agent to the total-least-squares
/// line through the agents.
pub fn collinearity_residual(p: &[Point]) -> Collinearity {
    let c = centroid(p);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for q in p {
        let d = q - c;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    if sxx + syy == 0.0 {
        return Collinearity {
            residual: 0.0,
            degenerate: true,
        };
    }
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let normal = Point::new(-phi.sin(), phi.cos());
    let residual = p
        .iter()
        .map(|q| (q - c).dot(&normal).abs())
        .fold(0.0, f64::max);
    Collinearity {
        residual,
        degenerate: false,
    }
}

/// Signed angle from `a` to `b` in `(−π, π]`; `None` if either is zero.
pub fn realized_angle(a: &Point, b: &Point) -> Option<f64> {
    if a.norm_squared() == 0.0 || b.norm_squared() == 0.0 {
        return None;
    }
    let ang = a.perp(b).atan2(a.dot(b));
    Some(if ang == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        ang
    })
}

/// Turn angles of a relative-position chain.
pub fn realized_angles(z: &[Point]) -> Result<Vec<f64>> {
    z.windows(2)
        .enumerate()
        .map(|(k, w)| realized_angle(&w[0], &w[1]).ok_or(FormationError::UndefinedAngle(k)))
        .collect()
}

/// Closed-form least squares: `v = mean(u)`,
/// `ω = Σ (S q_i)·u_i / Σ ‖q_i‖²` with `q_i = p_i − centroid`.
pub fn fit_rigid_motion(p: &[Point], u: &[Point]) -> Result<RigidFit> {
    FormationError::check_len("velocities", p.len(), u.len())?;
    if p.len() < 2 {
        return Err(FormationError::Degenerate("rigid fit needs at least two agents"));
    }
    let c = centroid(p);
    let v = u.iter().sum::<Point>() / u.len() as f64;
    let q: Vec<Point> = p.iter().map(|x| x - c).collect();
    let spread: f64 = q.iter().map(|x| x.norm_squared()).sum();
    if spread == 0.0 {
        return Err(FormationError::Degenerate("agents coincide"));
    }
    let turn = |x: &Point| Point::new(-x.y, x.x);
    let omega = q.iter().zip(u).map(|(qi, ui)| turn(qi).dot(ui)).sum::<f64>() / spread;
    let sq: f64 = q
        .iter()
        .zip(u)
        .map(|(qi, ui)| (ui - v - turn(qi) * omega).norm_squared())
        .sum();
    Ok(RigidFit {
        v,
        omega,
        residual: (sq / p.len() as f64).sqrt(),
    })
}

/// First sample time from which the shape error (and closing error, where
/// recorded) stays at or below `tol` through the end. `None` for diverged
/// runs or if the final sample is above tolerance.
pub fn convergence_time(traj: &Trajectory, tol: f64) -> Option<f64> {
    if traj.diverged.is_some() || traj.is_empty() {
        return None;
    }
    let ok = |i: usize| traj.e_theta_norm[i] <= tol && traj.e_d[i].is_none_or(|e| e.abs() <= tol);
    let mut first = traj.len();
    while first > 0 && ok(first - 1) {
        first -= 1;
    }
    (first < traj.len()).then(|| traj.times[first])
}
