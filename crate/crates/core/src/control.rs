//! Velocity fields `u = f(p)` for every controller in the family.
//!
//! All laws are pure: each agent's velocity is assembled from its own terms,
//! so results never depend on evaluation order.
//!
//! Two conventions deviate from the usual printed form of these laws and are
//! deliberate:
//!
//! * the closing-edge (scale) term descends the potential
//!   `¼(‖p_n − p_1‖² − d²)²`: `ṗ_1 = +k_d (p_n − p_1) e_q`, `ṗ_n = −k_d (p_n − p_1) e_q`;
//! * interior agent `i` of the steering law uses `e_{θ,i−1}`, the same pairing
//!   as the plain deployment law.

use serde::{Deserialize, Serialize};

use crate::geometry::{line_error, polygon_error, scaled_error, validate_distance, ErrorSignal, ShapeSpec};
use crate::topology::Topology;
use crate::{FormationError, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Distance gradient descent for three agents.
    Gradient3,
    /// Three-agent gradient law with distance mismatches at the middle agent.
    Mismatched3,
    /// Equally spaced (or ratio-spaced) deployment on a segment.
    Line,
    /// Rotational error with fixed chain ends.
    Polygon,
    /// Rotational error plus distance control between the chain ends.
    ClosedPolygon,
    /// Closed polygon plus motion parameters for rigid-body steering.
    Steered,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Gradient3 => "gradient3",
            Mode::Mismatched3 => "mismatched3",
            Mode::Line => "line",
            Mode::Polygon => "polygon",
            Mode::ClosedPolygon => "closed_polygon",
            Mode::Steered => "steered",
        }
    }

    pub fn is_three_agent(self) -> bool {
        matches!(self, Mode::Gradient3 | Mode::Mismatched3)
    }

    /// Whether the chain ends run the scale controller.
    pub fn closes_chain(self) -> bool {
        matches!(self, Mode::ClosedPolygon | Mode::Steered)
    }
}

/// Per-agent coefficients `(μ_{i,1}, μ_{i,2})` on the two relative vectors
/// agent `i` can sense: `(p_n − p_1, z_1)` for the first agent,
/// `(z_{i−1}, z_i)` for interior agents and `(p_n − p_1, z_{n−1})` for the
/// last one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotionParams(Vec<[f64; 2]>);

impl MotionParams {
    pub fn new(pairs: Vec<[f64; 2]>) -> Result<Self> {
        if pairs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FormationError::invalid("motion_params", "values must be finite"));
        }
        Ok(MotionParams(pairs))
    }

    pub fn uniform(n: usize, mu: f64) -> Result<Self> {
        MotionParams::new(vec![[mu, mu]; n])
    }

    pub fn pairs(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|&v| v == 0.0)
    }
}

/// Position anchoring for the chain ends: `ṗ_i += gain (target_i − p_i)`.
/// Fixes the steady-state orientation of the shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchors {
    pub gain: f64,
    pub first: Point,
    pub last: Point,
}

/// Output of [`scale_law`]. `degenerate` is set when the chain ends coincide
/// while the distance error is nonzero: the gradient vanishes there and the
/// law cannot separate them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleVelocities {
    pub velocities: Vec<Point>,
    pub degenerate: bool,
}

/// Scalar summaries of the tracking error used for recording and
/// convergence checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `‖e_θ‖` for chain modes; the norm of the squared-distance errors
    /// `(e_1, e_2)` for the three-agent gradient modes.
    pub shape: f64,
    /// `‖p_n − p_1‖ − d` when the chain is closed.
    pub closing: Option<f64>,
}

fn three_agents(p: &[Point]) -> Result<()> {
    FormationError::check_len("agents", 3, p.len())
}

fn distance_terms_3(p: &[Point], d1: f64, d2: f64) -> Result<(Point, Point)> {
    three_agents(p)?;
    validate_distance("distances", d1)?;
    validate_distance("distances", d2)?;
    let z1 = p[0] - p[1];
    let z2 = p[1] - p[2];
    let e1 = z1.norm_squared() - d1 * d1;
    let e2 = z2.norm_squared() - d2 * d2;
    Ok((z1 * e1, z2 * e2))
}

/// Gradient descent of `¼ Σ (‖z_k‖² − d_k²)²` for a three-agent chain.
pub fn gradient_law_3(p: &[Point], d1: f64, d2: f64) -> Result<Vec<Point>> {
    let (g1, g2) = distance_terms_3(p, d1, d2)?;
    Ok(vec![-g1, g1 - g2, g2])
}

/// [`gradient_law_3`] with the mismatch term `μ₁ z₁ − μ₂ z₂` added at the
/// middle agent.
pub fn mismatched_law_3(p: &[Point], d1: f64, d2: f64, mu1: f64, mu2: f64) -> Result<Vec<Point>> {
    let (g1, g2) = distance_terms_3(p, d1, d2)?;
    let z1 = p[0] - p[1];
    let z2 = p[1] - p[2];
    Ok(vec![-g1, g1 - g2 + (z1 * mu1 - z2 * mu2), g2])
}

/// The mismatch term alone: ends fixed, middle agent moves with
/// `μ₁ z₁ − μ₂ z₂`. With `μ₁ = μ₂ = c` this is the line deployment law.
pub fn mismatch_only_law_3(p: &[Point], mu1: f64, mu2: f64) -> Result<Vec<Point>> {
    three_agents(p)?;
    let z1 = p[0] - p[1];
    let z2 = p[1] - p[2];
    Ok(vec![Point::zeros(), z1 * mu1 - z2 * mu2, Point::zeros()])
}

/// Distance control between the chain ends, zero on interior agents.
///
/// With `pin_last` only the first agent moves.
pub fn scale_law(p: &[Point], d: f64, k_d: f64, pin_last: bool) -> Result<ScaleVelocities> {
    validate_distance("d", d)?;
    check_gain("k_d", k_d)?;
    if p.len() < 2 {
        return Err(FormationError::Dimension {
            what: "positions",
            expected: 2,
            got: p.len(),
        });
    }
    let last = p.len() - 1;
    let span = p[last] - p[0];
    let e_q = span.norm_squared() - d * d;
    let push = span * (k_d * e_q);
    let mut velocities = vec![Point::zeros(); p.len()];
    velocities[0] = push;
    if !pin_last {
        velocities[last] = -push;
    }
    Ok(ScaleVelocities {
        velocities,
        degenerate: span.norm_squared() == 0.0 && e_q != 0.0,
    })
}

fn check_gain(name: &'static str, g: f64) -> Result<()> {
    if g.is_finite() && g > 0.0 {
        Ok(())
    } else {
        Err(FormationError::invalid(name, format!("gain {g} must be positive")))
    }
}

/// A fully parameterised controller for `n` agents.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw {
    mode: Mode,
    c: f64,
    k_d: f64,
    spec: ShapeSpec,
    distances: Option<[f64; 2]>,
    mismatches: [f64; 2],
    motion: Option<MotionParams>,
    pin_last: bool,
    anchors: Option<Anchors>,
    topology: Topology,
}

impl ControlLaw {
    fn with_mode(mode: Mode, spec: ShapeSpec) -> Result<Self> {
        let topology = Topology::daisy_chain(spec.agents())?;
        Ok(ControlLaw {
            mode,
            c: 1.0,
            k_d: 1.0,
            spec,
            distances: None,
            mismatches: [0.0, 0.0],
            motion: None,
            pin_last: false,
            anchors: None,
            topology,
        })
    }

    pub fn gradient3(d1: f64, d2: f64) -> Result<Self> {
        validate_distance("distances", d1)?;
        validate_distance("distances", d2)?;
        let mut law = ControlLaw::with_mode(Mode::Gradient3, ShapeSpec::line(3)?)?;
        law.distances = Some([d1, d2]);
        Ok(law)
    }

    pub fn mismatched3(d1: f64, d2: f64, mu1: f64, mu2: f64) -> Result<Self> {
        let mut law = ControlLaw::gradient3(d1, d2)?;
        law.mode = Mode::Mismatched3;
        law.set_mismatches([mu1, mu2])?;
        Ok(law)
    }

    /// Line deployment; non-unit `spec` ratios select the ratio-spaced
    /// variant. Turn angles in `spec` must be zero.
    pub fn line(spec: ShapeSpec) -> Result<Self> {
        if spec.theta().iter().any(|&t| t != 0.0) {
            return Err(FormationError::invalid("theta", "line mode requires zero turn angles"));
        }
        ControlLaw::with_mode(Mode::Line, spec)
    }

    pub fn polygon(spec: ShapeSpec) -> Result<Self> {
        ControlLaw::with_mode(Mode::Polygon, spec)
    }

    /// Requires `spec` to carry a closing distance.
    pub fn closed_polygon(spec: ShapeSpec) -> Result<Self> {
        if spec.closing_distance().is_none() {
            return Err(FormationError::invalid("d", "closed chain requires a closing distance"));
        }
        ControlLaw::with_mode(Mode::ClosedPolygon, spec)
    }

    pub fn steered(spec: ShapeSpec, motion: MotionParams) -> Result<Self> {
        let mut law = ControlLaw::closed_polygon(spec)?;
        law.mode = Mode::Steered;
        law.set_motion(motion)?;
        Ok(law)
    }

    pub fn with_gain(mut self, c: f64) -> Result<Self> {
        self.set_gain(c)?;
        Ok(self)
    }

    pub fn with_scale_gain(mut self, k_d: f64) -> Result<Self> {
        self.set_scale_gain(k_d)?;
        Ok(self)
    }

    pub fn with_pin_last(mut self, pin_last: bool) -> Self {
        self.pin_last = pin_last;
        self
    }

    pub fn with_anchors(mut self, anchors: Anchors) -> Result<Self> {
        check_gain("anchor gain", anchors.gain)?;
        self.anchors = Some(anchors);
        Ok(self)
    }

    pub fn set_gain(&mut self, c: f64) -> Result<()> {
        check_gain("c", c)?;
        self.c = c;
        Ok(())
    }

    pub fn set_scale_gain(&mut self, k_d: f64) -> Result<()> {
        check_gain("k_d", k_d)?;
        self.k_d = k_d;
        Ok(())
    }

    pub fn set_closing_distance(&mut self, d: f64) -> Result<()> {
        self.spec = self.spec.clone().with_closing_distance(d)?;
        Ok(())
    }

    pub fn set_motion(&mut self, motion: MotionParams) -> Result<()> {
        FormationError::check_len("motion parameter pairs", self.agents(), motion.pairs().len())?;
        self.motion = Some(motion);
        Ok(())
    }

    pub fn set_mismatches(&mut self, mismatches: [f64; 2]) -> Result<()> {
        if mismatches.iter().any(|m| !m.is_finite()) {
            return Err(FormationError::invalid("mismatches", "values must be finite"));
        }
        self.mismatches = mismatches;
        Ok(())
    }

    pub fn set_distances(&mut self, distances: [f64; 2]) -> Result<()> {
        if !self.mode.is_three_agent() {
            return Err(FormationError::UnsupportedMode {
                mode: self.mode.name(),
                operation: "edge distances",
            });
        }
        validate_distance("distances", distances[0])?;
        validate_distance("distances", distances[1])?;
        self.distances = Some(distances);
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn gain(&self) -> f64 {
        self.c
    }

    pub fn scale_gain(&self) -> f64 {
        self.k_d
    }

    pub fn spec(&self) -> &ShapeSpec {
        &self.spec
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn agents(&self) -> usize {
        self.spec.agents()
    }

    pub fn motion(&self) -> Option<&MotionParams> {
        self.motion.as_ref()
    }

    pub fn mismatches(&self) -> [f64; 2] {
        self.mismatches
    }

    pub fn distances(&self) -> Option<[f64; 2]> {
        self.distances
    }

    pub fn pin_last(&self) -> bool {
        self.pin_last
    }

    /// The rotational (or line / ratio) error this law drives to zero.
    pub fn shape_error(&self, p: &[Point]) -> Result<ErrorSignal> {
        let t = &self.topology;
        let z = t.relative_positions(p)?;
        let mut e = match self.mode {
            Mode::Gradient3 | Mode::Mismatched3 => {
                return Err(FormationError::UnsupportedMode {
                    mode: self.mode.name(),
                    operation: "shape error",
                })
            }
            Mode::Line if self.spec.has_unit_ratios() => line_error(&z, t)?,
            Mode::Line => scaled_error(&z, t, self.spec.ratios())?,
            Mode::Polygon | Mode::ClosedPolygon | Mode::Steered => polygon_error(&z, t, &self.spec)?,
        };
        if self.mode.closes_chain() {
            if let Some(d) = self.spec.closing_distance() {
                e.e_d = Some((p[p.len() - 1] - p[0]).norm() - d);
            }
        }
        Ok(e)
    }

    pub fn error_norms(&self, p: &[Point]) -> Result<ErrorNorms> {
        if self.mode.is_three_agent() {
            three_agents(p)?;
            let [d1, d2] = self.three_agent_distances()?;
            let e1 = (p[0] - p[1]).norm_squared() - d1 * d1;
            let e2 = (p[1] - p[2]).norm_squared() - d2 * d2;
            return Ok(ErrorNorms {
                shape: e1.hypot(e2),
                closing: None,
            });
        }
        let e = self.shape_error(p)?;
        Ok(ErrorNorms {
            shape: e.theta_norm(),
            closing: e.e_d,
        })
    }

    fn three_agent_distances(&self) -> Result<[f64; 2]> {
        self.distances
            .ok_or_else(|| FormationError::invalid("distances", "three-agent laws need edge distances"))
    }

    /// Velocities of the full law for the configured mode.
    pub fn velocities(&self, p: &[Point]) -> Result<Vec<Point>> {
        FormationError::check_len("positions", self.agents(), p.len())?;
        let mut u = match self.mode {
            Mode::Gradient3 => {
                let [d1, d2] = self.three_agent_distances()?;
                gradient_law_3(p, d1, d2)?
            }
            Mode::Mismatched3 => {
                let [d1, d2] = self.three_agent_distances()?;
                let [mu1, mu2] = self.mismatches;
                mismatched_law_3(p, d1, d2, mu1, mu2)?
            }
            Mode::Line | Mode::Polygon => deployment_law(p, self)?,
            Mode::ClosedPolygon => {
                let deploy = deployment_law(p, self)?;
                let scale = self.scale_term(p)?;
                deploy.iter().zip(&scale.velocities).map(|(a, b)| a + b).collect()
            }
            Mode::Steered => steering_law(p, self)?,
        };
        if let Some(a) = self.anchors {
            let last = u.len() - 1;
            u[0] += (a.first - p[0]) * a.gain;
            u[last] += (a.last - p[last]) * a.gain;
        }
        Ok(u)
    }

    fn scale_term(&self, p: &[Point]) -> Result<ScaleVelocities> {
        let d = self
            .spec
            .closing_distance()
            .ok_or_else(|| FormationError::invalid("d", "closed chain requires a closing distance"))?;
        scale_law(p, d, self.k_d, self.pin_last)
    }
}

/// Ends fixed; interior agent `i` moves with `c · e_{θ,i−1}`.
///
/// Accepts every chain mode (for closed and steered laws this is their
/// deployment component alone).
pub fn deployment_law(p: &[Point], law: &ControlLaw) -> Result<Vec<Point>> {
    if law.mode.is_three_agent() {
        return Err(FormationError::UnsupportedMode {
            mode: law.mode.name(),
            operation: "deployment",
        });
    }
    let e = law.shape_error(p)?;
    let mut u = Vec::with_capacity(p.len());
    u.push(Point::zeros());
    u.extend(e.e_theta.iter().map(|e| e * law.c));
    u.push(Point::zeros());
    Ok(u)
}

/// Deployment, scale control and motion terms combined.
pub fn steering_law(p: &[Point], law: &ControlLaw) -> Result<Vec<Point>> {
    let motion = law
        .motion
        .as_ref()
        .ok_or_else(|| FormationError::invalid("motion_params", "steering requires motion parameters"))?;
    FormationError::check_len("positions", law.agents(), p.len())?;
    let mu = motion.pairs();
    let n = p.len();
    let e = law.shape_error(p)?;
    let scale = law.scale_term(p)?;
    let z = law.topology.relative_positions(p)?;
    let span = p[n - 1] - p[0];

    let mut u = Vec::with_capacity(n);
    u.push(scale.velocities[0] + span * mu[0][0] + z[0] * mu[0][1]);
    for i in 1..n - 1 {
        u.push(e.e_theta[i - 1] * law.c + z[i - 1] * mu[i][0] + z[i] * mu[i][1]);
    }
    u.push(scale.velocities[n - 1] + span * mu[n - 1][0] + z[n - 2] * mu[n - 1][1]);
    Ok(u)
}
