//! Rotations, desired shapes and the error signals the controllers drive to
//! zero.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::topology::Topology;
use crate::{FormationError, Point, Result};

/// Counterclockwise planar rotation `W(α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    angle: f64,
    matrix: Matrix2<f64>,
}

impl Rotation {
    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.matrix
    }

    pub fn transpose(&self) -> Matrix2<f64> {
        self.matrix.transpose()
    }

    pub fn apply(&self, v: &Point) -> Point {
        self.matrix * v
    }
}

/// `W(α) = [[cos α, −sin α], [sin α, cos α]]`.
pub fn rot(alpha: f64) -> Result<Rotation> {
    if !alpha.is_finite() {
        return Err(FormationError::invalid("angle", format!("{alpha} is not finite")));
    }
    let (s, c) = alpha.sin_cos();
    Ok(Rotation {
        angle: alpha,
        matrix: Matrix2::new(c, -s, s, c),
    })
}

fn half_turn(theta: f64) -> Matrix2<f64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// The desired polygon: one turn angle per interior agent, one length ratio
/// per edge and an optional closing distance between the chain ends.
///
/// Turn angles are measured counterclockwise from `z_k` to `z_{k+1}` and lie
/// in `(−π, π]`; the polygon's inner angle at that corner is `π − θ_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeSpec {
    theta: Vec<f64>,
    ratios: Vec<f64>,
    closing_distance: Option<f64>,
}

impl ShapeSpec {
    pub fn new(theta: Vec<f64>, ratios: Vec<f64>, closing_distance: Option<f64>) -> Result<Self> {
        let n = theta.len() + 2;
        FormationError::check_len("ratios", n - 1, ratios.len())?;
        for &t in &theta {
            if !(t.is_finite() && t > -PI && t <= PI) {
                return Err(FormationError::invalid("theta", format!("{t} is outside (-pi, pi]")));
            }
        }
        for &r in &ratios {
            if !(r.is_finite() && r > 0.0) {
                return Err(FormationError::invalid("ratios", format!("{r} is not positive")));
            }
        }
        if let Some(d) = closing_distance {
            validate_distance("d", d)?;
        }
        Ok(ShapeSpec {
            theta,
            ratios,
            closing_distance,
        })
    }

    /// Every turn angle equal to `theta`, unit ratios, open chain.
    pub fn uniform(n: usize, theta: f64) -> Result<Self> {
        if n < 3 {
            return Err(FormationError::TooFewAgents(n));
        }
        ShapeSpec::new(vec![theta; n - 2], vec![1.0; n - 1], None)
    }

    /// Straight, equally spaced chain.
    pub fn line(n: usize) -> Result<Self> {
        ShapeSpec::uniform(n, 0.0)
    }

    /// The regular `n`-gon traversed counterclockwise.
    pub fn regular(n: usize) -> Result<Self> {
        ShapeSpec::uniform(n, crate::stability::regular_polygon_angle(n))
    }

    pub fn with_ratios(self, ratios: Vec<f64>) -> Result<Self> {
        ShapeSpec::new(self.theta, ratios, self.closing_distance)
    }

    pub fn with_closing_distance(self, d: f64) -> Result<Self> {
        ShapeSpec::new(self.theta, self.ratios, Some(d))
    }

    pub fn agents(&self) -> usize {
        self.theta.len() + 2
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn closing_distance(&self) -> Option<f64> {
        self.closing_distance
    }

    pub fn has_unit_ratios(&self) -> bool {
        self.ratios.iter().all(|&r| r == 1.0)
    }

    /// The common turn angle when all angles are equal.
    pub fn uniform_angle(&self) -> Option<f64> {
        let first = *self.theta.first()?;
        self.theta.iter().all(|&t| t == first).then_some(first)
    }

    fn check_topology(&self, t: &Topology) -> Result<()> {
        FormationError::check_len("shape agents", t.agents(), self.agents())
    }
}

pub(crate) fn validate_distance(name: &'static str, d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(FormationError::invalid(name, format!("{d} is not positive")))
    }
}

/// Stacked rotational error plus the optional closing-distance error.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSignal {
    pub e_theta: Vec<Point>,
    pub e_d: Option<f64>,
}

impl ErrorSignal {
    /// Euclidean norm of the stacked `e_θ`.
    pub fn theta_norm(&self) -> f64 {
        self.e_theta.iter().map(|e| e.norm_squared()).sum::<f64>().sqrt()
    }
}

fn check_z(z: &[Point], t: &Topology) -> Result<()> {
    FormationError::check_len("relative positions", t.edge_count(), z.len())
}

/// `e_k = z_k − z_{k+1}`: zero exactly on equally spaced collinear chains.
pub fn line_error(z: &[Point], t: &Topology) -> Result<ErrorSignal> {
    check_z(z, t)?;
    Ok(ErrorSignal {
        e_theta: z.windows(2).map(|w| w[0] - w[1]).collect(),
        e_d: None,
    })
}

/// `e_k = r_k z_k − r_{k+1} z_{k+1}`.
pub fn scaled_error(z: &[Point], t: &Topology, ratios: &[f64]) -> Result<ErrorSignal> {
    check_z(z, t)?;
    FormationError::check_len("ratios", t.edge_count(), ratios.len())?;
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(FormationError::invalid("ratios", format!("{r} is not positive")));
    }
    Ok(ErrorSignal {
        e_theta: z
            .windows(2)
            .zip(ratios.windows(2))
            .map(|(w, r)| w[0] * r[0] - w[1] * r[1])
            .collect(),
        e_d: None,
    })
}

/// `e_k = W(θ_k/2)·r_k z_k − W(θ_k/2)ᵀ·r_{k+1} z_{k+1}`.
///
/// Zero for every `k` exactly when `r_{k+1} z_{k+1} = W(θ_k) r_k z_k`, i.e.
/// each edge is the previous one turned by `θ_k` and rescaled.
pub fn polygon_error(z: &[Point], t: &Topology, spec: &ShapeSpec) -> Result<ErrorSignal> {
    check_z(z, t)?;
    spec.check_topology(t)?;
    let r = &spec.ratios;
    let e_theta = spec
        .theta
        .iter()
        .enumerate()
        .map(|(k, &th)| {
            let w = half_turn(th);
            w * (z[k] * r[k]) - w.transpose() * (z[k + 1] * r[k + 1])
        })
        .collect();
    Ok(ErrorSignal {
        e_theta,
        e_d: None,
    })
}

/// Block matrix `B_W`, `2(n−1) × 2(n−2)`, with `e_θ = B_Wᵀ z` for unit
/// ratios.
///
/// Block `(k, k)` holds `W(θ_k/2)ᵀ` and block `(k+1, k)` holds `−W(θ_k/2)`,
/// so that row `k` of `B_Wᵀ` is `[… W(θ_k/2)  −W(θ_k/2)ᵀ …]` and reproduces
/// [`polygon_error`] exactly.
pub fn build_bw(spec: &ShapeSpec) -> DMatrix<f64> {
    let m = spec.theta.len();
    let mut bw = DMatrix::zeros(2 * (m + 1), 2 * m);
    for (k, &th) in spec.theta.iter().enumerate() {
        let w = half_turn(th);
        bw.fixed_view_mut::<2, 2>(2 * k, 2 * k)
            .copy_from(&w.transpose());
        bw.fixed_view_mut::<2, 2>(2 * k + 2, 2 * k).copy_from(&(-w));
    }
    bw
}

/// `(‖p_n − p_1‖ − d, ‖p_n − p_1‖² − d²)`: the reported and the controlled
/// closing-distance errors.
pub fn closing_distance_error(p: &[Point], d: f64) -> Result<(f64, f64)> {
    validate_distance("d", d)?;
    if p.len() < 2 {
        return Err(FormationError::Dimension {
            what: "positions",
            expected: 2,
            got: p.len(),
        });
    }
    let span = p[p.len() - 1] - p[0];
    Ok((span.norm() - d, span.norm_squared() - d * d))
}
