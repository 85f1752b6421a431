//! Daisy-chain graphs and the incidence-matrix algebra built on them.
//!
//! Edge `k` is oriented from tail `k` to head `k + 1`, so the sensed relative
//! position is `z_k = p_k − p_{k+1}` and the incidence matrix carries `+1` on
//! its diagonal and `−1` on its subdiagonal. Every other sign convention in
//! the crate follows from this choice.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::{FormationError, Point, Result};

/// An open chain of `n ≥ 3` agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    /// Chain `0 – 1 – … – n−1` with edge `k = (k, k + 1)`.
    pub fn daisy_chain(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(FormationError::TooFewAgents(n));
        }
        let edges = (0..n - 1).map(|k| (k, k + 1)).collect();
        Ok(Topology { n, edges })
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    /// `(tail, head)` pairs in edge order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of turn angles (and of rotational error components), `n − 2`.
    pub fn angle_count(&self) -> usize {
        self.n - 2
    }

    /// Neighbours of agent `i` in the chain.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2);
        if i > 0 && i < self.n {
            out.push(i - 1);
        }
        if i + 1 < self.n {
            out.push(i + 1);
        }
        out
    }

    /// Vertex-by-edge incidence matrix `B` (`n × (n−1)`).
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        IncidenceMatrix::from_edges(self.n, &self.edges)
    }

    /// Incidence matrix `B_θ` (`(n−1) × (n−2)`) pairing consecutive edges:
    /// column `k` relates `z_k` and `z_{k+1}`.
    pub fn angle_incidence_matrix(&self) -> IncidenceMatrix {
        let pairs: Vec<_> = (0..self.n - 2).map(|k| (k, k + 1)).collect();
        IncidenceMatrix::from_edges(self.n - 1, &pairs)
    }

    /// `z = (B ⊗ I₂)ᵀ p`, evaluated edge by edge.
    pub fn relative_positions(&self, p: &[Point]) -> Result<Vec<Point>> {
        FormationError::check_len("positions", self.n, p.len())?;
        Ok(self.edges.iter().map(|&(t, h)| p[t] - p[h]).collect())
    }
}

/// A dense incidence matrix: every column holds exactly one `+1` (tail) and
/// one `−1` (head).
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix(DMatrix<f64>);

impl IncidenceMatrix {
    fn from_edges(rows: usize, edges: &[(usize, usize)]) -> Self {
        let mut m = DMatrix::zeros(rows, edges.len());
        for (k, &(tail, head)) in edges.iter().enumerate() {
            m[(tail, k)] = 1.0;
            m[(head, k)] = -1.0;
        }
        IncidenceMatrix(m)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `M ⊗ I₂`.
    pub fn kron2(&self) -> DMatrix<f64> {
        kron2(&self.0)
    }
}

/// Expands an `r × c` matrix to `2r × 2c` by the Kronecker product with `I₂`,
/// so it acts on stacked planar vectors.
pub fn kron2(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.kronecker(&Matrix2::<f64>::identity())
}

/// Flattens points into `(x₀, y₀, x₁, y₁, …)`.
pub fn stack(points: &[Point]) -> DVector<f64> {
    DVector::from_iterator(
        points.len() * 2,
        points.iter().flat_map(|q| [q.x, q.y]),
    )
}

/// Inverse of [`stack`]. Panics on odd length.
pub fn unstack(v: &DVector<f64>) -> Vec<Point> {
    assert!(v.len().is_multiple_of(2), "stacked vector must have even length");
    v.as_slice()
        .chunks_exact(2)
        .map(|c| Point::new(c[0], c[1]))
        .collect()
}
