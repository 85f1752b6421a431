//! Spectral analysis of the rotational error dynamics `ė_θ = −c A(θ) e_θ`.
//!
//! `A(θ)` is always formed as the product `B_Wᵀ · D̄_r · B̄_θ` of the matrices
//! the controller actually uses, never transcribed block by block. For a
//! common turn angle `θ*` and unit ratios it is unitarily similar to
//! `diag(C, C†)` where `C` is Hermitian, tridiagonal and Toeplitz with
//! diagonal `2cos(θ*/2)` and off-diagonals `−e^{±jθ*/2}`, so
//!
//! ```text
//! λ_k = 2cos(θ*/2) + 2cos(kπ/(n−1)),   k = 1..n−2,
//! ```
//!
//! each with multiplicity two. The smallest is positive iff
//! `|θ*| < 2π/(n−1)`; at equality it vanishes and the verdict is marginal.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::geometry::{build_bw, ShapeSpec};
use crate::topology::Topology;
use crate::{FormationError, Result};

/// Real parts within this distance of zero are classified as marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// Largest matrix handed to the dense eigensolver.
pub const MAX_EIG_DIMENSION: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl Verdict {
    pub fn from_min_real(min_real: f64) -> Self {
        if min_real > MARGINAL_TOLERANCE {
            Verdict::Stable
        } else if min_real >= -MARGINAL_TOLERANCE {
            Verdict::Marginal
        } else {
            Verdict::Unstable
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub n: usize,
    pub theta: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Eigenvalues of `A(θ)` as `[re, im]`, sorted by real then imaginary part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub min_real: f64,
    pub bound: f64,
    pub verdict: Verdict,
    /// `λ_k` in descending order, present for a common angle and unit ratios.
    pub closed_form: Option<Vec<f64>>,
}

/// `A = B_Wᵀ · D̄_r · B̄_θ`, `2(n−2)` square.
pub fn assemble_a(spec: &ShapeSpec) -> Result<DMatrix<f64>> {
    let t = Topology::daisy_chain(spec.agents())?;
    let bw = build_bw(spec);
    let bt = t.angle_incidence_matrix().kron2();
    let dr = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        2 * spec.ratios().len(),
        spec.ratios().iter().flat_map(|&r| [r, r]),
    ));
    Ok(bw.transpose() * dr * bt)
}

/// The `(n−2) × (n−2)` Hermitian tridiagonal Toeplitz matrix `C(θ*)`.
pub fn assemble_c(theta_star: f64, n: usize) -> Result<DMatrix<Complex<f64>>> {
    if n < 3 {
        return Err(FormationError::TooFewAgents(n));
    }
    let m = n - 2;
    let w = Complex::from_polar(1.0, theta_star / 2.0);
    let diag = Complex::new(2.0 * (theta_star / 2.0).cos(), 0.0);
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            diag
        } else if j == i + 1 {
            -w
        } else if i == j + 1 {
            -w.conj()
        } else {
            Complex::new(0.0, 0.0)
        }
    }))
}

/// `λ_k = 2cos(θ*/2) + 2cos(kπ/(n−1))` for `k = 1..n−2`, descending.
pub fn closed_form_eigs(theta_star: f64, n: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(FormationError::TooFewAgents(n));
    }
    let base = 2.0 * (theta_star / 2.0).cos();
    Ok((1..=n - 2)
        .map(|k| base + 2.0 * (k as f64 * PI / (n - 1) as f64).cos())
        .collect())
}

/// All eigenvalues of a real square matrix: a symmetric eigensolver when the
/// matrix is symmetric, the real Schur form otherwise.
pub fn numerical_eigs(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if !m.is_square() {
        return Err(FormationError::Eigen(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() > MAX_EIG_DIMENSION {
        return Err(FormationError::Eigen(format!(
            "dimension {} exceeds {MAX_EIG_DIMENSION}",
            m.nrows()
        )));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() <= 1e-14 * scale {
        let sym = nalgebra::linalg::SymmetricEigen::new((m + m.transpose()) * 0.5);
        return Ok(sym.eigenvalues.iter().map(|&x| Complex::new(x, 0.0)).collect());
    }
    if let Some(schur) = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    // Shifted QR can stall on clustered spectra; an orthogonal similarity
    // leaves the eigenvalues alone but breaks the symmetry that traps it.
    let q = householder(m.nrows());
    let rotated = &q * m * q.transpose();
    let schur = nalgebra::linalg::Schur::try_new(rotated, f64::EPSILON, 10_000)
        .ok_or_else(|| FormationError::Eigen("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

fn householder(n: usize) -> DMatrix<f64> {
    let v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt());
    let v = &v / v.norm();
    DMatrix::identity(n, n) - 2.0 * &v * v.transpose()
}

/// `2π/(n−1)`: the largest common turn angle with a positive spectrum.
pub fn stability_bound(n: usize) -> f64 {
    2.0 * PI / (n as f64 - 1.0)
}

/// Turn angle of the regular `n`-gon, `π − π(n−2)/n = 2π/n`.
pub fn regular_polygon_angle(n: usize) -> f64 {
    2.0 * PI / n as f64
}

/// Numerical spectrum of `A(θ)` with verdict; closed form attached when the
/// angles are uniform and the ratios unit.
pub fn classify(spec: &ShapeSpec) -> Result<StabilityReport> {
    let n = spec.agents();
    let a = assemble_a(spec)?;
    let mut eigs = numerical_eigs(&a)?;
    eigs.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let min_real = eigs.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let closed_form = match spec.uniform_angle() {
        Some(theta) if spec.has_unit_ratios() => Some(closed_form_eigs(theta, n)?),
        _ => None,
    };
    Ok(StabilityReport {
        n,
        theta: spec.theta().to_vec(),
        ratios: spec.ratios().to_vec(),
        eigenvalues: eigs.iter().map(|z| [z.re, z.im]).collect(),
        min_real,
        bound: stability_bound(n),
        verdict: Verdict::from_min_real(min_real),
        closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::kron2;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    #[test]
    fn a_reduces_to_path_gram_on_a_line() {
        for n in 3..=10 {
            let a = assemble_a(&ShapeSpec::line(n).unwrap()).unwrap();
            let bt = Topology::daisy_chain(n).unwrap().angle_incidence_matrix().into_matrix();
            assert_eq!(a, kron2(&(bt.transpose() * &bt)));
            assert_eq!(a, a.transpose());
        }
    }

    #[test]
    fn a_for_three_agents_is_scaled_identity() {
        for &theta in &[-3.0, -1.2, 0.0, 0.4, 2.5, PI] {
            let a = assemble_a(&ShapeSpec::uniform(3, theta).unwrap()).unwrap();
            let expected = DMatrix::<f64>::identity(2, 2) * (2.0 * (theta / 2.0).cos());
            assert_relative_eq!(a, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn heterogeneous_a_uses_the_product_form() {
        // block (k, k+1) is −W(θ_k/2)ᵀ and block (k+1, k) is −W(θ_{k+1}/2)
        let spec = ShapeSpec::new(vec![0.2, 0.9, -0.4], vec![1.0; 4], None).unwrap();
        let a = assemble_a(&spec).unwrap();
        let w = |t: f64| *crate::geometry::rot(t / 2.0).unwrap().matrix();
        assert_relative_eq!(
            a.fixed_view::<2, 2>(0, 2).into_owned(),
            -w(0.2).transpose(),
            epsilon = 1e-15
        );
        assert_relative_eq!(a.fixed_view::<2, 2>(2, 0).into_owned(), -w(0.9), epsilon = 1e-15);
        assert_relative_eq!(
            a.fixed_view::<2, 2>(2, 2).into_owned(),
            w(0.9) + w(0.9).transpose(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn c_examples() {
        let c3 = assemble_c(1.1, 3).unwrap();
        assert_eq!(c3.shape(), (1, 1));
        assert_relative_eq!(c3[(0, 0)].re, 2.0 * 0.55f64.cos());

        let c = assemble_c(0.0, 4).unwrap();
        assert_eq!(c.map(|z| z.re), nalgebra::dmatrix![2.0, -1.0; -1.0, 2.0]);
        assert!(c.iter().all(|z| z.im == 0.0));

        let c6 = assemble_c(FRAC_PI_3, 6).unwrap();
        for i in 0..4 {
            assert_relative_eq!(c6[(i, i)].re, 3f64.sqrt(), epsilon = 1e-15);
        }
        assert_eq!(c6.adjoint(), c6);
    }

    #[test]
    fn c_spectrum_matches_closed_form() {
        for n in 3..=9 {
            for &theta in &[-2.0, -0.3, 0.0, 0.8, FRAC_PI_2, 2.9] {
                let c = assemble_c(theta, n).unwrap();
                let mut eig: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
                eig.sort_by(|a, b| b.total_cmp(a));
                let cf = closed_form_eigs(theta, n).unwrap();
                for (x, y) in eig.iter().zip(&cf) {
                    assert_relative_eq!(x, y, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let l = closed_form_eigs(FRAC_PI_3, 6).unwrap();
        assert_eq!(l.len(), 4);
        assert_relative_eq!(l[3], 3f64.sqrt() - 2.0 * (PI / 5.0).cos(), epsilon = 1e-15);
        assert_relative_eq!(l[3], 0.11401, epsilon = 1e-5);
        assert!(l.windows(2).all(|w| w[0] >= w[1]));

        for n in 3..=12 {
            let at_bound = closed_form_eigs(stability_bound(n), n).unwrap();
            assert!(at_bound[n - 3].abs() < 1e-14, "n = {n}");
        }
        for &theta in &[-3.1, -1.0, 0.0, 2.0, 3.1] {
            let l = closed_form_eigs(theta, 3).unwrap();
            assert_eq!(l.len(), 1);
            assert!(l[0] > 0.0);
        }
    }

    #[test]
    fn numerical_eig_examples() {
        let e = numerical_eigs(&DMatrix::identity(2, 2)).unwrap();
        assert!(e.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() < 1e-15));

        let mut e = numerical_eigs(&nalgebra::dmatrix![0.0, -1.0; 1.0, 0.0]).unwrap();
        e.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert_relative_eq!(e[0].im, -1.0, epsilon = 1e-15);
        assert_relative_eq!(e[1].im, 1.0, epsilon = 1e-15);
        assert!(e.iter().all(|z| z.re.abs() < 1e-15));

        assert!(numerical_eigs(&DMatrix::zeros(2, 3)).is_err());
        assert!(numerical_eigs(&DMatrix::zeros(300, 300)).is_err());
    }

    #[test]
    fn hexagon_spectrum_doubles_closed_form() {
        let a = assemble_a(&ShapeSpec::uniform(6, FRAC_PI_3).unwrap()).unwrap();
        let mut num: Vec<f64> = numerical_eigs(&a).unwrap().iter().map(|z| z.re).collect();
        num.sort_by(|a, b| b.total_cmp(a));
        let cf = closed_form_eigs(FRAC_PI_3, 6).unwrap();
        for (i, l) in cf.iter().enumerate() {
            assert_relative_eq!(num[2 * i], l, epsilon = 1e-12);
            assert_relative_eq!(num[2 * i + 1], l, epsilon = 1e-12);
        }
    }

    #[test]
    fn clustered_spectrum_that_stalls_plain_schur() {
        let theta = -24.0 * std::f64::consts::PI / 51.0;
        let a = assemble_a(&ShapeSpec::uniform(5, theta).unwrap()).unwrap();
        let mut num: Vec<f64> = numerical_eigs(&a).unwrap().iter().map(|z| z.re).collect();
        num.sort_by(|a, b| b.total_cmp(a));
        let cf = closed_form_eigs(theta, 5).unwrap();
        for (i, l) in cf.iter().enumerate() {
            assert_relative_eq!(num[2 * i], l, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotated_fallback_preserves_the_spectrum() {
        let m = nalgebra::dmatrix![2.0, 1.0, 0.0; -3.0, 0.5, 4.0; 0.0, 1.0, -1.0];
        let q = householder(3);
        assert_relative_eq!(&q * q.transpose(), DMatrix::identity(3, 3), epsilon = 1e-15);
        let key = |e: Vec<Complex<f64>>| {
            let mut e: Vec<_> = e.iter().map(|z| (z.re, z.im)).collect();
            e.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            e
        };
        let direct = key(numerical_eigs(&m).unwrap());
        let rotated = key(numerical_eigs(&(&q * &m * q.transpose())).unwrap());
        for (a, b) in direct.iter().zip(&rotated) {
            assert_relative_eq!(a.0, b.0, epsilon = 1e-12);
            assert_relative_eq!(a.1, b.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn bounds_and_regular_angles() {
        assert_relative_eq!(stability_bound(6), 2.0 * PI / 5.0);
        assert_relative_eq!(stability_bound(3), PI);
        assert!((3..50).all(|n| stability_bound(n + 1) < stability_bound(n)));
        assert!(stability_bound(10_000) < 1e-3);

        assert_relative_eq!(regular_polygon_angle(6), FRAC_PI_3, epsilon = 1e-15);
        assert_relative_eq!(regular_polygon_angle(4), FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(regular_polygon_angle(3), 2.0 * PI / 3.0, epsilon = 1e-15);
        for n in 3..100 {
            let inner = PI - PI * (n as f64 - 2.0) / n as f64;
            assert_relative_eq!(regular_polygon_angle(n), inner, epsilon = 1e-14);
            assert!(regular_polygon_angle(n) < stability_bound(n));
        }
    }

    #[test]
    fn classify_examples() {
        let r = classify(&ShapeSpec::uniform(6, FRAC_PI_3).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Stable);
        assert_eq!(r.eigenvalues.len(), 8);
        assert_relative_eq!(r.min_real, 0.11401, epsilon = 1e-5);
        assert!(r.closed_form.is_some());

        let r = classify(&ShapeSpec::uniform(6, 1.05 * stability_bound(6)).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        assert!(r.min_real < 0.0);

        let r = classify(&ShapeSpec::uniform(6, stability_bound(6)).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Marginal);

        let r = classify(&ShapeSpec::uniform(3, 3.0).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Stable);

        let hetero = ShapeSpec::new(vec![0.1, 0.5, -0.3], vec![1.0; 4], None).unwrap();
        assert!(classify(&hetero).unwrap().closed_form.is_none());
    }

    #[test]
    fn ratios_on_a_line_are_always_stable() {
        let ratios_sets = [
            vec![1.0, 2.0, 1.0, 2.0],
            vec![0.1, 5.0, 0.3, 9.0],
            vec![3.0, 3.0, 0.5, 0.25],
        ];
        for ratios in ratios_sets {
            let spec = ShapeSpec::line(5).unwrap().with_ratios(ratios).unwrap();
            let r = classify(&spec).unwrap();
            assert_eq!(r.verdict, Verdict::Stable);
            assert!(r.closed_form.is_none());
        }
    }

    #[test]
    fn verdict_thresholds() {
        assert_eq!(Verdict::from_min_real(2e-9), Verdict::Stable);
        assert_eq!(Verdict::from_min_real(1e-9), Verdict::Marginal);
        assert_eq!(Verdict::from_min_real(-1e-9), Verdict::Marginal);
        assert_eq!(Verdict::from_min_real(-2e-9), Verdict::Unstable);
    }

    proptest::proptest! {
        #[test]
        fn uniform_spectrum_is_the_doubled_closed_form(n in 3usize..16, theta in -3.1f64..3.1) {
            let a = assemble_a(&ShapeSpec::uniform(n, theta).unwrap()).unwrap();
            let mut num: Vec<f64> = numerical_eigs(&a).unwrap().iter().map(|z| z.re).collect();
            num.sort_by(|a, b| b.total_cmp(a));
            let cf = closed_form_eigs(theta, n).unwrap();
            for (i, l) in cf.iter().enumerate() {
                proptest::prop_assert!((num[2 * i] - l).abs() < 1e-10);
                proptest::prop_assert!((num[2 * i + 1] - l).abs() < 1e-10);
            }
        }
    }
}
