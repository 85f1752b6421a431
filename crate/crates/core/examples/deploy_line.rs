//! Eight agents scattered in a box line up with equal spacing.
//!
//! The shape error decays like `exp(−c λ_min t)`, where `λ_min` is the
//! smallest eigenvalue of the path Gram matrix `B_θᵀ B_θ`.

use polyform::acceptance::path_gram_min_eig;
use polyform::control::ControlLaw;
use polyform::geometry::ShapeSpec;
use polyform::simulator::{collinearity_residual, run, side_lengths, Initial, Integrator, Method, Scenario};

fn main() -> polyform::Result<()> {
    let n = 8;
    let law = ControlLaw::line(ShapeSpec::line(n)?)?;
    let scenario = Scenario::new(
        Initial::Random { seed: 11, bounds: [-5.0, -5.0, 5.0, 5.0] },
        law,
        Integrator { dt: 0.05, t_end: 150.0, method: Method::Rk4 },
        vec![],
        100,
    )?;
    let traj = run(&scenario)?;

    println!("{:>8} {:>14}", "t", "‖e_θ‖");
    for (t, e) in traj.times.iter().zip(&traj.e_theta_norm) {
        println!("{t:8.1} {e:14.6e}");
    }

    let p = traj.final_positions();
    let spacing = side_lengths(p);
    println!("collinearity residual {:.2e}", collinearity_residual(p).residual);
    println!("spacing {:?}", &spacing[..n - 1]);
    println!("predicted decay rate {:.5}", path_gram_min_eig(n));
    Ok(())
}
