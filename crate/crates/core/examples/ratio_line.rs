//! A line whose consecutive gaps follow prescribed ratios.
//!
//! With ratios `r = (1, 2, 1, 2)` the converged chain satisfies
//! `r_k z_k = r_{k+1} z_{k+1}`, so the gaps alternate long, short, long, short.

use polyform::control::ControlLaw;
use polyform::geometry::ShapeSpec;
use polyform::simulator::{run, side_lengths, Initial, Integrator, Method, Scenario};

fn main() -> polyform::Result<()> {
    let ratios = vec![1.0, 2.0, 1.0, 2.0];
    let law = ControlLaw::line(ShapeSpec::line(5)?.with_ratios(ratios.clone())?)?;
    let scenario = Scenario::new(
        Initial::Random { seed: 45, bounds: [-5.0, -5.0, 5.0, 5.0] },
        law,
        Integrator { dt: 0.05, t_end: 200.0, method: Method::Rk4 },
        vec![],
        1,
    )?;
    let traj = run(&scenario)?;
    let gaps = side_lengths(traj.final_positions());
    let gaps = &gaps[..4];
    println!("final ‖e_θ‖ {:.2e}", traj.e_theta_norm.last().unwrap());
    for k in 0..3 {
        println!(
            "|z_{k}| / |z_{}| = {:.6}  (target {:.6})",
            k + 1,
            gaps[k] / gaps[k + 1],
            ratios[k + 1] / ratios[k]
        );
    }
    Ok(())
}
