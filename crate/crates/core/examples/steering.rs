//! Motion parameters turn a converged polygon into a rigid body.
//!
//! Equal parameters on every sensed vector spin a square about its centroid.
//! Parameters not designed for the shape bias the steady state instead: the
//! sides no longer match the target. A least-squares rigid fit of the final
//! velocities recovers `v` and `ω` either way, so it doubles as a check on
//! user-supplied parameters.

use polyform::control::{ControlLaw, MotionParams};
use polyform::geometry::ShapeSpec;
use polyform::simulator::{fit_rigid_motion, run, side_lengths, Initial, Integrator, Method, Scenario};

fn simulate(label: &str, motion: MotionParams) -> polyform::Result<()> {
    let spec = ShapeSpec::regular(4)?.with_closing_distance(4.0)?;
    let law = ControlLaw::steered(spec, motion)?.with_gain(2.0)?.with_scale_gain(0.05)?;
    let scenario = Scenario::new(
        Initial::Random { seed: 3, bounds: [-4.0, -4.0, 4.0, 4.0] },
        law.clone(),
        Integrator { dt: 0.01, t_end: 200.0, method: Method::Rk4 },
        vec![],
        100,
    )?;
    let traj = run(&scenario)?;
    let p = traj.final_positions();
    let fit = fit_rigid_motion(p, &law.velocities(p)?)?;
    let sides = side_lengths(p).iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>();
    println!("{label}: sides [{}]", sides.join(", "));
    println!(
        "  v = ({:+.4}, {:+.4}), ω = {:+.5}, fit residual {:.1e}",
        fit.v.x, fit.v.y, fit.omega, fit.residual
    );
    Ok(())
}

fn main() -> polyform::Result<()> {
    simulate("spin", MotionParams::uniform(4, 0.05)?)?;
    simulate("undesigned", MotionParams::new(vec![[0.05, 0.0]; 4])?)?;
    simulate("still", MotionParams::uniform(4, 0.0)?)?;
    Ok(())
}
