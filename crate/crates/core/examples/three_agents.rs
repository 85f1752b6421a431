//! Three agents with distance-based gradient control.
//!
//! With matched distances the triangle settles. When the two agents sharing
//! an edge disagree on its length the formation still converges, but it
//! keeps moving as a rigid body.

use polyform::control::ControlLaw;
use polyform::simulator::{fit_rigid_motion, run, side_lengths, Initial, Integrator, Method, Scenario};
use polyform::Point;

fn simulate(label: &str, law: ControlLaw) -> polyform::Result<()> {
    let start = vec![Point::new(0.0, 0.0), Point::new(1.2, 0.3), Point::new(2.0, 1.5)];
    let scenario = Scenario::new(
        Initial::Positions(start),
        law.clone(),
        Integrator { dt: 0.01, t_end: 60.0, method: Method::Rk4 },
        vec![],
        100,
    )?;
    let traj = run(&scenario)?;
    let p = traj.final_positions();
    let fit = fit_rigid_motion(p, &law.velocities(p)?)?;
    let sides = side_lengths(p);
    println!(
        "{label}: |p1−p2| = {:.5}, |p2−p3| = {:.5}, v = ({:+.4}, {:+.4}), ω = {:+.4}",
        sides[0], sides[1], fit.v.x, fit.v.y, fit.omega
    );
    Ok(())
}

fn main() -> polyform::Result<()> {
    simulate("matched", ControlLaw::gradient3(1.0, 1.5)?)?;
    simulate("mismatched", ControlLaw::mismatched3(1.0, 1.5, 0.1, 0.0)?)?;
    Ok(())
}
