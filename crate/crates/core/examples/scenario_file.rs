//! Scenarios are plain JSON. This one is written inline, parsed, run, and
//! summarised with the same report `polyform simulate` writes.

use polyform::cli::output::RunReport;
use polyform::cli::scenario::parse_scenario;
use polyform::simulator::run;

const PENTAGON: &str = r#"{
  "n": 5,
  "initial": { "seed": 21, "box": [-3.0, -3.0, 3.0, 3.0] },
  "law": { "mode": "closed_polygon", "c": 3.0, "k_d": 0.2, "theta": "regular", "d": 2.0 },
  "integrator": { "dt": 0.01, "t_end": 120.0 },
  "events": [{ "t": 60.0, "set": { "d": 4.0 } }],
  "output": { "stride": 50 }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = parse_scenario(PENTAGON)?;
    let traj = run(&s)?;
    let report = RunReport::new(&traj, &s.final_law(), 1e-6);
    println!(
        "converged {} at t = {:?}, final sides {:?}",
        report.converged, report.convergence_time, report.final_sides
    );

    // Errors carry the path of the offending key.
    let bad = PENTAGON.replace("\"c\": 3.0", "\"c\": -1.0");
    if let Err(e) = parse_scenario(&bad) {
        println!("rejected: {e}");
    }
    Ok(())
}
