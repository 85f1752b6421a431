//! The bundled hexagon scenario: six agents form a regular hexagon of side
//! 10, spin it about its centroid, and grow it to side 30 when an event at
//! `t = 150` changes the closing distance.
//!
//! Writes `hexagon.csv`, `hexagon.report.json` and `hexagon.svg` into the
//! directory given as the first argument (default: the system temp dir).

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use polyform::cli::output::{write_csv, write_svg, RunReport};
use polyform::cli::scenario;
use polyform::simulator::{run, side_lengths};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let s = scenario::hexagon();
    let traj = run(&s)?;

    for e in &traj.events {
        let sides = e.sides_before.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>();
        println!("t = {:.3}: sides before event [{}]", e.applied, sides.join(", "));
    }
    let sides = side_lengths(traj.final_positions());
    println!("final sides {:?}", sides.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>());

    let report = RunReport::new(&traj, &s.final_law(), 1e-6);
    if let Some(fit) = &report.rigid_fit {
        println!("spin ω = {:.5} rad/s, translation ({:.1e}, {:.1e})", fit.omega, fit.v[0], fit.v[1]);
    }

    write_csv(&traj, BufWriter::new(File::create(dir.join("hexagon.csv"))?))?;
    write_svg(&traj, BufWriter::new(File::create(dir.join("hexagon.svg"))?))?;
    std::fs::write(dir.join("hexagon.report.json"), report.to_json())?;
    println!("wrote hexagon.csv, hexagon.report.json, hexagon.svg to {}", dir.display());
    Ok(())
}
