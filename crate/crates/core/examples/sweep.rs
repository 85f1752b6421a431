//! The stability map checked empirically: for each `(n, θ*)` cell the
//! spectral verdict is compared with a short simulation from random
//! positions. Cells run in parallel.

use polyform::cli::{default_sweep_angles, sweep_grid, write_sweep_csv, SweepSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ns: Vec<usize> = (3..=8).collect();
    let rows = sweep_grid(&ns, &default_sweep_angles(), &SweepSettings::default(), None)?;

    for &n in &ns {
        let line: String = rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| match (r.verdict.as_str(), r.empirical_converged) {
                ("stable", true) => '+',
                ("unstable", false) => '.',
                _ => '?',
            })
            .collect();
        println!("n = {n:2}  {line}");
    }
    println!("+ stable and converged, . unstable and not converged, ? disagreement");

    if let Some(path) = std::env::args_os().nth(1) {
        write_sweep_csv(&rows, std::fs::File::create(&path)?)?;
        println!("wrote {}", path.to_string_lossy());
    }
    Ok(())
}
