//! Which common turn angles can the chain hold?
//!
//! For each `n` the spectrum of `A(θ*)` is computed numerically and compared
//! with the closed form; the verdict flips at `|θ*| = 2π/(n−1)`.

use polyform::geometry::ShapeSpec;
use polyform::stability::{classify, regular_polygon_angle, stability_bound};

fn main() -> polyform::Result<()> {
    for n in 3..=8 {
        let bound = stability_bound(n);
        let regular = regular_polygon_angle(n);
        println!("n = {n}: bound {bound:.4}, regular polygon angle {regular:.4}");
        let angles = [0.0, regular, 0.9 * bound, bound, 1.1 * bound];
        for theta in angles.into_iter().filter(|t| *t <= std::f64::consts::PI) {
            let report = classify(&ShapeSpec::uniform(n, theta)?)?;
            let closed = report.closed_form.as_ref().and_then(|l| l.last().copied()).unwrap();
            println!(
                "  θ* = {theta:7.4}  min Re λ = {:+.3e}  closed form {closed:+.3e}  {}",
                report.min_real,
                report.verdict.as_str()
            );
        }
    }

    let mixed = ShapeSpec::new(vec![0.3, -0.2, 0.5], vec![1.0, 2.0, 1.0, 0.5], None)?;
    let report = classify(&mixed)?;
    println!("mixed angles and ratios: min Re λ = {:.4}, {}", report.min_real, report.verdict.as_str());
    Ok(())
}
