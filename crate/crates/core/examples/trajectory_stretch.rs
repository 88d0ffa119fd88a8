// Output-trajectory length of relu networks against the closed-form lower
// estimate, on a unit circle input.

use std::error::Error;

use lipscope::trajectory::{circle_trajectory, expressiveness_correlation, log_log_fit};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let traj = circle_trajectory(2, 1.0, 2048)?;
    println!("input circle length {:.6} (2π = {:.6})", traj.length(), std::f64::consts::TAU);

    let rows = expressiveness_correlation(&[30, 60, 90], &[2, 4, 6], 1.0, 5, &traj)?;
    println!("{:>6} {:>6} {:>12} {:>12} {:>12}", "width", "depth", "stretch", "rmt_lower", "exact_upper");
    for r in &rows {
        println!(
            "{:>6} {:>6} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.width, r.depth, r.stretch_ratio, r.rmt_lower, r.exact_upper
        );
        assert!(r.stretch_ratio <= r.exact_upper);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.rmt_lower).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.stretch_ratio).collect();
    let (slope, _, r) = log_log_fit(&xs, &ys);
    println!("log-log slope {slope:.3}, correlation {r:.3}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
