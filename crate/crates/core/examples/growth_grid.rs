// How the closed-form bounds grow with width and depth.
//
// Prints `ln(rmt_upper)` on a small grid, compares architectures with the
// same neuron budget, and shows the σ_w threshold below which depth shrinks
// the bound instead of growing it.

use std::error::Error;

use lipscope::bounds::{rmt_lower_bound, rmt_upper_bound};
use lipscope::network::{Activation, Architecture};

fn arch(width: usize, depth: usize) -> Result<Architecture, Box<dyn Error>> {
    Ok(Architecture::constant_width(2, width, depth, 2, Activation::Relu)?)
}

fn sci(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" ")
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let widths = [10, 25, 50, 100];
    print!("{:>6}", "depth");
    for w in widths {
        print!("{w:>10}");
    }
    println!();
    for depth in 1..=6 {
        print!("{depth:>6}");
        for w in widths {
            print!("{:>10.3}", rmt_upper_bound(&arch(w, depth)?, 1.0).ln());
        }
        println!();
    }

    println!("\nfixed budget of 300 hidden neurons:");
    for (w, d) in [(300, 1), (100, 3), (50, 6), (20, 15), (10, 30)] {
        println!("  {w:>3}x{d:<2}  rmt_upper {:.3e}", rmt_upper_bound(&arch(w, d)?, 1.0));
    }

    let n = 20usize;
    println!("\nwidth {n}: upper grows with depth iff sigma_w > 1/(2*sqrt(n)) = {:.3}", 0.5 / (n as f64).sqrt());
    for sigma in [0.05, 0.2, 0.3] {
        let up: Vec<f64> = (1..=4).map(|d| rmt_upper_bound(&arch(n, d).unwrap(), sigma)).collect();
        let lo: Vec<f64> = (1..=4).map(|d| rmt_lower_bound(&arch(n, d).unwrap(), sigma)).collect();
        println!("  sigma_w {sigma}: upper {}", sci(&up));
        println!("  {:>11} lower {}", "", sci(&lo));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
