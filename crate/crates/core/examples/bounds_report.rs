// Exact and closed-form Lipschitz bounds for one sampled network.
//
// Run with `cargo run --example bounds_report`.

use std::error::Error;

use lipscope::bounds::{bound_report, rmt_lower_bound_with_correction};
use lipscope::network::{Activation, Architecture, Network};
use lipscope::random::RngStream;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let arch = Architecture::new(vec![2, 300, 2], Activation::Relu)?;
    let mut stream = RngStream::new(7);
    let net = Network::sample(&arch, 1.0, 0.0, &mut stream)?;
    let r = bound_report(&net)?;

    println!("widths {:?}, sigma_w {}", r.widths, r.sigma_w);
    println!("  exact upper  {:>10.3}   (product of layer norms)", r.exact_upper);
    println!("  rmt upper    {:>10.3}", r.rmt_upper);
    println!("  exact lower  {:>10.3}   (norm of the product)", r.exact_lower);
    println!("  rmt lower    {:>10.3}", r.rmt_lower);
    assert!(r.exact_lower <= r.exact_upper);

    // The lower estimate leaves an O(√n₀) constant open; show its effect.
    for c in [0.0, 0.5, 1.0] {
        println!("  rmt lower, correction {c}: {:.3}", rmt_lower_bound_with_correction(&arch, 1.0, c));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
