// Certifying that a network in the feedback loop of ẋ = Ax + f(x) keeps the
// origin stable, via a Lyapunov function xᵀPx.

use std::error::Error;

use lipscope::bounds::exact_upper_bound;
use lipscope::network::{Activation, Architecture, Network};
use lipscope::random::RngStream;
use lipscope::stability::{
    certify_network, example_state_matrix, stability_likelihood, CertificationMode, StabilitySystem,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let sys = StabilitySystem::with_identity_q(example_state_matrix())?;
    println!("A = {:?}", sys.a());
    println!("P = {:?}", sys.p());
    println!("safe Lipschitz threshold = {:.4}", sys.threshold());

    // A network scaled well under the threshold, and its Lyapunov derivative
    // along a few states.
    let arch = Architecture::new(vec![2, 50, 2], Activation::Tanh)?;
    let net = Network::sample(&arch, 1.0, 0.0, &mut RngStream::new(3))?;
    let scale = 0.5 * sys.threshold() / exact_upper_bound(&net)?;
    let small = net.with_scaled_weights(scale.sqrt())?;
    println!("scaled net bound {:.3}, certified: {}", exact_upper_bound(&small)?, certify_network(&sys, &small, CertificationMode::Exact)?);
    for x in [[1.0, 0.0], [0.0, 1.0], [-0.3, 0.7]] {
        println!("  dV/dt at {x:?} = {:.4e}", sys.lyapunov_derivative(&small, &x)?);
    }

    for label in ["300x1", "100x3"] {
        let (w, d) = label.split_once('x').unwrap();
        let arch = Architecture::constant_width(2, w.parse()?, d.parse()?, 2, Activation::Relu)?;
        let lh = stability_likelihood(&sys, &arch, 1.0, 10, 42)?;
        println!("{label}: {}/{} random networks certified", lh.certified, lh.trials);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
