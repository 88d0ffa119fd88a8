// Building, evaluating and serializing a network.

use std::error::Error;

use lipscope::linalg::Matrix;
use lipscope::network::{Activation, Architecture, Network};
use lipscope::random::RngStream;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // Hand-built: one hidden relu layer that computes |x₁| + |x₂|.
    let arch = Architecture::new(vec![2, 4, 1], Activation::Relu)?;
    let w1 = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])?;
    let w2 = Matrix::from_rows(&[[1.0, 1.0, 1.0, 1.0]])?;
    let l1 = Network::from_parts(arch, vec![w1, w2], vec![vec![0.0; 4], vec![0.0]], 1.0, 0.0)?;
    println!("|x|₁ at (0.5, -2) = {:?}", l1.forward(&[0.5, -2.0])?);

    let arch = Architecture::new(vec![3, 8, 8, 2], Activation::Tanh)?;
    let net = Network::sample(&arch, 0.4, 0.1, &mut RngStream::new(11))?;
    let json = net.to_json();
    let back = Network::from_json(&json)?;
    assert_eq!(back, net);
    println!("{} bytes of JSON, round trip exact", json.len());
    println!("f(1, 0, -1) = {:?}", back.forward(&[1.0, 0.0, -1.0])?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
