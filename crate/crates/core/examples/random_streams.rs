// Reproducible random streams: one master seed, independent substreams per
// trial, identical draws regardless of how trials are scheduled.

use std::error::Error;

use lipscope::random::{gaussian_matrix, RngStream};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut a = RngStream::new(42);
    let mut b = RngStream::new(42);
    let first: Vec<u64> = (0..3).map(|_| a.next_u64()).collect();
    assert_eq!(first, (0..3).map(|_| b.next_u64()).collect::<Vec<_>>());
    println!("seed 42 → {first:x?}");

    for trial in 0..3 {
        let mut s = RngStream::derive(42, trial);
        println!("substream {trial}: uniform {:.6}, normal {:+.6}", s.next_uniform(), s.next_standard_normal());
    }

    let n = 100_000;
    let mut s = RngStream::new(1);
    let draws: Vec<f64> = (0..n).map(|_| s.next_standard_normal()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    println!("{n} normals: mean {mean:+.4}, variance {var:.4}");

    let g = gaussian_matrix(&mut RngStream::new(9), 2, 3, 0.5)?;
    println!("2x3 matrix with sigma 0.5: {g:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
