// Dense linear algebra: spectral norms, symmetric eigenvalues and the
// Gaussian extreme singular value estimates they are checked against.

use std::error::Error;

use lipscope::bounds::gaussian_extreme_estimates;
use lipscope::linalg::{mat_mul, spectral_norm, sym_eigs, Matrix};
use lipscope::random::{gaussian_matrix, RngStream};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let m = Matrix::from_rows(&[[3.0, 0.0], [4.0, 5.0]])?;
    let gram = mat_mul(&m.transpose(), &m)?;
    let eigs = sym_eigs(&gram)?;
    println!("M = {m:?}");
    println!("eigenvalues of MᵀM: {eigs:?}");
    println!("‖M‖₂ = {:.12} (√λ_max = {:.12})", spectral_norm(&m)?, eigs[eigs.len() - 1].sqrt());

    let (rows, cols, trials) = (200, 100, 20);
    let (lo, hi) = gaussian_extreme_estimates(rows, cols, 1.0)?;
    let mut stream = RngStream::new(2024);
    let mut below = 0;
    let mut mean = 0.0;
    for _ in 0..trials {
        let g = gaussian_matrix(&mut stream, rows, cols, 1.0)?;
        let s = spectral_norm(&g)?;
        mean += s / trials as f64;
        if s <= hi {
            below += 1;
        }
    }
    println!("{rows}x{cols} Gaussian: predicted [{lo:.3}, {hi:.3}], mean ‖G‖₂ = {mean:.3}, {below}/{trials} below the upper estimate");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
