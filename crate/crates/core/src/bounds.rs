//! Lipschitz bounds for fully-connected networks.
//!
//! Two families live here:
//!
//! * bounds computed from concrete weights: the product of per-layer spectral
//!   norms (an upper bound for any 1-Lipschitz activation) and the spectral
//!   norm of the product `W_{L+1}···W₁` (the Lipschitz constant of the
//!   network with activations removed, used as the lower reference);
//! * closed-form estimates of those two quantities for Gaussian weights
//!   `N(0, σ_w²)`, which depend only on the widths and `σ_w`.
//!
//! For an `N × n` standard Gaussian matrix with `N ≥ n` the expected extreme
//! singular values sit between `√N − √n` and `√N + √n`. Applying the upper
//! end layer by layer gives `∏ σ_w(√n_l + √n_{l−1})`. For the product matrix,
//! entries are treated as independent with standard deviation
//! `σ_{1:L+1} = σ_w^{L+1} ∏_{l=1}^{L} √n_l`, which yields
//! `σ_{1:L+1}·(√n_{L+1} + √n₀ + c·√n₀)` with an unknown constant `c`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{mat_mul, spectral_norm, LinalgError};
use crate::network::{Architecture, Network};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("expected rows >= cols, got {rows}x{cols}; transpose the matrix first")]
    WideMatrix { rows: usize, cols: usize },
    #[error("sigma must be positive and finite, got {0}")]
    BadSigma(f64),
}

/// The four Lipschitz bound values for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub exact_upper: f64,
    pub exact_lower: f64,
    pub rmt_upper: f64,
    pub rmt_lower: f64,
    pub sigma_w: f64,
    pub widths: Vec<usize>,
}

/// `∏_l ‖W_l‖₂`.
pub fn exact_upper_bound(net: &Network) -> Result<f64, BoundsError> {
    let mut prod = 1.0;
    for w in net.weights() {
        prod *= spectral_norm(w)?;
    }
    Ok(prod)
}

/// `‖W_{L+1}···W₁‖₂`, with the product accumulated from the input side.
pub fn exact_lower_bound(net: &Network) -> Result<f64, BoundsError> {
    let weights = net.weights();
    let mut prod = weights[0].clone();
    for w in &weights[1..] {
        prod = mat_mul(w, &prod)?;
    }
    Ok(spectral_norm(&prod)?)
}

fn assert_sigma(sigma_w: f64) {
    assert!(
        sigma_w > 0.0 && sigma_w.is_finite(),
        "sigma_w must be positive and finite, got {sigma_w}"
    );
}

/// `∏_{l=1}^{L+1} σ_w(√n_l + √n_{l−1})`. Panics if `sigma_w <= 0`.
pub fn rmt_upper_bound(arch: &Architecture, sigma_w: f64) -> f64 {
    assert_sigma(sigma_w);
    arch.widths()
        .windows(2)
        .map(|p| sigma_w * ((p[0] as f64).sqrt() + (p[1] as f64).sqrt()))
        .product()
}

/// Lower estimate with the unknown `O(√n₀)` constant set to zero.
pub fn rmt_lower_bound(arch: &Architecture, sigma_w: f64) -> f64 {
    rmt_lower_bound_with_correction(arch, sigma_w, 0.0)
}

/// `σ_{1:L+1}·(√n_{L+1} + √n₀ + correction·√n₀)`. Panics if `sigma_w <= 0`
/// or `correction < 0`.
pub fn rmt_lower_bound_with_correction(arch: &Architecture, sigma_w: f64, correction: f64) -> f64 {
    assert!(correction >= 0.0, "correction must be nonnegative, got {correction}");
    let n0 = (arch.input_dim() as f64).sqrt();
    let n_out = (arch.output_dim() as f64).sqrt();
    product_matrix_sigma(arch.widths(), sigma_w) * (n_out + n0 + correction * n0)
}

/// Entry standard deviation of `W_{L+1}···W₁` when each factor has i.i.d.
/// `N(0, σ_w²)` entries and the product entries are treated as independent.
///
/// Evaluated by the pairwise rule `σ(A₂A₁) = √N·σ(A₁)σ(A₂)` (`N` the shared
/// dimension) applied from the input side:
/// `σ_{1:1} = σ_w`, `σ_{1:l} = √n_{l−1}·σ_{1:l−1}·σ_w`.
pub fn product_matrix_sigma(widths: &[usize], sigma_w: f64) -> f64 {
    assert_sigma(sigma_w);
    assert!(widths.len() >= 2, "need at least two widths");
    let mut sigma = sigma_w;
    for l in 2..widths.len() {
        sigma = (widths[l - 1] as f64).sqrt() * sigma * sigma_w;
    }
    sigma
}

/// `(σ(√N − √n), σ(√N + √n))` for an `N × n` Gaussian matrix, `N ≥ n`.
pub fn gaussian_extreme_estimates(rows: usize, cols: usize, sigma: f64) -> Result<(f64, f64), BoundsError> {
    if rows < cols {
        return Err(BoundsError::WideMatrix { rows, cols });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(BoundsError::BadSigma(sigma));
    }
    let (big, small) = ((rows as f64).sqrt(), (cols as f64).sqrt());
    Ok((sigma * (big - small), sigma * (big + small)))
}

pub fn bound_report(net: &Network) -> Result<BoundReport, BoundsError> {
    let arch = net.arch();
    Ok(BoundReport {
        exact_upper: exact_upper_bound(net)?,
        exact_lower: exact_lower_bound(net)?,
        rmt_upper: rmt_upper_bound(arch, net.sigma_w()),
        rmt_lower: rmt_lower_bound(arch, net.sigma_w()),
        sigma_w: net.sigma_w(),
        widths: arch.widths().to_vec(),
    })
}
