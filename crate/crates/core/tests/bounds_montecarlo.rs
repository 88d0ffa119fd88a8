use lipscope::bounds::{
    exact_lower_bound, exact_upper_bound, gaussian_extreme_estimates, product_matrix_sigma, rmt_lower_bound,
    rmt_upper_bound,
};
use lipscope::linalg::{mat_mul, spectral_norm};
use lipscope::network::{Activation, Architecture, Network};
use lipscope::random::{gaussian_matrix, RngStream};
use proptest::prelude::*;

fn relu_arch(widths: &[usize]) -> Architecture {
    Architecture::new(widths.to_vec(), Activation::Relu).unwrap()
}

fn mean_bounds(widths: &[usize], seeds: u64, master: u64) -> (f64, f64) {
    let arch = relu_arch(widths);
    let (mut up, mut lo) = (0.0, 0.0);
    for s in 0..seeds {
        let net = Network::sample(&arch, 1.0, 0.0, &mut RngStream::derive(master, s)).unwrap();
        up += exact_upper_bound(&net).unwrap();
        lo += exact_lower_bound(&net).unwrap();
    }
    (up / seeds as f64, lo / seeds as f64)
}

fn closed_form_sigma(widths: &[usize], sigma_w: f64) -> f64 {
    let hidden: f64 = widths[1..widths.len() - 1].iter().map(|&n| (n as f64).sqrt()).product();
    sigma_w.powi(widths.len() as i32 - 1) * hidden
}

proptest! {
    #[test]
    fn product_sigma_recursion_matches_closed_form(widths in prop::collection::vec(1usize..400, 2..12), sigma in 0.05f64..3.0) {
        let r = product_matrix_sigma(&widths, sigma);
        let c = closed_form_sigma(&widths, sigma);
        prop_assert!((r - c).abs() <= 1e-12 * c);
    }

    #[test]
    fn rmt_bounds_are_homogeneous(widths in prop::collection::vec(1usize..50, 2..7), sigma in 0.05f64..3.0) {
        let arch = relu_arch(&widths);
        let k = widths.len() as i32 - 1;
        let up = rmt_upper_bound(&arch, 2.0 * sigma) / rmt_upper_bound(&arch, sigma);
        let lo = rmt_lower_bound(&arch, 2.0 * sigma) / rmt_lower_bound(&arch, sigma);
        prop_assert!((up - 2f64.powi(k)).abs() <= 1e-12 * 2f64.powi(k));
        prop_assert!((lo - 2f64.powi(k)).abs() <= 1e-12 * 2f64.powi(k));
    }
}

#[test]
fn mean_top_singular_value_below_the_upper_estimate() {
    let (lo, hi) = gaussian_extreme_estimates(200, 100, 1.0).unwrap();
    let norms: Vec<f64> = (0..200)
        .map(|k| spectral_norm(&gaussian_matrix(&mut RngStream::derive(17, k), 200, 100, 1.0).unwrap()).unwrap())
        .collect();
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    assert!(mean < hi && mean > lo, "mean {mean} outside ({lo}, {hi})");
    // Individual draws fluctuate around the edge on a scale of about 0.35.
    assert!(norms.iter().all(|&s| (s - hi).abs() < 2.5));
}

#[test]
fn product_entry_std_matches_pairwise_rule() {
    let mut var = 0.0;
    let mut count = 0.0;
    for k in 0..100 {
        let mut s = RngStream::derive(23, k);
        let w1 = gaussian_matrix(&mut s, 50, 50, 1.0).unwrap();
        let w2 = gaussian_matrix(&mut s, 50, 50, 1.0).unwrap();
        for x in mat_mul(&w2, &w1).unwrap().data() {
            var += x * x;
            count += 1.0;
        }
    }
    let std = (var / count).sqrt();
    let expect = product_matrix_sigma(&[50, 50, 50], 1.0);
    assert!((expect - 50f64.sqrt()).abs() < 1e-12);
    assert!((std - expect).abs() <= 0.05 * expect, "{std} vs {expect}");
}

#[test]
fn wide_single_hidden_layer_tracks_upper_estimate() {
    let (up, _) = mean_bounds(&[2, 300, 2], 50, 31);
    let rmt = rmt_upper_bound(&relu_arch(&[2, 300, 2]), 1.0);
    assert!((up - rmt).abs() <= 0.2 * rmt, "mean exact upper {up} vs {rmt}");
}

#[test]
fn two_hidden_layers_track_lower_estimate() {
    let (_, lo) = mean_bounds(&[2, 100, 100, 2], 50, 37);
    let rmt = rmt_lower_bound(&relu_arch(&[2, 100, 100, 2]), 1.0);
    assert!(lo >= rmt / 2.0 && lo <= rmt * 2.0, "mean exact lower {lo} vs {rmt}");
}

#[test]
fn log_upper_is_linear_in_depth() {
    let depths: Vec<f64> = (1..=8).map(|d| d as f64).collect();
    let logs: Vec<f64> = (1..=8)
        .map(|d| rmt_upper_bound(&Architecture::constant_width(2, 50, d, 2, Activation::Relu).unwrap(), 1.0).ln())
        .collect();
    let n = depths.len() as f64;
    let (mx, my) = (depths.iter().sum::<f64>() / n, logs.iter().sum::<f64>() / n);
    let sxy: f64 = depths.iter().zip(&logs).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = depths.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = logs.iter().map(|y| (y - my).powi(2)).sum();
    assert!(sxy * sxy / (sxx * syy) > 0.999);
}
