// Trains a small tanh network and checks whether its weights look Gaussian
// enough for the random-matrix norm estimate to apply.

use std::error::Error;

use lipscope::empirics::{
    fit_gaussian, generate_dataset, norm_comparison_report, train_sgd, weight_histogram, TrainConfig,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cfg = TrainConfig {
        epochs: 5,
        dataset_size: 2000,
        ..TrainConfig::with_hidden(32)
    };
    let data = generate_dataset(cfg.dataset_size, cfg.seed);
    let out = train_sgd(&cfg, &data)?;
    println!("trained {:?}, final mse {:.4}", cfg.arch.widths(), out.final_mse);

    for row in norm_comparison_report(std::slice::from_ref(&out.network))? {
        let fit = fit_gaussian(&out.network.weights()[row.layer - 1]);
        println!(
            "W{} ({}x{}): mean {:+.4}, std {:.4}, true ‖W‖₂ {:.4}, estimate {:.4}, error {:.1}%",
            row.layer,
            row.rows,
            row.cols,
            fit.mean,
            fit.std,
            row.true_norm,
            row.estimated_norm,
            100.0 * row.relative_error
        );
    }

    let hist = weight_histogram(&out.network.weights()[0], 12)?;
    let peak = hist.iter().map(|&(_, n)| n).max().unwrap_or(1);
    for (center, count) in hist {
        println!("{center:+.3} {}", "#".repeat(40 * count / peak));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
