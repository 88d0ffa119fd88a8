#[allow(dead_code)]
mod bounds_report {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/bounds_report.rs"));
}

#[allow(dead_code)]
mod growth_grid {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/growth_grid.rs"));
}

#[allow(dead_code)]
mod spectral_norms {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/spectral_norms.rs"));
}

#[allow(dead_code)]
mod stability_certificate {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/stability_certificate.rs"));
}

#[allow(dead_code)]
mod trajectory_stretch {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/trajectory_stretch.rs"));
}

#[allow(dead_code)]
mod train_study {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/train_study.rs"));
}

#[allow(dead_code)]
mod random_streams {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/random_streams.rs"));
}

#[allow(dead_code)]
mod network_json {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/network_json.rs"));
}

#[test]
fn bounds_report_example_runs() {
    bounds_report::run_example().expect("bounds_report example should run");
}

#[test]
fn growth_grid_example_runs() {
    growth_grid::run_example().expect("growth_grid example should run");
}

#[test]
fn spectral_norms_example_runs() {
    spectral_norms::run_example().expect("spectral_norms example should run");
}

#[test]
fn stability_certificate_example_runs() {
    stability_certificate::run_example().expect("stability_certificate example should run");
}

#[test]
fn trajectory_stretch_example_runs() {
    trajectory_stretch::run_example().expect("trajectory_stretch example should run");
}

#[test]
fn train_study_example_runs() {
    train_study::run_example().expect("train_study example should run");
}

#[test]
fn random_streams_example_runs() {
    random_streams::run_example().expect("random_streams example should run");
}

#[test]
fn network_json_example_runs() {
    network_json::run_example().expect("network_json example should run");
}
