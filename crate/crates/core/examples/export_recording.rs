//! Temporary: write the default synthetic recording + ground truth to a dir.

use nss_core::pipeline::{run_generate, ExperimentConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let dir = std::path::PathBuf::from(args.get(2).map(String::as_str).unwrap_or("/tmp/nss-export"));
    let mut cfg = ExperimentConfig::default();
    cfg.seed = seed;
    let out = run_generate::<f64>(&cfg, &dir).unwrap();
    println!(
        "wrote {} ({} units, {} s)",
        out.recording_base.display(),
        out.ground_truth.spike_trains.len(),
        out.recording.duration_s()
    );
}
