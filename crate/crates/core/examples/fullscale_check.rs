//! Temporary full-scale smoke run: one default-config cell per bit width.

use std::time::Instant;

use nss_core::lca::BitWidth;
use nss_core::pipeline::{run_sweep, ExperimentConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let bits: Vec<BitWidth> = args
        .get(2)
        .map(|s| {
            s.split(',')
                .map(|b| BitWidth::Bits(b.parse().unwrap()))
                .collect()
        })
        .unwrap_or_else(|| vec![BitWidth::Bits(8)]);
    let mut cfg = ExperimentConfig::default();
    cfg.seed = seed;
    let dir = std::env::temp_dir().join(format!("nss-fullscale-{seed}"));
    let t0 = Instant::now();
    let out = run_sweep::<f64>(&cfg, &bits, &[seed], &dir).unwrap();
    for row in &out.rows {
        println!(
            "bits={:?} mean_f1={:?} spikes={:?} wall={:.1}s",
            row.bits, row.mean_f1, row.mean_spikes_per_waveform,
            t0.elapsed().as_secs_f64()
        );
    }
    for cell in &out.cells {
        println!(
            "  cell seed={} bits={:?} f1={:?} spikes={:?} err={:?}",
            cell.seed, cell.bits, cell.mean_f1, cell.mean_spikes_per_waveform, cell.error
        );
    }
}
