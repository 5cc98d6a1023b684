//! Scratch runner for acceptance-level checks (drift, precision, baseline).

use nss_core::eval::{detection_metrics, evaluate_sorting};
use nss_core::lca::{BitWidth, NeuronModel};
use nss_core::pipeline::{preprocess, run_baseline, ExperimentConfig};
use nss_core::synth::{generate_recording, DriftConfig};

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "drift".into());
    let seed: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    match mode.as_str() {
        "drift" => drift(seed),
        "prec" => prec(seed),
        "base" => base(seed),
        other => eprintln!("unknown mode {other}"),
    }
}

fn base_cfg(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        ..ExperimentConfig::default()
    }
    .resolved()
}

fn drift(seed: u64) {
    let mut cfg = base_cfg(seed);
    cfg.synth.drift = Some(DriftConfig {
        unit_id: 4,
        amplitude_decay_fraction: 0.5,
    });
    let (rec, gt) = generate_recording::<f64>(&cfg.synth).unwrap();
    for neuron in [NeuronModel::Tdq, NeuronModel::Lif] {
        let mut c = cfg.clone();
        c.lca1.bit_width = BitWidth::Bits(2);
        c.lca2.bit_width = BitWidth::Bits(2);
        c.lca1.neuron_model = neuron;
        c.lca2.neuron_model = neuron;
        let pre = preprocess(&rec, &c.detection, c.detector).unwrap();
        let mut model = c.build_model::<f64>(rec.channel_count()).unwrap();
        let t0 = std::time::Instant::now();
        let results = model.train_online(&pre.waveforms).unwrap();
        let times: Vec<f64> = results.iter().map(|r| r.timestamp).collect();
        let labels: Vec<i32> = results.iter().map(|r| r.label).collect();
        let from = times[times.len().saturating_sub(100)];
        let last = evaluate_sorting(
            &gt.spike_trains,
            &times,
            &labels,
            model.cluster_count(),
            c.eval.tol_s,
            from,
            c.eval.match_mode,
        )
        .unwrap();
        let post60 = evaluate_sorting(
            &gt.spike_trains,
            &times,
            &labels,
            model.cluster_count(),
            c.eval.tol_s,
            60.0,
            c.eval.match_mode,
        )
        .unwrap();
        println!(
            "drift seed={seed} neuron={neuron:?} last100_f1={:.3} post60_f1={:.3} wall={:.1}s",
            last.mean_f1(),
            post60.mean_f1(),
            t0.elapsed().as_secs_f64()
        );
    }
}

fn prec(seed: u64) {
    let mut cfg = base_cfg(seed);
    cfg.synth.snr_range = [4.5, 13.0];
    cfg.synth.rate_range = [10.0, 16.0];
    let (rec, gt) = generate_recording::<f64>(&cfg.synth).unwrap();
    let pre = preprocess(&rec, &cfg.detection, cfg.detector).unwrap();
    let all = gt.merged_times();
    let det: Vec<f64> = pre.detections.iter().map(|d| d.time_s).collect();
    let m = detection_metrics(&all, &det, cfg.eval.tol_s);
    let min_snr = gt.snrs.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "prec seed={seed} n_det={} n_gt={} precision={:.3} fp_rate={:.3} min_snr={:.2}",
        det.len(),
        all.len(),
        m.precision,
        m.fp_rate,
        min_snr
    );
}

fn base(seed: u64) {
    let cfg = base_cfg(seed);
    let (rec, gt) = generate_recording::<f64>(&cfg.synth).unwrap();
    let dir = std::env::temp_dir().join(format!("nss-basecheck-{seed}"));
    let out = run_baseline::<f64>(&rec, &cfg, &dir).unwrap();
    let report = evaluate_sorting(
        &gt.spike_trains,
        &out.output.times,
        &out.output.labels,
        cfg.baseline.n_clusters,
        cfg.eval.tol_s,
        cfg.eval.eval_from_s,
        cfg.eval.match_mode,
    )
    .unwrap();
    println!("base seed={seed} mean_f1={:.3}", report.mean_f1());
}
