//! End-to-end orchestration: generate → preprocess → sort → evaluate.
//!
//! The functions here are what the CLI subcommands and the integration
//! tests call. Each `run_*` step writes its artifacts plus a resolved
//! configuration snapshot into the output directory, so any result can be
//! reproduced from the files it sits next to.
//!
//! Seeding: [`ExperimentConfig::seed`] is the root seed. Resolving a
//! config copies it over the generator's and baseline's own seed fields,
//! and the sorter derives its per-component streams from it, so one
//! number controls the whole experiment (and sweeps replace it per cell).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{baseline_sort, BaselineConfig, BaselineOutput};
use crate::error::{Error, Result};
use crate::eval::{evaluate_sorting, sparsity_metrics, MatchMode, MatchReport, SparsityMetrics};
use crate::eval::{SpikeTrain, DEFAULT_TOL_S};
use crate::io;
use crate::lca::{BitWidth, LcaConfig};
use crate::learn::LearnConfig;
use crate::network::{LabelResult, NssModel};
use crate::scalar::Scalar;
use crate::signal::{
    bandpass_filter, detect_spikes, extract_waveforms, mad_threshold, neo_detect, Detection,
    DetectionConfig, Recording, SpikeWaveform, Thresholds,
};
use crate::synth::{generate_recording, GroundTruth, SynthConfig};

/// Waveforms sampled for the summary's sparsity metrics.
const SPARSITY_SAMPLE: usize = 20;

// -------------------------------------------------------- configuration --

/// Which spike detector the preprocessing stage uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    /// Amplitude threshold at a multiple of the per-channel MAD.
    #[default]
    Mad,
    /// Smoothed nonlinear-energy-operator threshold.
    Neo,
}

/// Sorter network size.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkShape {
    /// Feature-layer atoms M₁.
    pub n_atoms: usize,
    /// Clustering-layer atoms M₂ (the number of output labels).
    pub n_clusters: usize,
}

impl Default for NetworkShape {
    fn default() -> Self {
        Self {
            n_atoms: 120,
            n_clusters: 10,
        }
    }
}

/// Scoring protocol.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Coincidence tolerance for matching spike times, seconds.
    pub tol_s: f64,
    /// Events and ground truth before this time are excluded (the sorter
    /// is still converging there).
    pub eval_from_s: f64,
    /// Unit-matching mode.
    pub match_mode: MatchMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            tol_s: DEFAULT_TOL_S,
            eval_from_s: 60.0,
            match_mode: MatchMode::PerUnit,
        }
    }
}

/// One experiment, fully specified: every stage's parameters plus the
/// root seed. Serializes as flat per-module sections; every section (and
/// every field) falls back to its default when absent.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Root seed; overrides the generator's and baseline's seed fields.
    pub seed: u64,
    pub synth: SynthConfig,
    pub detection: DetectionConfig,
    pub detector: Detector,
    pub network: NetworkShape,
    pub lca1: LcaConfig,
    pub lca2: LcaConfig,
    pub learn: LearnConfig,
    pub baseline: BaselineConfig,
    pub eval: EvalOptions,
}

impl ExperimentConfig {
    /// Copies the root seed into the sections that carry their own.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut cfg = self.clone();
        cfg.synth.seed = self.seed;
        cfg.baseline.seed = self.seed;
        cfg
    }

    /// Validates every section.
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.detection.validate(self.synth.sample_rate_hz)?;
        self.lca1.validate()?;
        self.lca2.validate()?;
        self.learn.validate()?;
        self.baseline.validate()?;
        if self.network.n_atoms == 0 || self.network.n_clusters == 0 {
            return Err(Error::Config(
                "network.n_atoms and network.n_clusters must be ≥ 1".into(),
            ));
        }
        if !(self.eval.tol_s > 0.0) {
            return Err(Error::Config("eval.tol_s must be positive".into()));
        }
        if !(self.eval.eval_from_s >= 0.0) {
            return Err(Error::Config("eval.eval_from_s must be nonnegative".into()));
        }
        Ok(())
    }

    /// Waveform dimensionality after extraction: channels × window samples.
    pub fn input_dim(&self, n_channels: usize) -> usize {
        n_channels * self.detection.window_samples(self.synth.sample_rate_hz)
    }

    /// Builds a fresh (untrained) sorter model for this config.
    pub fn build_model<T: Scalar>(&self, n_channels: usize) -> Result<NssModel<T>> {
        NssModel::new(
            self.input_dim(n_channels),
            self.network.n_atoms,
            self.network.n_clusters,
            self.lca1.clone(),
            self.lca2.clone(),
            self.learn.clone(),
            self.seed,
        )
    }
}

// ----------------------------------------------------------- preprocess --

/// Everything the detection stage produced.
#[derive(Debug, Clone)]
pub struct PreprocessOutput<T> {
    /// Extracted, flattened waveforms in time order.
    pub waveforms: Vec<SpikeWaveform<T>>,
    /// The detections the waveforms were cut around (boundary-clipped
    /// events appear here but not in `waveforms`).
    pub detections: Vec<Detection>,
    /// MAD thresholds (absent for the NEO detector).
    pub thresholds: Option<Thresholds<T>>,
}

/// Filters, detects, and extracts: band-pass → threshold crossings (MAD
/// or NEO) → aligned flattened waveforms.
pub fn preprocess<T: Scalar>(
    rec: &Recording<T>,
    cfg: &DetectionConfig,
    detector: Detector,
) -> Result<PreprocessOutput<T>> {
    cfg.validate(rec.sample_rate())?;
    let filtered = bandpass_filter(rec, cfg)?;
    let (detections, thresholds) = match detector {
        Detector::Mad => {
            let thr = mad_threshold(&filtered, cfg)?;
            (detect_spikes(&filtered, &thr, cfg)?, Some(thr))
        }
        Detector::Neo => (neo_detect(&filtered, cfg)?, None),
    };
    let waveforms = extract_waveforms(&filtered, &detections, cfg);
    Ok(PreprocessOutput {
        waveforms,
        detections,
        thresholds,
    })
}

// ------------------------------------------------------------- generate --

/// Artifacts of the generate step.
#[derive(Debug)]
pub struct GenerateOutput<T> {
    pub recording: Recording<T>,
    pub ground_truth: GroundTruth<T>,
    /// Base path of the recording pair (`.raw` + `.json`).
    pub recording_base: PathBuf,
    pub ground_truth_path: PathBuf,
    pub config_path: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

/// Ground truth as evaluation spike trains, unit ids `0..n_units`.
pub fn ground_truth_trains<T: Scalar>(gt: &GroundTruth<T>) -> Result<Vec<SpikeTrain>> {
    gt.spike_trains
        .iter()
        .enumerate()
        .map(|(u, times)| SpikeTrain::new(u as i32, times.clone()))
        .collect()
}

/// Generates a synthetic recording and writes `recording.raw` +
/// `recording.json`, `ground_truth.csv`, and `generate.config.json` into
/// `out_dir`.
pub fn run_generate<T: Scalar>(cfg: &ExperimentConfig, out_dir: &Path) -> Result<GenerateOutput<T>> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    create_dir(out_dir)?;
    let (recording, ground_truth) = generate_recording::<T>(&cfg.synth)?;
    let recording_base = out_dir.join("recording");
    io::write_recording(&recording, &recording_base)?;
    let ground_truth_path = out_dir.join("ground_truth.csv");
    io::write_spike_trains(&ground_truth_trains(&ground_truth)?, &ground_truth_path)?;
    let config_path = out_dir.join("generate.config.json");
    io::write_json(&cfg, &config_path)?;
    Ok(GenerateOutput {
        recording,
        ground_truth,
        recording_base,
        ground_truth_path,
        config_path,
    })
}

// ----------------------------------------------------------------- sort --

/// Spike-count statistics across one run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpikeStats {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

/// Machine-readable account of one sort run (written as `summary.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    /// Detections before boundary clipping.
    pub n_detections: usize,
    /// Waveforms presented to the sorter.
    pub n_waveforms: usize,
    /// Waveforms that received a non-UNASSIGNED label.
    pub n_labeled: usize,
    /// Events per label (keyed by the label's decimal form; "-1" collects
    /// the unassigned).
    pub label_counts: BTreeMap<String, usize>,
    /// Emitted spikes per waveform presentation, or `None` with no input.
    pub spikes_per_waveform: Option<SpikeStats>,
    /// Feature-layer emission sparsity over a trailing sample of
    /// waveforms, or `None` with no input.
    pub sparsity: Option<SparsityMetrics>,
    /// Whether dictionaries were frozen (inference only).
    pub frozen: bool,
    /// Total sorting wall time, seconds (excludes I/O).
    pub wall_s: f64,
    /// Mean sorting wall time per waveform, milliseconds.
    pub wall_ms_per_waveform: f64,
}

/// Result of the sort step.
#[derive(Debug)]
pub struct SortOutput<T> {
    /// Per-waveform labeling results, in presentation order.
    pub results: Vec<LabelResult<T>>,
    /// The model after sorting (trained unless frozen).
    pub model: NssModel<T>,
    pub summary: RunSummary,
    pub labels_path: PathBuf,
    /// Written only when training was enabled.
    pub model_path: Option<PathBuf>,
}

fn spike_stats<T>(results: &[LabelResult<T>]) -> Option<SpikeStats> {
    if results.is_empty() {
        return None;
    }
    let counts: Vec<usize> = results.iter().map(|r| r.spikes_emitted).collect();
    Some(SpikeStats {
        mean: counts.iter().sum::<usize>() as f64 / counts.len() as f64,
        min: *counts.iter().min().expect("non-empty"),
        max: *counts.iter().max().expect("non-empty"),
    })
}

/// Feature-layer emission sparsity over the last `max_n` waveforms under
/// the model's current dictionaries.
pub fn model_sparsity<T: Scalar>(
    model: &mut NssModel<T>,
    waveforms: &[SpikeWaveform<T>],
    max_n: usize,
) -> Result<Option<SparsityMetrics>> {
    let tail = &waveforms[waveforms.len().saturating_sub(max_n)..];
    let mut logs = Vec::with_capacity(tail.len());
    for sw in tail {
        let normalized = match crate::network::normalize_waveform(sw) {
            Ok(n) => n,
            Err(_) => continue, // zero waveform: nothing is presented
        };
        let (_, log) = model.layer1_mut().sparse_code_logged(&normalized.vector)?;
        logs.push(log);
    }
    if logs.is_empty() {
        return Ok(None);
    }
    Ok(Some(sparsity_metrics(&logs)))
}

/// Sorts a recording end to end and writes `labels.csv`, `detections.csv`,
/// `summary.json`, `model.nss` (unless frozen), and `sort.config.json`
/// into `out_dir`.
///
/// With `model` given, sorting continues from that checkpoint (its
/// dimensions must match the extracted waveforms); otherwise a fresh
/// model is built from the config. With `freeze` set, dictionaries stay
/// fixed and waveforms are labeled by inference only.
pub fn run_sort<T: Scalar>(
    recording: &Recording<T>,
    cfg: &ExperimentConfig,
    model: Option<NssModel<T>>,
    freeze: bool,
    out_dir: &Path,
) -> Result<SortOutput<T>> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    create_dir(out_dir)?;
    let pre = preprocess(recording, &cfg.detection, cfg.detector)?;
    let mut model = match model {
        Some(m) => m,
        None => cfg.build_model(recording.channel_count())?,
    };
    if let Some(sw) = pre.waveforms.first() {
        if sw.vector.len() != model.input_dim() {
            return Err(Error::Dimension {
                context: "pretrained model vs extracted waveforms",
                expected: model.input_dim(),
                got: sw.vector.len(),
            });
        }
    }

    let start = Instant::now();
    let results = if freeze {
        let mut out = Vec::with_capacity(pre.waveforms.len());
        for sw in &pre.waveforms {
            out.push(match model.infer(sw) {
                Ok(r) => r,
                // Zero-norm waveforms are unassignable, same as in training.
                Err(Error::ZeroVector(_)) => LabelResult {
                    label: crate::network::UNASSIGNED,
                    accumulated_activation: vec![T::zero(); model.cluster_count()],
                    timestamp: sw.timestamp,
                    spikes_emitted: 0,
                },
                Err(e) => return Err(e),
            });
        }
        out
    } else {
        model.train_online(&pre.waveforms)?
    };
    let wall_s = start.elapsed().as_secs_f64();

    let mut label_counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &results {
        *label_counts.entry(r.label.to_string()).or_insert(0) += 1;
    }
    let summary = RunSummary {
        n_detections: pre.detections.len(),
        n_waveforms: results.len(),
        n_labeled: results.iter().filter(|r| r.label >= 0).count(),
        label_counts,
        spikes_per_waveform: spike_stats(&results),
        sparsity: model_sparsity(&mut model, &pre.waveforms, SPARSITY_SAMPLE)?,
        frozen: freeze,
        wall_s,
        wall_ms_per_waveform: if results.is_empty() {
            0.0
        } else {
            1e3 * wall_s / results.len() as f64
        },
    };

    let labels_path = out_dir.join("labels.csv");
    let times: Vec<f64> = results.iter().map(|r| r.timestamp).collect();
    let labels: Vec<i32> = results.iter().map(|r| r.label).collect();
    io::write_labels(&times, &labels, &labels_path)?;
    io::write_detections(&pre.detections, &out_dir.join("detections.csv"))?;
    let model_path = if freeze {
        None
    } else {
        let p = out_dir.join("model.nss");
        io::write_model(&model, &p)?;
        Some(p)
    };
    io::write_json(&summary, &out_dir.join("summary.json"))?;
    io::write_json(&cfg, &out_dir.join("sort.config.json"))?;
    Ok(SortOutput {
        results,
        model,
        summary,
        labels_path,
        model_path,
    })
}

// ----------------------------------------------------------------- eval --

/// Result of the eval step: the report plus its mean F₁.
#[derive(Debug, Clone, Serialize)]
pub struct EvalOutput {
    pub mean_f1: f64,
    pub report: MatchReport,
}

/// Scores labeled events against ground-truth trains and writes
/// `report.json`, `report_units.csv`, and `eval.config.json` into
/// `out_dir`. `n_labels` is the sorter's cluster count (labels observed
/// in the stream beyond it are rejected by the confusion accounting).
pub fn run_eval(
    gt_trains: &[SpikeTrain],
    times: &[f64],
    labels: &[i32],
    n_labels: usize,
    opts: &EvalOptions,
    out_dir: &Path,
) -> Result<EvalOutput> {
    create_dir(out_dir)?;
    let gt: Vec<Vec<f64>> = gt_trains.iter().map(|t| t.times.clone()).collect();
    let report = evaluate_sorting(
        &gt,
        times,
        labels,
        n_labels,
        opts.tol_s,
        opts.eval_from_s,
        opts.match_mode,
    )?;
    let out = EvalOutput {
        mean_f1: report.mean_f1(),
        report,
    };
    io::write_json(&out, &out_dir.join("report.json"))?;

    let units_path = out_dir.join("report_units.csv");
    let file = std::fs::File::create(&units_path)
        .map_err(|e| Error::io(units_path.display().to_string(), e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record([
        "gt_unit",
        "inferred_unit",
        "agreement",
        "true_positives",
        "false_positives",
        "false_negatives",
        "f1",
    ])
    .map_err(|e| Error::format(units_path.display().to_string(), e.to_string()))?;
    for p in &out.report.pairs {
        w.write_record([
            p.gt_unit.to_string(),
            p.inferred_unit.map(|u| u.to_string()).unwrap_or_default(),
            format!("{}", p.agreement),
            p.true_positives.to_string(),
            p.false_positives.to_string(),
            p.false_negatives.to_string(),
            format!("{}", p.f1),
        ])
        .map_err(|e| Error::format(units_path.display().to_string(), e.to_string()))?;
    }
    w.flush()
        .map_err(|e| Error::io(units_path.display().to_string(), e))?;
    io::write_json(opts, &out_dir.join("eval.config.json"))?;
    Ok(out)
}

// ------------------------------------------------------------- baseline --

/// Result of the baseline step.
#[derive(Debug)]
pub struct BaselineRunOutput<T> {
    pub output: BaselineOutput<T>,
    pub labels_path: PathBuf,
}

/// Runs the PCA + k-means reference sorter on a recording and writes
/// `labels.csv` and `baseline.config.json` into `out_dir`.
pub fn run_baseline<T: Scalar>(
    recording: &Recording<T>,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<BaselineRunOutput<T>> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    create_dir(out_dir)?;
    let pre = preprocess(recording, &cfg.detection, cfg.detector)?;
    let output = baseline_sort(&pre.waveforms, recording.channel_count(), &cfg.baseline)?;
    let labels_path = out_dir.join("labels.csv");
    io::write_labels(&output.times, &output.labels, &labels_path)?;
    io::write_json(&cfg, &out_dir.join("baseline.config.json"))?;
    Ok(BaselineRunOutput {
        output,
        labels_path,
    })
}

// ---------------------------------------------------------------- sweep --

/// Metrics from one (bit-width, seed) sweep cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub bits: BitWidth,
    pub seed: u64,
    /// Mean matched F₁ over ground-truth units, post `eval_from_s`.
    pub mean_f1: Option<f64>,
    /// Mean emitted spikes per waveform presentation over the whole run.
    pub mean_spikes_per_waveform: Option<f64>,
    pub temporal_sparsity: Option<f64>,
    pub spatial_sparsity: Option<f64>,
    pub n_waveforms: usize,
    /// Failure diagnostic; the sweep continues past failed cells.
    pub error: Option<String>,
}

/// One aggregated sweep row (per bit width, averaged over seeds).
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub bits: BitWidth,
    pub n_seeds_ok: usize,
    pub mean_f1: f64,
    pub mean_spikes_per_waveform: f64,
    pub temporal_sparsity: f64,
    pub spatial_sparsity: f64,
}

/// Runs generate → sort → evaluate fully in memory for one configuration.
fn run_sweep_cell<T: Scalar>(cfg: &ExperimentConfig) -> Result<(f64, f64, SparsityMetrics, usize)> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    let (recording, gt) = generate_recording::<T>(&cfg.synth)?;
    let pre = preprocess(&recording, &cfg.detection, cfg.detector)?;
    let mut model = cfg.build_model::<T>(recording.channel_count())?;
    let results = model.train_online(&pre.waveforms)?;
    let times: Vec<f64> = results.iter().map(|r| r.timestamp).collect();
    let labels: Vec<i32> = results.iter().map(|r| r.label).collect();
    let report = evaluate_sorting(
        &gt.spike_trains,
        &times,
        &labels,
        model.cluster_count(),
        cfg.eval.tol_s,
        cfg.eval.eval_from_s,
        cfg.eval.match_mode,
    )?;
    let spikes = spike_stats(&results).map(|s| s.mean).unwrap_or(0.0);
    let sparsity = model_sparsity(&mut model, &pre.waveforms, SPARSITY_SAMPLE)?
        .unwrap_or(SparsityMetrics {
            temporal: f64::NAN,
            spatial: f64::NAN,
        });
    Ok((report.mean_f1(), spikes, sparsity, results.len()))
}

/// Result of the sweep step.
#[derive(Debug)]
pub struct SweepOutput {
    pub cells: Vec<SweepCell>,
    pub rows: Vec<SweepRow>,
    pub rows_path: PathBuf,
    pub cells_path: PathBuf,
}

/// Runs the full pipeline for every (bit-width, seed) pair and aggregates
/// per bit width. Cells run concurrently (each is seed-isolated); a
/// failing cell is recorded in its row and does not stop the sweep.
/// Writes `sweep.csv` (aggregated), `sweep_cells.csv`, and
/// `sweep.config.json` into `out_dir`.
pub fn run_sweep<T: Scalar>(
    cfg: &ExperimentConfig,
    bits_list: &[BitWidth],
    seeds: &[u64],
    out_dir: &Path,
) -> Result<SweepOutput> {
    if bits_list.is_empty() || seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one bit width and one seed".into()));
    }
    create_dir(out_dir)?;
    let jobs: Vec<(BitWidth, u64)> = bits_list
        .iter()
        .flat_map(|&b| seeds.iter().map(move |&s| (b, s)))
        .collect();
    let n_workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(jobs.len());
    let next = Mutex::new(0usize);
    let cells = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..n_workers {
            scope.spawn(|| loop {
                let i = {
                    let mut guard = next.lock().expect("sweep index lock");
                    let i = *guard;
                    if i >= jobs.len() {
                        return;
                    }
                    *guard += 1;
                    i
                };
                let (bits, seed) = jobs[i];
                let mut cell_cfg = cfg.clone();
                cell_cfg.seed = seed;
                cell_cfg.lca1.bit_width = bits;
                cell_cfg.lca2.bit_width = bits;
                let cell = match run_sweep_cell::<T>(&cell_cfg) {
                    Ok((f1, spikes, sparsity, n)) => SweepCell {
                        bits,
                        seed,
                        mean_f1: Some(f1),
                        mean_spikes_per_waveform: Some(spikes),
                        temporal_sparsity: Some(sparsity.temporal),
                        spatial_sparsity: Some(sparsity.spatial),
                        n_waveforms: n,
                        error: None,
                    },
                    Err(e) => SweepCell {
                        bits,
                        seed,
                        mean_f1: None,
                        mean_spikes_per_waveform: None,
                        temporal_sparsity: None,
                        spatial_sparsity: None,
                        n_waveforms: 0,
                        error: Some(e.to_string()),
                    },
                };
                cells.lock().expect("sweep cell lock")[i] = Some(cell);
            });
        }
    });
    let cells: Vec<SweepCell> = cells
        .into_inner()
        .expect("sweep cell lock")
        .into_iter()
        .map(|c| c.expect("every sweep cell visited"))
        .collect();

    let mut rows = Vec::with_capacity(bits_list.len());
    for &bits in bits_list {
        let ok: Vec<&SweepCell> = cells
            .iter()
            .filter(|c| c.bits == bits && c.error.is_none())
            .collect();
        if ok.is_empty() {
            continue;
        }
        let mean = |f: &dyn Fn(&SweepCell) -> f64| {
            ok.iter().map(|c| f(c)).sum::<f64>() / ok.len() as f64
        };
        rows.push(SweepRow {
            bits,
            n_seeds_ok: ok.len(),
            mean_f1: mean(&|c| c.mean_f1.expect("ok cell")),
            mean_spikes_per_waveform: mean(&|c| c.mean_spikes_per_waveform.expect("ok cell")),
            temporal_sparsity: mean(&|c| c.temporal_sparsity.expect("ok cell")),
            spatial_sparsity: mean(&|c| c.spatial_sparsity.expect("ok cell")),
        });
    }

    let bits_text = |b: BitWidth| match b {
        BitWidth::Bits(n) => n.to_string(),
        BitWidth::Continuous => "continuous".to_string(),
    };
    let opt_text = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();

    let rows_path = out_dir.join("sweep.csv");
    {
        let file = std::fs::File::create(&rows_path)
            .map_err(|e| Error::io(rows_path.display().to_string(), e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record([
            "bits",
            "n_seeds_ok",
            "mean_f1",
            "mean_spikes_per_waveform",
            "temporal_sparsity",
            "spatial_sparsity",
        ])
        .map_err(|e| Error::format(rows_path.display().to_string(), e.to_string()))?;
        for r in &rows {
            w.write_record([
                bits_text(r.bits),
                r.n_seeds_ok.to_string(),
                format!("{}", r.mean_f1),
                format!("{}", r.mean_spikes_per_waveform),
                format!("{}", r.temporal_sparsity),
                format!("{}", r.spatial_sparsity),
            ])
            .map_err(|e| Error::format(rows_path.display().to_string(), e.to_string()))?;
        }
        w.flush()
            .map_err(|e| Error::io(rows_path.display().to_string(), e))?;
    }

    let cells_path = out_dir.join("sweep_cells.csv");
    {
        let file = std::fs::File::create(&cells_path)
            .map_err(|e| Error::io(cells_path.display().to_string(), e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record([
            "bits",
            "seed",
            "mean_f1",
            "mean_spikes_per_waveform",
            "temporal_sparsity",
            "spatial_sparsity",
            "n_waveforms",
            "error",
        ])
        .map_err(|e| Error::format(cells_path.display().to_string(), e.to_string()))?;
        for c in &cells {
            w.write_record([
                bits_text(c.bits),
                c.seed.to_string(),
                opt_text(c.mean_f1),
                opt_text(c.mean_spikes_per_waveform),
                opt_text(c.temporal_sparsity),
                opt_text(c.spatial_sparsity),
                c.n_waveforms.to_string(),
                c.error.clone().unwrap_or_default(),
            ])
            .map_err(|e| Error::format(cells_path.display().to_string(), e.to_string()))?;
        }
        w.flush()
            .map_err(|e| Error::io(cells_path.display().to_string(), e))?;
    }
    io::write_json(&cfg.resolved(), &out_dir.join("sweep.config.json"))?;
    Ok(SweepOutput {
        cells,
        rows,
        rows_path,
        cells_path,
    })
}
