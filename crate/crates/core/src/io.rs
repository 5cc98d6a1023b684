//! File formats for experiment artifacts.
//!
//! * Recordings: raw little-endian `f32` samples, channel-interleaved,
//!   next to a `.meta.json` sidecar describing rate, channel count, and
//!   length.
//! * Spike trains (ground truth): CSV `unit_id,time_s`.
//! * Detected events: CSV `time_s,peak_channel`.
//! * Sorter output: CSV `time_s,label`.
//! * Model checkpoints: a single JSON document holding both dictionaries
//!   and every configuration section. JSON round-trips `f64` exactly, so
//!   a saved model reproduces its in-memory behavior bit for bit.
//!
//! Every error is annotated with the path (and, for CSV, the line) it
//! occurred on.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::SpikeTrain;
use crate::lca::Dictionary;
use crate::lca::LcaConfig;
use crate::learn::LearnConfig;
use crate::network::NssModel;
use crate::scalar::Scalar;
use crate::signal::{Detection, Recording};

/// Format tag in recording sidecars.
pub const RECORDING_FORMAT: &str = "nss-recording-v1";

/// Format tag in model checkpoints.
pub const MODEL_FORMAT: &str = "nss-model-v1";

fn display(path: &Path) -> String {
    path.display().to_string()
}

// ------------------------------------------------------------ JSON core --

/// Writes any serializable value as pretty-printed JSON (stable field
/// order, trailing newline).
pub fn write_json<S: Serialize>(value: &S, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::format(display(path), format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(display(path), e))
}

/// Reads a JSON value, reporting parse errors with line and column.
pub fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(display(path), e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(display(path), e.to_string()))
}

// ----------------------------------------------------------- recordings --

/// Sidecar schema for raw recordings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordingSidecar {
    /// Always [`RECORDING_FORMAT`].
    pub format: String,
    /// Sampling rate, Hz.
    pub sample_rate_hz: f64,
    /// Number of channels interleaved in the raw file.
    pub n_channels: usize,
    /// Samples per channel.
    pub n_samples: usize,
    /// Sample encoding; only `"f32le"` is defined.
    pub dtype: String,
    /// Physical unit of the samples.
    pub units: String,
}

/// The `(raw, sidecar)` path pair derived from a base path: `base.raw`
/// and `base.meta.json`.
pub fn recording_paths(base: &Path) -> (PathBuf, PathBuf) {
    (base.with_extension("raw"), base.with_extension("meta.json"))
}

/// Writes a recording as interleaved `f32` plus its sidecar. Returns the
/// `(raw, sidecar)` paths written.
pub fn write_recording<T: Scalar>(rec: &Recording<T>, base: &Path) -> Result<(PathBuf, PathBuf)> {
    let (raw_path, sidecar_path) = recording_paths(base);
    let file = File::create(&raw_path).map_err(|e| Error::io(display(&raw_path), e))?;
    let mut w = BufWriter::new(file);
    for s in 0..rec.sample_count() {
        for c in 0..rec.channel_count() {
            let v = rec.channel(c)[s].to_f64_lossy() as f32;
            w.write_all(&v.to_le_bytes())
                .map_err(|e| Error::io(display(&raw_path), e))?;
        }
    }
    w.flush().map_err(|e| Error::io(display(&raw_path), e))?;
    let sidecar = RecordingSidecar {
        format: RECORDING_FORMAT.to_string(),
        sample_rate_hz: rec.sample_rate(),
        n_channels: rec.channel_count(),
        n_samples: rec.sample_count(),
        dtype: "f32le".to_string(),
        units: "uV".to_string(),
    };
    write_json(&sidecar, &sidecar_path)?;
    Ok((raw_path, sidecar_path))
}

/// Reads a recording written by [`write_recording`], validating the
/// sidecar and the raw file length.
pub fn read_recording<T: Scalar>(base: &Path) -> Result<Recording<T>> {
    let (raw_path, sidecar_path) = recording_paths(base);
    let sidecar: RecordingSidecar = read_json(&sidecar_path)?;
    if sidecar.format != RECORDING_FORMAT {
        return Err(Error::format(
            display(&sidecar_path),
            format!("unknown format {:?}, expected {RECORDING_FORMAT:?}", sidecar.format),
        ));
    }
    if sidecar.dtype != "f32le" {
        return Err(Error::format(
            display(&sidecar_path),
            format!("unsupported dtype {:?}", sidecar.dtype),
        ));
    }
    let file = File::open(&raw_path).map_err(|e| Error::io(display(&raw_path), e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(display(&raw_path), e))?;
    let expected = sidecar.n_samples * sidecar.n_channels * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            display(&raw_path),
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let mut channels = vec![Vec::with_capacity(sidecar.n_samples); sidecar.n_channels];
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("chunks_exact yields 4 bytes"));
        channels[i % sidecar.n_channels].push(T::from_f64_lossy(v as f64));
    }
    Recording::new(channels, sidecar.sample_rate_hz)
}

// ------------------------------------------------------------------ CSV --

/// Shortest-round-trip decimal text for a float (how all CSV numbers are
/// rendered; parsing it back yields the identical `f64`).
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn csv_io_err(path: &Path, e: csv::Error) -> Error {
    Error::format(display(path), e.to_string())
}

/// Writes ground-truth (or any) spike trains as `unit_id,time_s` rows,
/// one block per train in the given order.
pub fn write_spike_trains(trains: &[SpikeTrain], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(display(path), e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["unit_id", "time_s"])
        .map_err(|e| csv_io_err(path, e))?;
    for train in trains {
        for &t in &train.times {
            w.write_record([train.unit_id.to_string(), fmt_f64(t)])
                .map_err(|e| csv_io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(display(path), e))
}

/// Reads `unit_id,time_s` rows back into spike trains, one per distinct
/// unit id, ordered by id. Within each unit, times must be strictly
/// increasing (as written).
pub fn read_spike_trains(path: &Path) -> Result<Vec<SpikeTrain>> {
    let file = File::open(path).map_err(|e| Error::io(display(path), e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    check_headers(&mut r, path, &["unit_id", "time_s"])?;
    let mut by_unit: std::collections::BTreeMap<i32, Vec<f64>> = Default::default();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_io_err(path, e))?;
        let line = i + 2; // 1-based, after the header
        let unit: i32 = parse_field(&record, 0, path, line)?;
        let t: f64 = parse_field(&record, 1, path, line)?;
        by_unit.entry(unit).or_default().push(t);
    }
    by_unit
        .into_iter()
        .map(|(unit, times)| SpikeTrain::new(unit, times))
        .collect()
}

/// Writes sorter output as `time_s,label` rows.
pub fn write_labels(times: &[f64], labels: &[i32], path: &Path) -> Result<()> {
    if times.len() != labels.len() {
        return Err(Error::Dimension {
            context: "write_labels",
            expected: times.len(),
            got: labels.len(),
        });
    }
    let file = File::create(path).map_err(|e| Error::io(display(path), e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["time_s", "label"])
        .map_err(|e| csv_io_err(path, e))?;
    for (&t, &l) in times.iter().zip(labels) {
        w.write_record([fmt_f64(t), l.to_string()])
            .map_err(|e| csv_io_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(display(path), e))
}

/// Writes detected events as `time_s,peak_channel` rows.
pub fn write_detections(detections: &[Detection], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(display(path), e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["time_s", "peak_channel"])
        .map_err(|e| csv_io_err(path, e))?;
    for d in detections {
        w.write_record([fmt_f64(d.time_s), d.peak_channel.to_string()])
            .map_err(|e| csv_io_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(display(path), e))
}

/// Reads `time_s,peak_channel` rows back (sample indices are reconstructed
/// from the times at the given sample rate).
pub fn read_detections(path: &Path, sample_rate: f64) -> Result<Vec<Detection>> {
    let file = File::open(path).map_err(|e| Error::io(display(path), e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    check_headers(&mut r, path, &["time_s", "peak_channel"])?;
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_io_err(path, e))?;
        let line = i + 2;
        let time_s: f64 = parse_field(&record, 0, path, line)?;
        let peak_channel: usize = parse_field(&record, 1, path, line)?;
        out.push(Detection {
            sample: (time_s * sample_rate).round() as usize,
            time_s,
            peak_channel,
        });
    }
    Ok(out)
}

/// Reads `time_s,label` rows back into parallel vectors.
pub fn read_labels(path: &Path) -> Result<(Vec<f64>, Vec<i32>)> {
    let file = File::open(path).map_err(|e| Error::io(display(path), e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    check_headers(&mut r, path, &["time_s", "label"])?;
    let mut times = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_io_err(path, e))?;
        let line = i + 2;
        times.push(parse_field(&record, 0, path, line)?);
        labels.push(parse_field(&record, 1, path, line)?);
    }
    Ok((times, labels))
}

fn check_headers<R: Read>(r: &mut csv::Reader<R>, path: &Path, expected: &[&str]) -> Result<()> {
    let headers = r.headers().map_err(|e| csv_io_err(path, e))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::format(
            display(path),
            format!("line 1: expected header {expected:?}, got {got:?}"),
        ));
    }
    Ok(())
}

fn parse_field<F: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    path: &Path,
    line: usize,
) -> Result<F>
where
    F::Err: std::fmt::Display,
{
    let raw = record.get(idx).ok_or_else(|| {
        Error::format(display(path), format!("line {line}: missing column {idx}"))
    })?;
    raw.trim().parse().map_err(|e| {
        Error::format(display(path), format!("line {line}: bad value {raw:?}: {e}"))
    })
}

// ---------------------------------------------------------- checkpoints --

/// One dictionary in a checkpoint: column-major `f64` data.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DictionarySection {
    input_dim: usize,
    atom_count: usize,
    data: Vec<f64>,
}

impl DictionarySection {
    fn from_dict<T: Scalar>(d: &Dictionary<T>) -> Self {
        Self {
            input_dim: d.input_dim(),
            atom_count: d.atom_count(),
            data: d.as_slice().iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }

    fn into_dict<T: Scalar>(self) -> Result<Dictionary<T>> {
        Dictionary::from_column_major(
            self.input_dim,
            self.atom_count,
            self.data.into_iter().map(T::from_f64_lossy).collect(),
        )
    }
}

/// On-disk model checkpoint: both dictionaries plus every configuration
/// needed to rebuild the exact in-memory model.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    seed: u64,
    lca1: LcaConfig,
    lca2: LcaConfig,
    learn: LearnConfig,
    dict1: DictionarySection,
    dict2: DictionarySection,
}

/// Saves a model checkpoint as JSON.
pub fn write_model<T: Scalar>(model: &NssModel<T>, path: &Path) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        seed: model.seed(),
        lca1: model.layer1().config().clone(),
        lca2: model.layer2().config().clone(),
        learn: model.learn_cfg().clone(),
        dict1: DictionarySection::from_dict(model.layer1().dict()),
        dict2: DictionarySection::from_dict(model.layer2().dict()),
    };
    write_json(&file, path)
}

/// Loads a model checkpoint, verifying the format tag, dictionary shapes,
/// and unit column norms.
pub fn read_model<T: Scalar>(path: &Path) -> Result<NssModel<T>> {
    let file: ModelFile = read_json(path)?;
    if file.format != MODEL_FORMAT {
        return Err(Error::format(
            display(path),
            format!("unknown format {:?}, expected {MODEL_FORMAT:?}", file.format),
        ));
    }
    NssModel::from_parts(
        file.dict1.into_dict()?,
        file.lca1,
        file.dict2.into_dict()?,
        file.lca2,
        file.learn,
        file.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SpikeWaveform;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().expect("create temp dir")
    }

    #[test]
    fn recording_round_trip_exact_for_f32_data() {
        let dir = tmp();
        let base = dir.path().join("rec");
        // Values chosen to be exactly representable in f32.
        let ch0: Vec<f64> = vec![0.5, -1.25, 3.0, 0.0];
        let ch1: Vec<f64> = vec![7.5, 2.0, -0.125, 4.0];
        let rec = Recording::new(vec![ch0.clone(), ch1.clone()], 10_000.0).unwrap();
        write_recording(&rec, &base).unwrap();
        let back: Recording<f64> = read_recording(&base).unwrap();
        assert_eq!(back.sample_rate(), 10_000.0);
        assert_eq!(back.channel(0), &ch0[..]);
        assert_eq!(back.channel(1), &ch1[..]);
    }

    #[test]
    fn recording_write_is_deterministic() {
        let dir = tmp();
        let rec =
            Recording::<f64>::new(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], 1000.0).unwrap();
        let (raw_a, _) = write_recording(&rec, &dir.path().join("a")).unwrap();
        let (raw_b, _) = write_recording(&rec, &dir.path().join("b")).unwrap();
        assert_eq!(std::fs::read(raw_a).unwrap(), std::fs::read(raw_b).unwrap());
    }

    #[test]
    fn recording_rejects_truncated_raw() {
        let dir = tmp();
        let base = dir.path().join("rec");
        let rec = Recording::<f64>::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]], 1000.0).unwrap();
        let (raw, _) = write_recording(&rec, &base).unwrap();
        let bytes = std::fs::read(&raw).unwrap();
        std::fs::write(&raw, &bytes[..bytes.len() - 4]).unwrap();
        let err = read_recording::<f64>(&base).unwrap_err();
        assert!(err.to_string().contains("bytes"), "{err}");
    }

    #[test]
    fn recording_rejects_bad_sidecar_format() {
        let dir = tmp();
        let base = dir.path().join("rec");
        let rec = Recording::<f64>::new(vec![vec![1.0, 2.0]], 1000.0).unwrap();
        write_recording(&rec, &base).unwrap();
        let (_, sidecar) = recording_paths(&base);
        let text = std::fs::read_to_string(&sidecar)
            .unwrap()
            .replace(RECORDING_FORMAT, "something-else");
        std::fs::write(&sidecar, text).unwrap();
        let err = read_recording::<f64>(&base).unwrap_err();
        assert!(err.to_string().contains("unknown format"), "{err}");
    }

    #[test]
    fn spike_trains_round_trip() {
        let dir = tmp();
        let path = dir.path().join("gt.csv");
        let trains = vec![
            SpikeTrain::new(0, vec![0.1, 0.30000000000000004, 2.5]).unwrap(),
            SpikeTrain::new(3, vec![0.05, 1.0]).unwrap(),
        ];
        write_spike_trains(&trains, &path).unwrap();
        let back = read_spike_trains(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].unit_id, 0);
        assert_eq!(back[0].times, trains[0].times);
        assert_eq!(back[1].unit_id, 3);
        assert_eq!(back[1].times, trains[1].times);
    }

    #[test]
    fn labels_round_trip_and_header_check() {
        let dir = tmp();
        let path = dir.path().join("labels.csv");
        let times = vec![0.25, 1.125, 2.0625];
        let labels = vec![3, -1, 0];
        write_labels(&times, &labels, &path).unwrap();
        let (t, l) = read_labels(&path).unwrap();
        assert_eq!(t, times);
        assert_eq!(l, labels);

        std::fs::write(&path, "time,unit\n0.5,1\n").unwrap();
        let err = read_labels(&path).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn csv_parse_error_names_the_line() {
        let dir = tmp();
        let path = dir.path().join("labels.csv");
        std::fs::write(&path, "time_s,label\n0.5,1\nnot-a-number,2\n").unwrap();
        let err = read_labels(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn detections_round_trip() {
        let dir = tmp();
        let path = dir.path().join("detections.csv");
        let fs = 10_000.0;
        let dets = vec![
            Detection {
                sample: 100,
                time_s: 0.01,
                peak_channel: 2,
            },
            Detection {
                sample: 12_345,
                time_s: 1.2345,
                peak_channel: 0,
            },
        ];
        write_detections(&dets, &path).unwrap();
        let back = read_detections(&path, fs).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in back.iter().zip(&dets) {
            assert_eq!(a.sample, b.sample);
            assert_eq!(a.time_s, b.time_s);
            assert_eq!(a.peak_channel, b.peak_channel);
        }
    }

    #[test]
    fn float_text_round_trips_exactly() {
        for &v in &[0.1, 1.0 / 3.0, 6.02e23, -0.0, 5e-324] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn model_round_trip_preserves_behavior() {
        use crate::lca::LcaConfig;
        use crate::learn::LearnConfig;
        let dir = tmp();
        let path = dir.path().join("model.nss");
        let cfg = LcaConfig {
            n_steps: 40,
            ..LcaConfig::default()
        };
        let mut model =
            NssModel::<f64>::new(12, 8, 3, cfg.clone(), cfg, LearnConfig::default(), 77).unwrap();
        write_model(&model, &path).unwrap();
        let mut back: NssModel<f64> = read_model(&path).unwrap();
        assert_eq!(back.seed(), 77);
        assert_eq!(back.input_dim(), 12);
        assert_eq!(back.cluster_count(), 3);
        let sw = SpikeWaveform {
            vector: (0..12).map(|i| ((i * i) % 7) as f64 - 3.0).collect(),
            timestamp: 1.0,
            peak_channel: 0,
        };
        let a = model.infer(&sw).unwrap();
        let b = back.infer(&sw).unwrap();
        assert_eq!(a.label, b.label);
        assert_eq!(a.accumulated_activation, b.accumulated_activation);
        assert_eq!(a.spikes_emitted, b.spikes_emitted);
    }

    #[test]
    fn model_rejects_wrong_format_tag() {
        let dir = tmp();
        let path = dir.path().join("model.nss");
        std::fs::write(&path, "{\"format\":\"other\"}").unwrap();
        let err = read_model::<f64>(&path).unwrap_err();
        // Either the tag check or the schema check may fire first; both
        // must name the file.
        assert!(err.to_string().contains("model.nss"), "{err}");
    }

    #[test]
    fn missing_file_error_names_path() {
        let err = read_labels(Path::new("/nonexistent/labels.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/labels.csv"), "{err}");
    }
}
