//! Ground-truth-labeled synthetic tetrode recordings: parametric biphasic
//! templates placed over a 2×2 pad layout with inverse-distance channel
//! attenuation, Poisson-with-refractory spike trains, per-channel Gaussian
//! noise, and optional linear amplitude drift.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Scalar;
use crate::signal::{Recording, SosFilter};

/// Tetrode pad centers, µm: a 2×2 grid with 20 µm pitch at z = 0.
pub const PAD_POSITIONS: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [20.0, 0.0, 0.0],
    [0.0, 20.0, 0.0],
    [20.0, 20.0, 0.0],
];

/// Linear amplitude decay of one unit's template over the recording.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DriftConfig {
    /// Which unit drifts.
    pub unit_id: usize,
    /// Fraction of amplitude lost by the end of the recording; the scale at
    /// time t is 1 − fraction·(t / duration).
    pub amplitude_decay_fraction: f64,
}

/// Generator parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_units: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Per-channel noise σ drawn uniformly from this range, µV.
    pub noise_sigma_range: [f64; 2],
    /// Per-unit firing rate drawn uniformly from this range, Hz.
    pub rate_range: [f64; 2],
    /// Absolute refractory period, ms.
    pub refractory_ms: f64,
    /// Target SNRs spread evenly across units over this range (±5% jitter).
    pub snr_range: [f64; 2],
    /// Optional amplitude drift for one unit.
    pub drift: Option<DriftConfig>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_units: 5,
            duration_s: 240.0,
            sample_rate_hz: 10_000.0,
            noise_sigma_range: [8.0, 12.0],
            rate_range: [6.0, 10.0],
            refractory_ms: 2.0,
            snr_range: [3.0, 13.0],
            drift: None,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Checks parameter ranges. A zero firing rate is allowed (it yields an
    /// empty train), but negative rates and degenerate ranges are not.
    pub fn validate(&self) -> Result<()> {
        if self.n_units == 0 {
            return Err(Error::Config("n_units must be at least 1".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Config("duration_s must be positive".into()));
        }
        if !(self.sample_rate_hz >= 6001.0) {
            return Err(Error::Config(
                "sample_rate_hz must exceed twice the 3 kHz screening band".into(),
            ));
        }
        for (name, r) in [
            ("noise_sigma_range", self.noise_sigma_range),
            ("rate_range", self.rate_range),
            ("snr_range", self.snr_range),
        ] {
            if !(r[0] >= 0.0 && r[1] >= r[0]) {
                return Err(Error::Config(format!("{name} must satisfy 0 <= lo <= hi")));
            }
        }
        if !(self.refractory_ms > 0.0) {
            return Err(Error::Config("refractory_ms must be positive".into()));
        }
        if let Some(d) = &self.drift {
            if d.unit_id >= self.n_units {
                return Err(Error::Config(format!(
                    "drift unit {} out of range (n_units {})",
                    d.unit_id, self.n_units
                )));
            }
            if !(0.0..=1.0).contains(&d.amplitude_decay_fraction) {
                return Err(Error::Config(
                    "amplitude_decay_fraction must be in [0, 1]".into(),
                ));
            }
        }
        // A refractory period must leave room for the highest rate:
        // rate·refractory < 1 or the dead-time-corrected rate is undefined.
        if self.rate_range[1] * self.refractory_ms / 1000.0 >= 1.0 {
            return Err(Error::Config(
                "rate_range upper end incompatible with refractory period".into(),
            ));
        }
        Ok(())
    }

    /// Template/detection window length in samples (3 ms).
    pub fn window_samples(&self) -> usize {
        (0.003 * self.sample_rate_hz).round() as usize
    }
}

/// One unit's spatial footprint: per-channel waveform over the detection
/// window, in µV.
#[derive(Debug, Clone)]
pub struct UnitTemplate<T> {
    /// `[n_channels][window_samples]`.
    pub waveform: Vec<Vec<T>>,
    /// max |amplitude| across channels and samples, µV.
    pub peak_amplitude: T,
}

/// Everything needed to score a sorter on a generated recording.
#[derive(Debug, Clone)]
pub struct GroundTruth<T> {
    /// Sorted spike times per unit, seconds.
    pub spike_trains: Vec<Vec<f64>>,
    pub templates: Vec<UnitTemplate<T>>,
    /// Peak amplitude / mean noise σ, per unit.
    pub snrs: Vec<f64>,
    /// The per-channel noise σ actually drawn, µV.
    pub noise_sigmas: Vec<f64>,
}

impl<T: Scalar> GroundTruth<T> {
    /// All spike times across units, sorted.
    pub fn merged_times(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.spike_trains.iter().flatten().copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all
    }

    /// Pairwise cosine similarities between flattened templates.
    pub fn pairwise_template_cosines(&self) -> Vec<Vec<f64>> {
        let flat: Vec<Vec<f64>> = self
            .templates
            .iter()
            .map(|t| {
                t.waveform
                    .iter()
                    .flatten()
                    .map(|&v| v.to_f64_lossy())
                    .collect()
            })
            .collect();
        let n = flat.len();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = flat[i].iter().zip(&flat[j]).map(|(a, b)| a * b).sum();
                let ni: f64 = flat[i].iter().map(|v| v * v).sum::<f64>().sqrt();
                let nj: f64 = flat[j].iter().map(|v| v * v).sum::<f64>().sqrt();
                out[i][j] = dot / (ni * nj);
            }
        }
        out
    }
}

/// Candidate acceptance thresholds for template rejection sampling.
const MIN_CHANNEL_CONTRAST: f64 = 2.0;
const MAX_TEMPLATE_COSINE: f64 = 0.50;
const MIN_PEAK_DOMINANCE: f64 = 1.35;
const MAX_TRIES: usize = 1000;

fn uniform<R: Rng>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Biphasic shape (difference of two Gaussians) sampled on a 3× grid and
/// re-windowed at its absolute peak, so the peak sits exactly at the window
/// center. Returns the shape (peak magnitude 1) and the unit-norm
/// band-passed shape used for similarity screening, or `None` when the
/// candidate fails centering or its filtered peak is not dominant enough
/// for alignment to survive noise.
fn biphasic_candidate<R: Rng>(
    n: usize,
    fs: f64,
    filter: &SosFilter<f64>,
    rng: &mut R,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n3 = 3 * n;
    let tp = (n3 / 2) as f64 / fs * 1000.0;
    let s1 = 0.18 + 0.14 * uniform(rng);
    let s2 = 0.25 + 0.20 * uniform(rng);
    let delta = 0.40 + 0.30 * uniform(rng);
    let k = 0.35 + 0.20 * uniform(rng);
    let mut s: Vec<f64> = (0..n3)
        .map(|i| {
            let t = i as f64 / fs * 1000.0;
            (-(t - tp) * (t - tp) / (2.0 * s1 * s1)).exp()
                - k * (-(t - tp - delta) * (t - tp - delta) / (2.0 * s2 * s2)).exp()
        })
        .collect();
    let pol = if uniform(rng) < 0.5 { -1.0 } else { 1.0 };
    let peak = s.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    for v in s.iter_mut() {
        *v = pol * *v / peak;
    }
    let pk = argmax_abs(&s);
    if pk < n / 2 || pk - n / 2 + n > n3 {
        return None;
    }
    let w: Vec<f64> = s[pk - n / 2..pk - n / 2 + n].to_vec();
    if argmax_abs(&w) != n / 2 {
        return None;
    }

    // Band-pass the zero-padded shape and require the filtered peak to
    // dominate everything outside its immediate neighborhood.
    let mut padded = vec![0.0; n3];
    padded[n..2 * n].copy_from_slice(&w);
    let f = filter.apply(&padded);
    let j = argmax_abs(&f);
    let fj = f[j].abs();
    let mut rest = 0.0f64;
    for (i, &v) in f.iter().enumerate() {
        if i + 2 < j || i > j + 2 {
            rest = rest.max(v.abs());
        }
    }
    if fj < MIN_PEAK_DOMINANCE * rest {
        return None;
    }
    if j < n / 2 || j - n / 2 + n > n3 {
        return None;
    }
    let mut fsh: Vec<f64> = f[j - n / 2..j - n / 2 + n].to_vec();
    let norm = fsh.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in fsh.iter_mut() {
        *v /= norm;
    }
    Some((w, fsh))
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Random soma position near a given pad: ±7 µm laterally, 5–12 µm deep.
fn random_position<R: Rng>(pad: usize, rng: &mut R) -> [f64; 3] {
    let c = PAD_POSITIONS[pad];
    [
        c[0] - 7.0 + 14.0 * uniform(rng),
        c[1] - 7.0 + 14.0 * uniform(rng),
        5.0 + 7.0 * uniform(rng),
    ]
}

/// Inverse-distance attenuation from a position to the four pads, scaled so
/// the strongest channel is 1.
pub(crate) fn attenuation(pos: [f64; 3]) -> [f64; 4] {
    let mut att = [0.0; 4];
    for (a, pad) in att.iter_mut().zip(PAD_POSITIONS.iter()) {
        let d = ((pad[0] - pos[0]).powi(2) + (pad[1] - pos[1]).powi(2) + (pad[2] - pos[2]).powi(2))
            .sqrt();
        *a = 1.0 / d;
    }
    let max = att.iter().fold(0.0f64, |m, &v| m.max(v));
    for a in att.iter_mut() {
        *a /= max;
    }
    att
}

/// Internal template draw: shape, channel attenuation, and the flattened
/// unit-norm band-passed template used for pairwise screening.
struct TemplateDraw {
    shape: Vec<f64>,
    att: [f64; 4],
    filtered_flat: Vec<f64>,
}

/// Rejection-samples `n_units` templates. Each unit is anchored near pad
/// `i mod 4` (spreading units over the array); a candidate is kept when its
/// band-passed template's worst-case signed cosine against all previously
/// accepted templates is ≤ 0.5, otherwise sampling continues and the best
/// candidate seen is used as a fallback. Amplitudes follow SNR targets
/// spread across `snr_range` with ±5% jitter.
fn make_template_draws<R: Rng>(
    n_units: usize,
    n: usize,
    fs: f64,
    snr_range: [f64; 2],
    rng: &mut R,
) -> Result<(Vec<TemplateDraw>, Vec<f64>)> {
    let filter = SosFilter::<f64>::butterworth_bandpass(3, 300.0, 3000.0, fs)?;
    let mut snrs = Vec::with_capacity(n_units);
    let span = snr_range[1] - snr_range[0];
    let denom = if n_units > 1 { (n_units - 1) as f64 } else { 1.0 };
    for i in 0..n_units {
        let base = snr_range[0] + span * i as f64 / denom;
        snrs.push(base * (1.0 + 0.05 * (uniform(rng) * 2.0 - 1.0)));
    }

    let mut draws: Vec<TemplateDraw> = Vec::with_capacity(n_units);
    for i in 0..n_units {
        let mut best: Option<(f64, TemplateDraw)> = None;
        for _ in 0..MAX_TRIES {
            let (shape, fsh) = loop {
                if let Some(c) = biphasic_candidate(n, fs, &filter, rng) {
                    break c;
                }
            };
            let mut att = [0.0; 4];
            for _ in 0..MAX_TRIES {
                att = attenuation(random_position(i % 4, rng));
                let min = att.iter().fold(f64::INFINITY, |m, &v| m.min(v));
                if 1.0 / min >= MIN_CHANNEL_CONTRAST {
                    break;
                }
            }
            let mut ft = Vec::with_capacity(4 * n);
            for &a in &att {
                ft.extend(fsh.iter().map(|&v| a * v));
            }
            let norm = ft.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in ft.iter_mut() {
                *v /= norm;
            }
            let worst = draws
                .iter()
                .map(|d| {
                    d.filtered_flat
                        .iter()
                        .zip(&ft)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
                .fold(-1.0f64, f64::max);
            let candidate = TemplateDraw {
                shape,
                att,
                filtered_flat: ft,
            };
            let better = best.as_ref().map_or(true, |(w, _)| worst < *w);
            if better {
                best = Some((worst, candidate));
            }
            if worst <= MAX_TEMPLATE_COSINE {
                break;
            }
        }
        let (_, draw) = best.expect("at least one candidate drawn");
        draws.push(draw);
    }
    Ok((draws, snrs))
}

/// Deterministic templates for a config (exposed for inspection; the same
/// draws happen inside [`generate_recording`]).
pub fn make_templates<T: Scalar>(cfg: &SynthConfig) -> Result<Vec<UnitTemplate<T>>> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, "synth");
    let mut sigma_sum = 0.0;
    for _ in 0..4 {
        sigma_sum +=
            cfg.noise_sigma_range[0] + (cfg.noise_sigma_range[1] - cfg.noise_sigma_range[0]) * uniform(&mut rng);
    }
    let mean_sigma = sigma_sum / 4.0;
    let (draws, snrs) = make_template_draws(
        cfg.n_units,
        cfg.window_samples(),
        cfg.sample_rate_hz,
        cfg.snr_range,
        &mut rng,
    )?;
    Ok(assemble_templates(&draws, &snrs, mean_sigma))
}

/// Scales shapes onto channels: template = attenuation ⊗ shape × SNR × σ̄.
/// A zero mean σ (noiseless configs) falls back to a 1 µV reference so
/// templates stay nonzero.
fn assemble_templates<T: Scalar>(
    draws: &[TemplateDraw],
    snrs: &[f64],
    mean_sigma: f64,
) -> Vec<UnitTemplate<T>> {
    let amp_ref = if mean_sigma > 0.0 { mean_sigma } else { 1.0 };
    draws
        .iter()
        .zip(snrs)
        .map(|(d, &snr)| {
            let amp = snr * amp_ref;
            let waveform: Vec<Vec<T>> = d
                .att
                .iter()
                .map(|&a| {
                    d.shape
                        .iter()
                        .map(|&s| T::from_f64_lossy(a * s * amp))
                        .collect()
                })
                .collect();
            let peak = d
                .shape
                .iter()
                .fold(0.0f64, |m, &s| m.max((s * amp).abs()));
            UnitTemplate {
                waveform,
                peak_amplitude: T::from_f64_lossy(peak),
            }
        })
        .collect()
}

/// Generates a recording and its ground truth from the config, deterministic
/// in `cfg.seed`. All randomness is drawn in `f64`, so every scalar type
/// sees the same underlying recording.
pub fn generate_recording<T: Scalar>(
    cfg: &SynthConfig,
) -> Result<(Recording<T>, GroundTruth<T>)> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, "synth");
    let fs = cfg.sample_rate_hz;
    let n = (cfg.duration_s * fs) as usize;
    let win = cfg.window_samples();

    let mut sigmas = [0.0f64; 4];
    for s in sigmas.iter_mut() {
        *s = cfg.noise_sigma_range[0]
            + (cfg.noise_sigma_range[1] - cfg.noise_sigma_range[0]) * uniform(&mut rng);
    }
    let mean_sigma = sigmas.iter().sum::<f64>() / 4.0;

    let (draws, snrs) = make_template_draws(cfg.n_units, win, fs, cfg.snr_range, &mut rng)?;
    let amp_ref = if mean_sigma > 0.0 { mean_sigma } else { 1.0 };

    let mut rates = Vec::with_capacity(cfg.n_units);
    for _ in 0..cfg.n_units {
        rates.push(cfg.rate_range[0] + (cfg.rate_range[1] - cfg.rate_range[0]) * uniform(&mut rng));
    }

    let refr = cfg.refractory_ms / 1000.0;
    let mut channels = vec![vec![0.0f64; n]; 4];
    let mut spike_trains = Vec::with_capacity(cfg.n_units);
    for u in 0..cfg.n_units {
        let r = rates[u];
        let mut times = Vec::new();
        if r > 0.0 {
            // Dead-time-corrected exponential so the realized rate matches r.
            let rexp = r / (1.0 - r * refr);
            let mut t = 0.0f64;
            loop {
                let draw = loop {
                    let v = uniform(&mut rng);
                    if v > 0.0 {
                        break v;
                    }
                };
                t += refr - draw.ln() / rexp;
                if t >= cfg.duration_s - 0.003 {
                    break;
                }
                times.push(t);
            }
        }
        let amp = snrs[u] * amp_ref;
        for &t in &times {
            let c = (t * fs).round() as i64;
            let s0 = c - (win / 2) as i64;
            if s0 < 0 || s0 as usize + win > n {
                continue;
            }
            let mut scale = 1.0;
            if let Some(d) = &cfg.drift {
                if d.unit_id == u {
                    scale = 1.0 - d.amplitude_decay_fraction * (t / cfg.duration_s);
                }
            }
            let s0 = s0 as usize;
            for (ch, channel) in channels.iter_mut().enumerate() {
                let a = draws[u].att[ch] * amp * scale;
                for (k, &s) in draws[u].shape.iter().enumerate() {
                    channel[s0 + k] += a * s;
                }
            }
        }
        spike_trains.push(times);
    }

    for (channel, &sigma) in channels.iter_mut().zip(&sigmas) {
        if sigma > 0.0 {
            for v in channel.iter_mut() {
                *v += sigma * crate::lca::gaussian(&mut rng);
            }
        }
    }

    let data: Vec<Vec<T>> = channels
        .into_iter()
        .map(|ch| ch.into_iter().map(T::from_f64_lossy).collect())
        .collect();
    let recording = Recording::new(data, fs)?;
    let gt = GroundTruth {
        spike_trains,
        templates: assemble_templates(&draws, &snrs, mean_sigma),
        snrs,
        noise_sigmas: sigmas.to_vec(),
    };
    Ok((recording, gt))
}

/// Fraction of ground-truth spikes with another spike (any unit) within
/// `window_ms`.
pub fn overlap_rate<T: Scalar>(gt: &GroundTruth<T>, window_ms: f64) -> f64 {
    let all = gt.merged_times();
    if all.is_empty() {
        return 0.0;
    }
    let w = window_ms / 1000.0;
    let mut overlapped = 0usize;
    for i in 0..all.len() {
        let prev = i > 0 && all[i] - all[i - 1] <= w;
        let next = i + 1 < all.len() && all[i + 1] - all[i] <= w;
        if prev || next {
            overlapped += 1;
        }
    }
    overlapped as f64 / all.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short_cfg(seed: u64) -> SynthConfig {
        SynthConfig {
            duration_s: 20.0,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        SynthConfig::default().validate().unwrap();
        assert!(SynthConfig {
            n_units: 0,
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            rate_range: [10.0, 6.0],
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            drift: Some(DriftConfig {
                unit_id: 7,
                amplitude_decay_fraction: 0.5
            }),
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            refractory_ms: 0.0,
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = short_cfg(42);
        let (r1, g1) = generate_recording::<f64>(&cfg).unwrap();
        let (r2, g2) = generate_recording::<f64>(&cfg).unwrap();
        assert_eq!(r1.channel(0), r2.channel(0));
        assert_eq!(r1.channel(3), r2.channel(3));
        assert_eq!(g1.spike_trains, g2.spike_trains);
        assert_eq!(g1.snrs, g2.snrs);
        let (r3, _) = generate_recording::<f64>(&short_cfg(43)).unwrap();
        assert_ne!(r1.channel(0), r3.channel(0));
    }

    #[test]
    fn refractory_period_respected_exactly() {
        let (_, gt) = generate_recording::<f64>(&short_cfg(1)).unwrap();
        for train in &gt.spike_trains {
            for pair in train.windows(2) {
                assert!(pair[1] - pair[0] >= 0.002, "ISI {} too short", pair[1] - pair[0]);
            }
        }
    }

    #[test]
    fn default_config_total_spike_count_in_expected_band() {
        let cfg = SynthConfig {
            seed: 3,
            ..SynthConfig::default()
        };
        let (_, gt) = generate_recording::<f64>(&cfg).unwrap();
        let total: usize = gt.spike_trains.iter().map(Vec::len).sum();
        assert!(
            (7200..=12000).contains(&total),
            "total ground-truth spikes {total}"
        );
    }

    #[test]
    fn snr_formula_matches_reported_values() {
        let (_, gt) = generate_recording::<f64>(&short_cfg(5)).unwrap();
        let mean_sigma = gt.noise_sigmas.iter().sum::<f64>() / 4.0;
        for (tpl, &snr) in gt.templates.iter().zip(&gt.snrs) {
            assert!((tpl.peak_amplitude / mean_sigma - snr).abs() < 1e-9);
        }
        // SNR targets span roughly the configured range.
        assert!(gt.snrs[0] < 4.0);
        assert!(*gt.snrs.last().unwrap() > 11.0);
    }

    #[test]
    fn zero_rate_yields_pure_noise() {
        let cfg = SynthConfig {
            rate_range: [0.0, 0.0],
            duration_s: 5.0,
            seed: 6,
            ..SynthConfig::default()
        };
        let (rec, gt) = generate_recording::<f64>(&cfg).unwrap();
        assert!(gt.spike_trains.iter().all(Vec::is_empty));
        // Noise only: per-channel std close to the drawn sigma.
        for ch in 0..4 {
            let s = rec.channel(ch);
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / s.len() as f64;
            assert!((var.sqrt() - gt.noise_sigmas[ch]).abs() < 0.5);
        }
    }

    #[test]
    fn noiseless_recording_is_exact_template_superposition() {
        let cfg = SynthConfig {
            n_units: 1,
            noise_sigma_range: [0.0, 0.0],
            duration_s: 5.0,
            seed: 7,
            ..SynthConfig::default()
        };
        let (rec, gt) = generate_recording::<f64>(&cfg).unwrap();
        assert!(!gt.spike_trains[0].is_empty());
        let fs = cfg.sample_rate_hz;
        let win = cfg.window_samples();
        let mut expect = vec![vec![0.0f64; rec.sample_count()]; 4];
        for &t in &gt.spike_trains[0] {
            let s0 = (t * fs).round() as usize - win / 2;
            for ch in 0..4 {
                for k in 0..win {
                    expect[ch][s0 + k] += gt.templates[0].waveform[ch][k];
                }
            }
        }
        for ch in 0..4 {
            for (a, b) in rec.channel(ch).iter().zip(&expect[ch]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn equidistant_position_gives_equal_attenuation() {
        let att = attenuation([10.0, 10.0, 8.0]);
        for &a in &att {
            assert!((a - 1.0).abs() < 1e-12);
        }
        // Near pad 0 the contrast requirement is satisfiable.
        let att = attenuation([1.0, 1.0, 6.0]);
        assert_eq!(att[0], 1.0);
        assert!(att[3] < 0.5);
    }

    #[test]
    fn templates_span_window_and_separate() {
        let cfg = short_cfg(8);
        let templates = make_templates::<f64>(&cfg).unwrap();
        assert_eq!(templates.len(), 5);
        for t in &templates {
            assert_eq!(t.waveform.len(), 4);
            for ch in &t.waveform {
                assert_eq!(ch.len(), 30);
            }
            assert!(t.peak_amplitude > 0.0);
        }
        let (_, gt) = generate_recording::<f64>(&cfg).unwrap();
        let cos = gt.pairwise_template_cosines();
        for i in 0..5 {
            assert!((cos[i][i] - 1.0).abs() < 1e-12);
            for j in 0..5 {
                assert!(cos[i][j].abs() <= 1.0 + 1e-12);
                assert!((cos[i][j] - cos[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn drift_scales_amplitude_linearly() {
        let base = SynthConfig {
            n_units: 1,
            noise_sigma_range: [0.0, 0.0],
            duration_s: 10.0,
            rate_range: [8.0, 8.0],
            seed: 9,
            ..SynthConfig::default()
        };
        let drifted = SynthConfig {
            drift: Some(DriftConfig {
                unit_id: 0,
                amplitude_decay_fraction: 0.6,
            }),
            ..base.clone()
        };
        let (rec0, gt) = generate_recording::<f64>(&base).unwrap();
        let (rec1, _) = generate_recording::<f64>(&drifted).unwrap();
        let fs = base.sample_rate_hz;
        // Identical RNG streams → identical spike times; compare amplitudes
        // at each spike peak.
        for &t in &gt.spike_trains[0] {
            let c = (t * fs).round() as usize;
            let expect = 1.0 - 0.6 * (t / 10.0);
            let a0 = rec0.channel(0)[c];
            let a1 = rec1.channel(0)[c];
            if a0.abs() > 1e-9 {
                assert!((a1 / a0 - expect).abs() < 1e-9, "t={t}");
            }
        }
    }

    #[test]
    fn overlap_rate_hand_cases_and_default_band() {
        let mk = |trains: Vec<Vec<f64>>| GroundTruth::<f64> {
            spike_trains: trains,
            templates: Vec::new(),
            snrs: Vec::new(),
            noise_sigmas: Vec::new(),
        };
        // Two units with identical times: everything overlaps.
        let gt = mk(vec![vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert_eq!(overlap_rate(&gt, 3.0), 1.0);
        // Single sparse train: nothing within 3 ms.
        let gt = mk(vec![vec![1.0, 2.0, 3.0]]);
        assert_eq!(overlap_rate(&gt, 3.0), 0.0);
        // Default config lands in the documented band.
        let (_, gt) = generate_recording::<f64>(&SynthConfig {
            seed: 11,
            ..SynthConfig::default()
        })
        .unwrap();
        let rate = overlap_rate(&gt, 3.0);
        assert!((0.10..=0.25).contains(&rate), "overlap rate {rate}");
    }

    #[test]
    fn f32_generation_matches_f64_draws() {
        let cfg = SynthConfig {
            duration_s: 2.0,
            seed: 12,
            ..SynthConfig::default()
        };
        let (r64, g64) = generate_recording::<f64>(&cfg).unwrap();
        let (r32, g32) = generate_recording::<f32>(&cfg).unwrap();
        assert_eq!(g64.spike_trains, g32.spike_trains);
        for (a, b) in r64.channel(0).iter().zip(r32.channel(0)) {
            assert!((a - *b as f64).abs() < 1e-3);
        }
    }
}
