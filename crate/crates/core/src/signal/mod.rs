//! Multichannel recordings, band-pass preprocessing, threshold detection,
//! and spike-waveform extraction.

mod filter;

pub use filter::{Biquad, SosFilter};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

// ---------------------------------------------------------------- types --

/// A multichannel extracellular recording, channel-major, in microvolts.
#[derive(Debug, Clone)]
pub struct Recording<T> {
    samples: Vec<Vec<T>>,
    sample_rate: f64,
}

impl<T: Scalar> Recording<T> {
    /// Builds a recording, checking that all channels share one length and
    /// the sample rate is positive.
    pub fn new(samples: Vec<Vec<T>>, sample_rate: f64) -> Result<Self> {
        if sample_rate <= 0.0 {
            return Err(Error::Config(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Config("recording needs at least one channel".into()));
        }
        let len = samples[0].len();
        for (c, ch) in samples.iter().enumerate() {
            if ch.len() != len {
                return Err(Error::Dimension {
                    context: "recording channel lengths",
                    expected: len,
                    got: ch.len(),
                });
            }
            let _ = c;
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn channel_count(&self) -> usize {
        self.samples.len()
    }

    pub fn sample_count(&self) -> usize {
        self.samples[0].len()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn duration_s(&self) -> f64 {
        self.sample_count() as f64 / self.sample_rate
    }

    pub fn channel(&self, c: usize) -> &[T] {
        &self.samples[c]
    }

    pub fn channels(&self) -> &[Vec<T>] {
        &self.samples
    }

    /// Consumes the recording, returning the raw channel buffers.
    pub fn into_channels(self) -> Vec<Vec<T>> {
        self.samples
    }
}

/// One detected, aligned, flattened spike waveform.
#[derive(Debug, Clone)]
pub struct SpikeWaveform<T> {
    /// All channels' windows concatenated channel-by-channel.
    pub vector: Vec<T>,
    /// Event time in seconds (the peak sample).
    pub timestamp: f64,
    /// Channel carrying the largest absolute amplitude.
    pub peak_channel: usize,
}

/// Detection and preprocessing parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    /// Threshold = multiplier × raw MAD (no Gaussian consistency factor).
    pub mad_multiplier: f64,
    /// Extraction window length in milliseconds.
    pub window_ms: f64,
    /// Band-pass lower edge, Hz.
    pub band_low_hz: f64,
    /// Band-pass upper edge, Hz.
    pub band_high_hz: f64,
    /// Butterworth prototype order.
    pub filter_order: usize,
    /// Suprathreshold regions closer than this are merged, ms.
    pub dead_time_ms: f64,
    /// If set, thresholds are estimated from only the first this-many
    /// seconds (streaming mode); otherwise the full recording is used.
    pub threshold_window_s: Option<f64>,
    /// Moving-average length (samples) for smoothing the NEO energy.
    pub neo_smooth_samples: usize,
    /// NEO threshold as a multiple of the smoothed energy's mean.
    pub neo_multiplier: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            mad_multiplier: 5.0,
            window_ms: 3.0,
            band_low_hz: 300.0,
            band_high_hz: 3000.0,
            filter_order: 3,
            dead_time_ms: 1.0,
            threshold_window_s: None,
            neo_smooth_samples: 5,
            neo_multiplier: 8.0,
        }
    }
}

impl DetectionConfig {
    /// Validates fields against a concrete sample rate.
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(0.0 < self.band_low_hz
            && self.band_low_hz < self.band_high_hz
            && self.band_high_hz < sample_rate / 2.0)
        {
            return Err(Error::Config(format!(
                "band edges ({}, {}) invalid for sample rate {sample_rate}",
                self.band_low_hz, self.band_high_hz
            )));
        }
        if self.mad_multiplier <= 0.0 || self.window_ms <= 0.0 || self.dead_time_ms < 0.0 {
            return Err(Error::Config(
                "mad_multiplier and window_ms must be positive, dead_time_ms nonnegative".into(),
            ));
        }
        let w = self.window_ms * sample_rate / 1000.0;
        if (w - w.round()).abs() > 1e-9 || w < 2.0 {
            return Err(Error::Config(format!(
                "window_ms × sample_rate must give an integer sample count ≥ 2, got {w}"
            )));
        }
        Ok(())
    }

    /// Extraction window length in samples.
    pub fn window_samples(&self, sample_rate: f64) -> usize {
        (self.window_ms * sample_rate / 1000.0).round() as usize
    }
}

/// Per-channel detection thresholds with degenerate channels flagged.
#[derive(Debug, Clone)]
pub struct Thresholds<T> {
    /// mad_multiplier × MAD per channel, µV.
    pub per_channel: Vec<T>,
    /// Channels whose MAD was zero (constant or near-constant signal).
    pub degenerate: Vec<usize>,
}

/// One detected event: sample index, time, and loudest channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub sample: usize,
    pub time_s: f64,
    pub peak_channel: usize,
}

// ----------------------------------------------------------- operations --

/// Band-pass filters every channel independently (causal, forward only).
pub fn bandpass_filter<T: Scalar>(rec: &Recording<T>, cfg: &DetectionConfig) -> Result<Recording<T>> {
    cfg.validate(rec.sample_rate())?;
    let filt: SosFilter<T> = SosFilter::butterworth_bandpass(
        cfg.filter_order,
        cfg.band_low_hz,
        cfg.band_high_hz,
        rec.sample_rate(),
    )?;
    let mut out = rec.samples.clone();
    for ch in out.iter_mut() {
        filt.apply_in_place(ch);
    }
    Recording::new(out, rec.sample_rate())
}

/// Median of a slice (midpoint average for even lengths).
fn median<T: Scalar>(data: &[T]) -> T {
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in median input"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::from_f64_lossy(2.0)
    }
}

/// Per-channel detection thresholds: mad_multiplier × median(|x − median(x)|).
pub fn mad_threshold<T: Scalar>(rec: &Recording<T>, cfg: &DetectionConfig) -> Result<Thresholds<T>> {
    let window = match cfg.threshold_window_s {
        Some(s) => ((s * rec.sample_rate()) as usize).min(rec.sample_count()).max(1),
        None => rec.sample_count(),
    };
    let mut per_channel = Vec::with_capacity(rec.channel_count());
    let mut degenerate = Vec::new();
    for (c, ch) in rec.samples.iter().enumerate() {
        let seg = &ch[..window];
        if seg.is_empty() {
            return Err(Error::TooFewSamples {
                context: "mad_threshold",
                needed: 1,
                got: 0,
            });
        }
        let med = median(seg);
        let dev: Vec<T> = seg.iter().map(|&x| (x - med).abs()).collect();
        let mad = median(&dev);
        if mad <= T::zero() {
            degenerate.push(c);
        }
        per_channel.push(T::from_f64_lossy(cfg.mad_multiplier) * mad);
    }
    Ok(Thresholds {
        per_channel,
        degenerate,
    })
}

/// Finds spike events: contiguous suprathreshold regions (|x| > threshold on
/// any channel), regions closer than `dead_time_ms` merged, one event per
/// region at the sample of maximum absolute amplitude across channels.
pub fn detect_spikes<T: Scalar>(
    rec: &Recording<T>,
    thresholds: &Thresholds<T>,
    cfg: &DetectionConfig,
) -> Result<Vec<Detection>> {
    if thresholds.per_channel.len() != rec.channel_count() {
        return Err(Error::Dimension {
            context: "detect_spikes thresholds",
            expected: rec.channel_count(),
            got: thresholds.per_channel.len(),
        });
    }
    let n = rec.sample_count();
    let above = |i: usize| -> bool {
        rec.samples
            .iter()
            .zip(&thresholds.per_channel)
            .any(|(ch, &thr)| thr > T::zero() && ch[i].abs() > thr)
    };

    // Collect contiguous suprathreshold regions.
    let mut regions: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for i in 0..n {
        if above(i) {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            regions.push((s, i - 1));
        }
    }
    if let Some(s) = start {
        regions.push((s, n - 1));
    }

    // Merge regions separated by less than the dead time.
    let dead = (cfg.dead_time_ms * rec.sample_rate() / 1000.0).round() as usize;
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in regions {
        match merged.last_mut() {
            Some((_, le)) if s - *le < dead => *le = e,
            _ => merged.push((s, e)),
        }
    }

    // One event per region at the global absolute peak.
    let mut events = Vec::with_capacity(merged.len());
    for (s, e) in merged {
        let mut best = (T::neg_infinity(), s, 0usize);
        for (c, ch) in rec.samples.iter().enumerate() {
            for (i, &v) in ch[s..=e].iter().enumerate() {
                let mag = v.abs();
                if mag > best.0 {
                    best = (mag, s + i, c);
                }
            }
        }
        events.push(Detection {
            sample: best.1,
            time_s: best.1 as f64 / rec.sample_rate(),
            peak_channel: best.2,
        });
    }
    Ok(events)
}

/// Cuts the window around each event and flattens channels into one vector.
/// Events whose window would cross a recording boundary are dropped.
pub fn extract_waveforms<T: Scalar>(
    rec: &Recording<T>,
    events: &[Detection],
    cfg: &DetectionConfig,
) -> Vec<SpikeWaveform<T>> {
    let w = cfg.window_samples(rec.sample_rate());
    let half = w / 2;
    let n = rec.sample_count();
    let mut out = Vec::with_capacity(events.len());
    for ev in events {
        if ev.sample < half || ev.sample + (w - half) > n {
            continue;
        }
        let s = ev.sample - half;
        let mut vector = Vec::with_capacity(rec.channel_count() * w);
        for ch in &rec.samples {
            vector.extend_from_slice(&ch[s..s + w]);
        }
        out.push(SpikeWaveform {
            vector,
            timestamp: ev.time_s,
            peak_channel: ev.peak_channel,
        });
    }
    out
}

/// Nonlinear-energy-operator detector (comparison alternative to the MAD
/// path): ψ(n) = x(n)² − x(n−1)x(n+1) per channel, smoothed by a short
/// moving average, thresholded at a multiple of its mean, then the same
/// merge/peak rules as [`detect_spikes`].
pub fn neo_detect<T: Scalar>(rec: &Recording<T>, cfg: &DetectionConfig) -> Result<Vec<Detection>> {
    let n = rec.sample_count();
    if n < 3 {
        return Ok(Vec::new());
    }
    let k = cfg.neo_smooth_samples.max(1);
    let mut energy: Vec<Vec<T>> = Vec::with_capacity(rec.channel_count());
    for ch in &rec.samples {
        let mut psi = vec![T::zero(); n];
        for i in 1..n - 1 {
            psi[i] = ch[i] * ch[i] - ch[i - 1] * ch[i + 1];
        }
        // Centered moving average of length k.
        let mut smoothed = vec![T::zero(); n];
        let halfk = k / 2;
        let mut acc = T::zero();
        let mut count = 0usize;
        // Sliding window over [i - halfk, i - halfk + k).
        for i in 0..n {
            let add = i + (k - halfk);
            if add <= n {
                acc += psi[add - 1];
                count += 1;
            }
            if i > halfk {
                acc -= psi[i - halfk - 1];
                count -= 1;
            }
            smoothed[i] = acc / T::from_usize_lossy(count.max(1));
        }
        energy.push(smoothed);
    }

    // Threshold each channel's energy at neo_multiplier × its mean.
    let mut thr = Vec::with_capacity(rec.channel_count());
    for e in &energy {
        let mean = e.iter().copied().sum::<T>() / T::from_usize_lossy(n);
        thr.push(T::from_f64_lossy(cfg.neo_multiplier) * mean);
    }

    let above = |i: usize| -> bool {
        energy
            .iter()
            .zip(&thr)
            .any(|(e, &t)| t > T::zero() && e[i] > t)
    };
    let mut regions: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for i in 0..n {
        if above(i) {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            regions.push((s, i - 1));
        }
    }
    if let Some(s) = start {
        regions.push((s, n - 1));
    }
    let dead = (cfg.dead_time_ms * rec.sample_rate() / 1000.0).round() as usize;
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in regions {
        match merged.last_mut() {
            Some((_, le)) if s - *le < dead => *le = e,
            _ => merged.push((s, e)),
        }
    }
    let mut events = Vec::with_capacity(merged.len());
    for (s, e) in merged {
        let mut best = (T::neg_infinity(), s, 0usize);
        for (c, ch) in rec.samples.iter().enumerate() {
            for (i, &v) in ch[s..=e].iter().enumerate() {
                let mag = v.abs();
                if mag > best.0 {
                    best = (mag, s + i, c);
                }
            }
        }
        events.push(Detection {
            sample: best.1,
            time_s: best.1 as f64 / rec.sample_rate(),
            peak_channel: best.2,
        });
    }
    Ok(events)
}
