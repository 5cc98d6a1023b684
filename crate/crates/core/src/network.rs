//! The two-layer sparse sorter: a feature-extraction LCA feeding a
//! clustering LCA on a shared step clock, with online layer-by-layer
//! dictionary learning and argmax labeling.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lca::{Dictionary, LcaConfig, LcaLayer};
use crate::learn::{dictionary_update, schedule, LearnConfig, TrainPhase};
use crate::rng::stream_rng;
use crate::scalar::Scalar;
use crate::signal::SpikeWaveform;

/// Label for waveforms whose layer-2 accumulation stayed all-zero.
pub const UNASSIGNED: i32 = -1;

/// Outcome of presenting one waveform.
#[derive(Debug, Clone)]
pub struct LabelResult<T> {
    /// Winning cluster index, or [`UNASSIGNED`].
    pub label: i32,
    /// Sum of layer-2 emissions over the final decode window.
    pub accumulated_activation: Vec<T>,
    /// Waveform timestamp, seconds.
    pub timestamp: f64,
    /// Total nonzero emissions across both layers over the presentation.
    pub spikes_emitted: usize,
}

/// Argmax with lowest-index tie-break; all entries ≤ 0 → [`UNASSIGNED`].
pub fn argmax_label<T: Scalar>(accumulation: &[T]) -> i32 {
    let mut best = T::zero();
    let mut label = UNASSIGNED;
    for (j, &v) in accumulation.iter().enumerate() {
        if v > best {
            best = v;
            label = j as i32;
        }
    }
    label
}

/// Scales a waveform to unit L2 norm, preserving timestamp and peak channel.
pub fn normalize_waveform<T: Scalar>(sw: &SpikeWaveform<T>) -> Result<SpikeWaveform<T>> {
    let norm = sw.vector.iter().map(|&v| v * v).sum::<T>().sqrt();
    if !(norm.to_f64_lossy() > 0.0) {
        return Err(Error::ZeroVector("normalize_waveform"));
    }
    Ok(SpikeWaveform {
        vector: sw.vector.iter().map(|&v| v / norm).collect(),
        timestamp: sw.timestamp,
        peak_channel: sw.peak_channel,
    })
}

/// Internal per-presentation record.
struct Presentation<T> {
    acc2: Vec<T>,
    dec1: Vec<T>,
    dec2: Vec<T>,
    spikes: usize,
}

/// The full sorter: two coupled LCA layers, learning configuration, and the
/// seed all randomness derives from.
#[derive(Debug, Clone)]
pub struct NssModel<T> {
    layer1: LcaLayer<T>,
    layer2: LcaLayer<T>,
    learn: LearnConfig,
    seed: u64,
    train_rng: ChaCha8Rng,
}

impl<T: Scalar> NssModel<T> {
    /// Builds a model with freshly initialized random dictionaries:
    /// `input_dim × m1` for layer 1 and `m1 × m2` for layer 2.
    pub fn new(
        input_dim: usize,
        m1: usize,
        m2: usize,
        cfg1: LcaConfig,
        cfg2: LcaConfig,
        learn: LearnConfig,
        seed: u64,
    ) -> Result<Self> {
        let d1 = Dictionary::random(input_dim, m1, &mut stream_rng(seed, "layer1-init"));
        let d2 = Dictionary::random(m1, m2, &mut stream_rng(seed, "layer2-init"));
        Self::from_parts(d1, cfg1, d2, cfg2, learn, seed)
    }

    /// Assembles a model from existing dictionaries (e.g. loaded from disk).
    pub fn from_parts(
        d1: Dictionary<T>,
        cfg1: LcaConfig,
        d2: Dictionary<T>,
        cfg2: LcaConfig,
        learn: LearnConfig,
        seed: u64,
    ) -> Result<Self> {
        if d2.input_dim() != d1.atom_count() {
            return Err(Error::Dimension {
                context: "layer-2 input dimension must equal layer-1 atom count",
                expected: d1.atom_count(),
                got: d2.input_dim(),
            });
        }
        learn.validate()?;
        Ok(Self {
            layer1: LcaLayer::new(d1, cfg1)?,
            layer2: LcaLayer::new(d2, cfg2)?,
            learn,
            seed,
            train_rng: stream_rng(seed, "train"),
        })
    }

    pub fn layer1(&self) -> &LcaLayer<T> {
        &self.layer1
    }

    pub fn layer2(&self) -> &LcaLayer<T> {
        &self.layer2
    }

    /// Mutable layer access, for reconfiguration between runs (bit width,
    /// neuron model, step counts).
    pub fn layer1_mut(&mut self) -> &mut LcaLayer<T> {
        &mut self.layer1
    }

    pub fn layer2_mut(&mut self) -> &mut LcaLayer<T> {
        &mut self.layer2
    }

    pub fn learn_cfg(&self) -> &LearnConfig {
        &self.learn
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Waveform dimension the model accepts.
    pub fn input_dim(&self) -> usize {
        self.layer1.dict().input_dim()
    }

    /// Number of output clusters M₂.
    pub fn cluster_count(&self) -> usize {
        self.layer2.dict().atom_count()
    }

    /// Learnable feedforward weights: L·M₁ + M₁·M₂.
    pub fn forward_weight_count(&self) -> usize {
        let d1 = self.layer1.dict();
        let d2 = self.layer2.dict();
        d1.input_dim() * d1.atom_count() + d2.input_dim() * d2.atom_count()
    }

    /// All synapses including the recurrent inhibition matrices:
    /// forward weights + M₁² + M₂².
    pub fn total_synapse_count(&self) -> usize {
        let m1 = self.layer1.dict().atom_count();
        let m2 = self.layer2.dict().atom_count();
        self.forward_weight_count() + m1 * m1 + m2 * m2
    }

    /// Presents one unit-norm input for `n_steps` shared-clock steps:
    /// layer 1 integrates b₁ = D₁ᵀx, and each step's emitted code drives
    /// layer 2 through b₂ = D₂ᵀa₁(t).
    fn present(&mut self, x: &[T], n_steps: usize) -> Result<Presentation<T>> {
        let m1 = self.layer1.dict().atom_count();
        let m2 = self.layer2.dict().atom_count();
        let w1 = self.layer1.config().decode_window.min(n_steps);
        let w2 = self.layer2.config().decode_window.min(n_steps);
        let b1 = self.layer1.dict().correlate(x)?;
        self.layer1.reset();
        self.layer2.reset();
        let mut acc2 = vec![T::zero(); m2];
        let mut dec1 = vec![T::zero(); m1];
        let mut dec2 = vec![T::zero(); m2];
        let mut spikes = 0usize;
        for t in 0..n_steps {
            spikes += self.layer1.step(&b1)?;
            let b2 = self.layer2.dict().correlate_sparse(self.layer1.active());
            spikes += self.layer2.step(&b2)?;
            if t + w1 >= n_steps {
                for (d, &a) in dec1.iter_mut().zip(self.layer1.emissions()) {
                    *d += a;
                }
            }
            if t + w2 >= n_steps {
                for ((d, s), &a) in dec2.iter_mut().zip(acc2.iter_mut()).zip(self.layer2.emissions())
                {
                    *d += a;
                    *s += a;
                }
            }
        }
        let w1 = T::from_usize_lossy(w1);
        for d in dec1.iter_mut() {
            *d = *d / w1;
        }
        let w2 = T::from_usize_lossy(w2);
        for d in dec2.iter_mut() {
            *d = *d / w2;
        }
        Ok(Presentation {
            acc2,
            dec1,
            dec2,
            spikes,
        })
    }

    /// Labels one waveform with the current (frozen) dictionaries. The input
    /// is normalized internally, so labels are invariant under positive
    /// scaling of the waveform.
    pub fn infer(&mut self, sw: &SpikeWaveform<T>) -> Result<LabelResult<T>> {
        let normalized = normalize_waveform(sw)?;
        let n_steps = self.layer1.config().n_steps;
        let p = self.present(&normalized.vector, n_steps)?;
        Ok(LabelResult {
            label: argmax_label(&p.acc2),
            accumulated_activation: p.acc2,
            timestamp: sw.timestamp,
            spikes_emitted: p.spikes,
        })
    }

    /// Total nonzero emissions across both layers while sorting one
    /// waveform.
    pub fn count_emitted_spikes(&mut self, sw: &SpikeWaveform<T>) -> Result<usize> {
        Ok(self.infer(sw)?.spikes_emitted)
    }

    /// Processes timestamped waveforms in order, labeling each and updating
    /// the dictionaries layer-by-layer after every full batch: layer 1 from
    /// (x, decoded a₁) pairs, then — with the refreshed layer-1 codes —
    /// layer 2 from (decoded a₁, decoded a₂) pairs. Lateral inhibition is
    /// rebuilt after each update. The learning rate and per-waveform step
    /// count follow the two-phase schedule keyed on waveform timestamps; the
    /// layer configs are left at the last scheduled step count.
    ///
    /// Zero-norm waveforms cannot be normalized; they are labeled
    /// [`UNASSIGNED`] and skipped by learning.
    pub fn train_online(&mut self, stream: &[SpikeWaveform<T>]) -> Result<Vec<LabelResult<T>>> {
        let mut results = Vec::with_capacity(stream.len());
        let mut batch: Vec<(Vec<T>, Vec<T>)> = Vec::with_capacity(self.learn.batch_size);
        let mut last_t = f64::NEG_INFINITY;
        for sw in stream {
            if sw.timestamp < last_t {
                return Err(Error::Config(format!(
                    "waveform stream out of order: {} after {}",
                    sw.timestamp, last_t
                )));
            }
            last_t = sw.timestamp;
            let normalized = match normalize_waveform(sw) {
                Ok(n) => n,
                Err(_) => {
                    results.push(LabelResult {
                        label: UNASSIGNED,
                        accumulated_activation: vec![T::zero(); self.cluster_count()],
                        timestamp: sw.timestamp,
                        spikes_emitted: 0,
                    });
                    continue;
                }
            };
            let (_, n_steps) = schedule(sw.timestamp, &self.learn);
            self.layer1.config_mut().n_steps = n_steps;
            self.layer2.config_mut().n_steps = n_steps;
            let p = self.present(&normalized.vector, n_steps)?;
            results.push(LabelResult {
                label: argmax_label(&p.acc2),
                accumulated_activation: p.acc2,
                timestamp: sw.timestamp,
                spikes_emitted: p.spikes,
            });
            batch.push((normalized.vector, p.dec1));
            if batch.len() == self.learn.batch_size {
                self.update_from_batch(&batch, sw.timestamp, n_steps)?;
                batch.clear();
            }
        }
        Ok(results)
    }

    /// One layer-by-layer update from a full batch.
    fn update_from_batch(
        &mut self,
        batch: &[(Vec<T>, Vec<T>)],
        elapsed_s: f64,
        n_steps: usize,
    ) -> Result<()> {
        let phase = TrainPhase::at(elapsed_s, &self.learn);
        let d1 = dictionary_update(
            self.layer1.dict(),
            batch,
            &self.learn,
            phase,
            &mut self.train_rng,
        )?;
        self.layer1.set_dict(d1)?;
        let mut pairs2 = Vec::with_capacity(batch.len());
        for (x, _) in batch {
            let p = self.present(x, n_steps)?;
            pairs2.push((p.dec1, p.dec2));
        }
        let d2 = dictionary_update(
            self.layer2.dict(),
            &pairs2,
            &self.learn,
            phase,
            &mut self.train_rng,
        )?;
        self.layer2.set_dict(d2)?;
        Ok(())
    }
}
