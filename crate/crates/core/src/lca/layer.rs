//! One LCA layer: leaky-integrator membrane dynamics with lateral
//! inhibition and a choice of output neuron (graded-spike TDQ, binary LIF,
//! or exact continuous activation).

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lca::dictionary::{Dictionary, InhibitionMatrix};
use crate::scalar::Scalar;

/// Spike resolution: `Bits(N)` gives 2^N − 1 graded levels with step
/// s = 1/(2^N − 1); `Continuous` is the exact-activation limit used for
/// oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitWidth {
    Bits(u8),
    Continuous,
}

impl BitWidth {
    /// Quantization step s, or `None` in continuous mode.
    pub fn step(self) -> Option<f64> {
        match self {
            BitWidth::Bits(n) => Some(1.0 / ((1u64 << n) - 1) as f64),
            BitWidth::Continuous => None,
        }
    }
}

impl Serialize for BitWidth {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            BitWidth::Bits(n) => s.serialize_u8(*n),
            BitWidth::Continuous => s.serialize_str("continuous"),
        }
    }
}

impl<'de> Deserialize<'de> for BitWidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u8),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(BitWidth::Bits(n)),
            Raw::Text(t) if t.eq_ignore_ascii_case("continuous") => Ok(BitWidth::Continuous),
            Raw::Text(t) => Err(D::Error::custom(format!(
                "bit width must be an integer or \"continuous\", got {t:?}"
            ))),
        }
    }
}

/// Output neuron family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronModel {
    /// Temporally diffused quantizer: graded spikes with carried error.
    Tdq,
    /// Leaky integrate-and-fire: binary spikes on threshold crossing.
    Lif,
}

/// LIF reset rule after a spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LifReset {
    /// Subtract the threshold (default).
    Soft,
    /// Zero the membrane.
    Hard,
}

/// Parameters of one LCA layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LcaConfig {
    /// Activation threshold λ of the rectified softshrink.
    pub lambda: f64,
    /// Membrane leak time constant, ms.
    pub tau_ms: f64,
    /// Integration step, ms.
    pub dt_ms: f64,
    /// Steps per waveform presentation (scheduled 200 → 32 by training).
    pub n_steps: usize,
    /// Spike resolution.
    pub bit_width: BitWidth,
    /// Output neuron family.
    pub neuron_model: NeuronModel,
    /// LIF firing threshold.
    pub lif_threshold: f64,
    /// LIF reset rule.
    pub lif_reset: LifReset,
    /// Emissions averaged over this many trailing steps form the decoded
    /// activation (also the labeling window upstream).
    pub decode_window: usize,
}

impl Default for LcaConfig {
    fn default() -> Self {
        Self {
            lambda: 0.03,
            tau_ms: 2.0,
            dt_ms: 0.1,
            n_steps: 200,
            bit_width: BitWidth::Bits(8),
            neuron_model: NeuronModel::Tdq,
            lif_threshold: 1.06,
            lif_reset: LifReset::Soft,
            decode_window: 10,
        }
    }
}

impl LcaConfig {
    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Config(format!("lambda must be in (0, 1], got {}", self.lambda)));
        }
        if !(self.dt_ms > 0.0 && self.dt_ms < self.tau_ms) {
            return Err(Error::Config(format!(
                "need 0 < dt ({}) < tau ({})",
                self.dt_ms, self.tau_ms
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if let BitWidth::Bits(n) = self.bit_width {
            if n == 0 || n > 32 {
                return Err(Error::Config(format!("bit width must be 1–32, got {n}")));
            }
        }
        if self.lif_threshold <= 0.0 {
            return Err(Error::Config("lif_threshold must be positive".into()));
        }
        if self.decode_window == 0 {
            return Err(Error::Config("decode_window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Rectified softshrink T_λ(u) = max(0, u − λ).
#[inline]
pub fn rectified_softshrink<T: Scalar>(u: T, lambda: T) -> T {
    (u - lambda).max(T::zero())
}

/// Result of coding one input: final emission, decoded activation, and
/// reconstruction residual.
#[derive(Debug, Clone)]
pub struct SparseCode<T> {
    /// Emission vector at the final step.
    pub code: Vec<T>,
    /// Mean emission over the trailing decode window.
    pub decoded: Vec<T>,
    /// x − D·decoded.
    pub residual: Vec<T>,
    /// Count of nonzero emissions (any height) over the whole presentation.
    pub spikes_emitted: usize,
}

/// One LCA layer: dictionary, derived inhibition, and mutable neuron state.
#[derive(Debug, Clone)]
pub struct LcaLayer<T> {
    dict: Dictionary<T>,
    inhib: InhibitionMatrix<T>,
    cfg: LcaConfig,
    u: Vec<T>,
    v: Vec<T>,
    a: Vec<T>,
    /// (index, value) pairs of the current nonzero emissions.
    active: Vec<(usize, T)>,
}

impl<T: Scalar> LcaLayer<T> {
    /// Builds a layer, deriving the inhibition matrix from the dictionary.
    pub fn new(dict: Dictionary<T>, cfg: LcaConfig) -> Result<Self> {
        cfg.validate()?;
        let inhib = InhibitionMatrix::build(&dict)?;
        let m = dict.atom_count();
        Ok(Self {
            dict,
            inhib,
            cfg,
            u: vec![T::zero(); m],
            v: vec![T::zero(); m],
            a: vec![T::zero(); m],
            active: Vec::with_capacity(m),
        })
    }

    pub fn dict(&self) -> &Dictionary<T> {
        &self.dict
    }

    pub fn config(&self) -> &LcaConfig {
        &self.cfg
    }

    pub fn config_mut(&mut self) -> &mut LcaConfig {
        &mut self.cfg
    }

    /// Replaces the dictionary and rebuilds lateral inhibition (used after
    /// each learning step).
    pub fn set_dict(&mut self, dict: Dictionary<T>) -> Result<()> {
        if dict.input_dim() != self.dict.input_dim() || dict.atom_count() != self.dict.atom_count()
        {
            return Err(Error::Dimension {
                context: "set_dict shape",
                expected: self.dict.input_dim() * self.dict.atom_count(),
                got: dict.input_dim() * dict.atom_count(),
            });
        }
        self.inhib = InhibitionMatrix::build(&dict)?;
        self.dict = dict;
        Ok(())
    }

    /// Zeroes membrane, carry, and emission state (start of a presentation).
    pub fn reset(&mut self) {
        for x in self.u.iter_mut() {
            *x = T::zero();
        }
        for x in self.v.iter_mut() {
            *x = T::zero();
        }
        for x in self.a.iter_mut() {
            *x = T::zero();
        }
        self.active.clear();
    }

    /// Current emission vector.
    pub fn emissions(&self) -> &[T] {
        &self.a
    }

    /// Current nonzero emissions as (index, value) pairs.
    pub fn active(&self) -> &[(usize, T)] {
        &self.active
    }

    /// Membrane potentials (test/diagnostic access).
    pub fn membrane(&self) -> &[T] {
        &self.u
    }

    /// Carried quantization errors (test/diagnostic access).
    pub fn carries(&self) -> &[T] {
        &self.v
    }

    /// Advances one step driven by bias `b`: explicit-Euler membrane update
    /// u += (dt/τ)(b − u + W·a_prev), then emission per the neuron model.
    /// Returns the number of neurons that emitted.
    pub fn step(&mut self, b: &[T]) -> Result<usize> {
        let m = self.u.len();
        if b.len() != m {
            return Err(Error::Dimension {
                context: "lca step bias",
                expected: m,
                got: b.len(),
            });
        }
        let k = T::from_f64_lossy(self.cfg.dt_ms / self.cfg.tau_ms);
        let lambda = T::from_f64_lossy(self.cfg.lambda);

        // drive = b − u + W·a_prev (inhibition acts through emitted spikes).
        let mut drive = vec![T::zero(); m];
        self.inhib.accumulate_sparse(&self.active, &mut drive);
        for i in 0..m {
            drive[i] += b[i] - self.u[i];
            self.u[i] += k * drive[i];
            if !self.u[i].is_finite() {
                return Err(Error::NonFinite("lca membrane update"));
            }
        }

        self.active.clear();
        match self.cfg.neuron_model {
            NeuronModel::Lif => {
                let thr = T::from_f64_lossy(self.cfg.lif_threshold);
                for i in 0..m {
                    if self.u[i] >= thr {
                        self.a[i] = T::one();
                        self.u[i] = match self.cfg.lif_reset {
                            LifReset::Soft => self.u[i] - thr,
                            LifReset::Hard => T::zero(),
                        };
                        self.active.push((i, T::one()));
                    } else {
                        self.a[i] = T::zero();
                    }
                }
            }
            NeuronModel::Tdq => match self.cfg.bit_width.step() {
                None => {
                    // Continuous limit: emit the exact activation.
                    for i in 0..m {
                        let act = rectified_softshrink(self.u[i], lambda);
                        self.a[i] = act;
                        if act > T::zero() {
                            self.active.push((i, act));
                        }
                    }
                }
                Some(s) => {
                    let s = T::from_f64_lossy(s);
                    let one = T::one();
                    for i in 0..m {
                        // Pre-quantization value: activation plus carried
                        // error; emit the largest representable multiple of
                        // s, clamp at 1, carry the remainder forward.
                        let p = rectified_softshrink(self.u[i], lambda) + self.v[i];
                        let mut emitted = (p / s).floor() * s;
                        if emitted > one {
                            emitted = one;
                        }
                        self.v[i] = p - emitted;
                        self.a[i] = emitted;
                        if emitted > T::zero() {
                            self.active.push((i, emitted));
                        }
                    }
                }
            },
        }
        Ok(self.active.len())
    }

    /// Codes one unit-norm input: resets state, computes b = Dᵀx once, runs
    /// `n_steps`, and returns the final code, the decoded activation (mean
    /// emission over the trailing `decode_window` steps), and the residual.
    pub fn sparse_code(&mut self, x: &[T]) -> Result<SparseCode<T>> {
        let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt().to_f64_lossy();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NotUnitNorm {
                context: "sparse_code input",
                norm,
            });
        }
        let b = self.dict.correlate(x)?;
        self.reset();
        let m = self.a.len();
        let window = self.cfg.decode_window.min(self.cfg.n_steps);
        let mut decoded = vec![T::zero(); m];
        let mut spikes = 0usize;
        for t in 0..self.cfg.n_steps {
            spikes += self.step(&b)?;
            if t + window >= self.cfg.n_steps {
                for i in 0..m {
                    decoded[i] += self.a[i];
                }
            }
        }
        let wlen = T::from_usize_lossy(window);
        for d in decoded.iter_mut() {
            *d = *d / wlen;
        }
        let recon = self.dict.reconstruct(&decoded)?;
        let residual: Vec<T> = x.iter().zip(&recon).map(|(&xi, &ri)| xi - ri).collect();
        Ok(SparseCode {
            code: self.a.clone(),
            decoded,
            residual,
            spikes_emitted: spikes,
        })
    }

    /// Like [`sparse_code`](Self::sparse_code) but also records every step's
    /// emission vector (for sparsity analysis).
    pub fn sparse_code_logged(&mut self, x: &[T]) -> Result<(SparseCode<T>, Vec<Vec<T>>)> {
        let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt().to_f64_lossy();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NotUnitNorm {
                context: "sparse_code input",
                norm,
            });
        }
        let b = self.dict.correlate(x)?;
        self.reset();
        let m = self.a.len();
        let window = self.cfg.decode_window.min(self.cfg.n_steps);
        let mut decoded = vec![T::zero(); m];
        let mut spikes = 0usize;
        let mut log = Vec::with_capacity(self.cfg.n_steps);
        for t in 0..self.cfg.n_steps {
            spikes += self.step(&b)?;
            log.push(self.a.clone());
            if t + window >= self.cfg.n_steps {
                for i in 0..m {
                    decoded[i] += self.a[i];
                }
            }
        }
        let wlen = T::from_usize_lossy(window);
        for d in decoded.iter_mut() {
            *d = *d / wlen;
        }
        let recon = self.dict.reconstruct(&decoded)?;
        let residual: Vec<T> = x.iter().zip(&recon).map(|(&xi, &ri)| xi - ri).collect();
        Ok((
            SparseCode {
                code: self.a.clone(),
                decoded,
                residual,
                spikes_emitted: spikes,
            },
            log,
        ))
    }
}
