//! PCA + k-means reference sorter.
//!
//! The conventional pipeline the spiking sorter is compared against: fit
//! per-channel principal components on an initial training window, project
//! every waveform to a small feature vector (top 3 components × 4 channels
//! = 12 dimensions by default), cluster the training features with seeded
//! k-means++, then assign each waveform to its nearest centroid.
//!
//! All fitting runs internally in `f64` regardless of the stored scalar
//! type: the covariance matrices are tiny (window length × window length
//! per channel), so there is no memory pressure, and the eigensolver and
//! Lloyd iterations stay reproducible across `f32`/`f64` instantiations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Scalar;
use crate::signal::SpikeWaveform;

/// Lloyd iteration cap for [`kmeans_fit`].
pub const MAX_LLOYD_ITER: usize = 300;

/// Convergence tolerance on the largest absolute centroid movement.
pub const LLOYD_TOL: f64 = 1e-4;

/// Tolerance for the per-channel axis orthonormality invariant.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// A channel is degenerate when its centered variance is below this
/// fraction of its raw signal power; its principal axes would be noise.
const DEGENERATE_REL_VAR: f64 = 1e-10;

// -------------------------------------------------------- configuration --

/// Parameters of the reference sorter.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Principal components kept per channel.
    pub k_per_channel: usize,
    /// Number of k-means clusters (matches the expected unit count).
    pub n_clusters: usize,
    /// PCA and k-means are fitted on waveforms earlier than this, seconds.
    pub train_window_s: f64,
    /// Whether the output also labels the training-window waveforms; the
    /// evaluation protocol scores only the post-training segment either way.
    pub label_training_window: bool,
    /// Seed for the k-means++ initialization.
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            k_per_channel: 3,
            n_clusters: 5,
            train_window_s: 60.0,
            label_training_window: false,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    /// Checks field ranges.
    pub fn validate(&self) -> Result<()> {
        if self.k_per_channel == 0 {
            return Err(Error::Config("k_per_channel must be ≥ 1".into()));
        }
        if self.n_clusters == 0 {
            return Err(Error::Config("n_clusters must be ≥ 1".into()));
        }
        if !(self.train_window_s > 0.0 && self.train_window_s.is_finite()) {
            return Err(Error::Config(format!(
                "train_window_s must be positive and finite, got {}",
                self.train_window_s
            )));
        }
        Ok(())
    }
}

// ------------------------------------------------------------------ PCA --

/// Per-channel principal-component projection fitted on a training set.
#[derive(Debug, Clone)]
pub struct PcaModel<T> {
    n_channels: usize,
    samples_per_channel: usize,
    k_per_channel: usize,
    /// Training mean of each channel's window, `[n_channels][samples]`.
    means: Vec<Vec<T>>,
    /// Top-k eigenvectors per channel, column-major `[samples × k]`.
    axes: Vec<Vec<T>>,
    /// Fraction of each channel's variance captured by each kept axis.
    explained: Vec<Vec<T>>,
}

impl<T: Scalar> PcaModel<T> {
    /// Number of recording channels.
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Window length per channel, samples.
    pub fn samples_per_channel(&self) -> usize {
        self.samples_per_channel
    }

    /// Principal components kept per channel.
    pub fn k_per_channel(&self) -> usize {
        self.k_per_channel
    }

    /// Length of a projected feature vector.
    pub fn feature_dim(&self) -> usize {
        self.n_channels * self.k_per_channel
    }

    /// Training mean of channel `c`'s window.
    pub fn mean(&self, c: usize) -> &[T] {
        &self.means[c]
    }

    /// Column `j` of channel `c`'s axis matrix.
    pub fn axis(&self, c: usize, j: usize) -> &[T] {
        let l = self.samples_per_channel;
        &self.axes[c][j * l..(j + 1) * l]
    }

    /// Explained-variance fractions for channel `c`, one per kept axis,
    /// largest first.
    pub fn explained_variance(&self, c: usize) -> &[T] {
        &self.explained[c]
    }

    /// Projects one flattened waveform (channels concatenated) to its
    /// feature vector: per channel, center by the training mean and dot
    /// with each kept axis.
    pub fn project(&self, waveform: &[T]) -> Result<Vec<T>> {
        let l = self.samples_per_channel;
        let expected = self.n_channels * l;
        if waveform.len() != expected {
            return Err(Error::Dimension {
                context: "PcaModel::project",
                expected,
                got: waveform.len(),
            });
        }
        let mut feat = Vec::with_capacity(self.feature_dim());
        for c in 0..self.n_channels {
            let win = &waveform[c * l..(c + 1) * l];
            let mean = &self.means[c];
            for j in 0..self.k_per_channel {
                let axis = &self.axes[c][j * l..(j + 1) * l];
                let mut acc = 0.0;
                for i in 0..l {
                    acc += (win[i] - mean[i]).to_f64_lossy() * axis[i].to_f64_lossy();
                }
                feat.push(T::from_f64_lossy(acc));
            }
        }
        Ok(feat)
    }

    /// Largest deviation of any per-channel `AᵀA` entry from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let l = self.samples_per_channel;
        let k = self.k_per_channel;
        let mut worst = 0.0f64;
        for axes in &self.axes {
            for a in 0..k {
                for b in 0..k {
                    let mut dot = 0.0;
                    for i in 0..l {
                        dot += axes[a * l + i].to_f64_lossy() * axes[b * l + i].to_f64_lossy();
                    }
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((dot - target).abs());
                }
            }
        }
        worst
    }
}

/// Fits per-channel PCA on flattened training waveforms.
///
/// Each waveform holds `n_channels` windows concatenated channel by
/// channel. Per channel the sample covariance (length × length) is formed
/// and eigendecomposed; the `k_per_channel` leading eigenvectors become
/// that channel's projection axes.
///
/// Errors when fewer than `k_per_channel + 1` waveforms are given, when a
/// channel's variance is negligible (identical waveforms — the axes would
/// be arbitrary), or when shapes are inconsistent.
pub fn pca_fit<T: Scalar>(
    waveforms: &[Vec<T>],
    n_channels: usize,
    k_per_channel: usize,
) -> Result<PcaModel<T>> {
    if n_channels == 0 || k_per_channel == 0 {
        return Err(Error::Config(
            "pca_fit: n_channels and k_per_channel must be ≥ 1".into(),
        ));
    }
    let n = waveforms.len();
    if n < k_per_channel + 1 {
        return Err(Error::TooFewSamples {
            context: "pca_fit",
            needed: k_per_channel + 1,
            got: n,
        });
    }
    let dim = waveforms[0].len();
    if dim == 0 || dim % n_channels != 0 {
        return Err(Error::Config(format!(
            "pca_fit: waveform length {dim} is not a positive multiple of {n_channels} channels"
        )));
    }
    let l = dim / n_channels;
    if l < k_per_channel {
        return Err(Error::Config(format!(
            "pca_fit: cannot keep {k_per_channel} components from {l}-sample windows"
        )));
    }
    for w in waveforms {
        if w.len() != dim {
            return Err(Error::Dimension {
                context: "pca_fit",
                expected: dim,
                got: w.len(),
            });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pca_fit input"));
        }
    }

    let mut means = Vec::with_capacity(n_channels);
    let mut axes = Vec::with_capacity(n_channels);
    let mut explained = Vec::with_capacity(n_channels);
    for c in 0..n_channels {
        // Channel mean and raw power, accumulated in f64.
        let mut mean = vec![0.0f64; l];
        let mut power = 0.0f64;
        for w in waveforms {
            for i in 0..l {
                let v = w[c * l + i].to_f64_lossy();
                mean[i] += v;
                power += v * v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        power /= n as f64;

        // Sample covariance of the centered windows.
        let mut cov = vec![0.0f64; l * l];
        for w in waveforms {
            let centered: Vec<f64> = (0..l)
                .map(|i| w[c * l + i].to_f64_lossy() - mean[i])
                .collect();
            for i in 0..l {
                for j in i..l {
                    cov[i * l + j] += centered[i] * centered[j];
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..l {
            for j in i..l {
                cov[i * l + j] /= denom;
                cov[j * l + i] = cov[i * l + j];
            }
        }
        let trace: f64 = (0..l).map(|i| cov[i * l + i]).sum();
        if trace <= DEGENERATE_REL_VAR * power {
            return Err(Error::Config(format!(
                "pca_fit: channel {c} has (near-)zero variance; principal axes are undefined"
            )));
        }

        let (values, vectors) = jacobi_eigh(cov, l);
        // Verify the solver's orthonormality in f64, before the axes are
        // narrowed to T (an f32 model cannot hold the invariant this tightly).
        #[cfg(debug_assertions)]
        for a in 0..k_per_channel {
            for b in a..k_per_channel {
                let dot: f64 = (0..l).map(|i| vectors[a * l + i] * vectors[b * l + i]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                debug_assert!(
                    (dot - want).abs() < ORTHONORMAL_TOL,
                    "channel {c} axes {a},{b}: gram deviation {}",
                    (dot - want).abs()
                );
            }
        }
        let mut chan_axes = Vec::with_capacity(l * k_per_channel);
        let mut chan_expl = Vec::with_capacity(k_per_channel);
        for j in 0..k_per_channel {
            chan_axes.extend(vectors[j * l..(j + 1) * l].iter().map(|&v| T::from_f64_lossy(v)));
            chan_expl.push(T::from_f64_lossy(values[j].max(0.0) / trace));
        }
        means.push(mean.into_iter().map(T::from_f64_lossy).collect());
        axes.push(chan_axes);
        explained.push(chan_expl);
    }

    Ok(PcaModel {
        n_channels,
        samples_per_channel: l,
        k_per_channel,
        means,
        axes,
        explained,
    })
}

/// Eigendecomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in descending order and the matching
/// eigenvectors column-major. The matrices here are at most
/// window-length square (30×30 for the default tetrode setup), for which
/// Jacobi is simple, accurate, and instantaneous.
fn jacobi_eigh(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-14 * frob.max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    s += a[p * n + q] * a[p * n + q];
                }
            }
            (2.0 * s).sqrt()
        };
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A ← JᵀAJ restricted to rows/columns p and q.
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .expect("eigenvalues of a finite symmetric matrix are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0f64; n * n];
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[dst * n + r] = v[r * n + src];
        }
    }
    (values, vectors)
}

// -------------------------------------------------------------- k-means --

/// Centroids fitted by seeded k-means++ and Lloyd iterations.
#[derive(Debug, Clone)]
pub struct KMeansModel<T> {
    centroids: Vec<Vec<T>>,
}

impl<T: Scalar> KMeansModel<T> {
    /// Number of clusters.
    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    /// Feature dimensionality.
    pub fn feature_dim(&self) -> usize {
        self.centroids[0].len()
    }

    /// All centroids, `[K][feature_dim]`.
    pub fn centroids(&self) -> &[Vec<T>] {
        &self.centroids
    }

    /// Index of the nearest centroid by squared Euclidean distance; ties
    /// resolve to the lower index.
    pub fn assign(&self, feature: &[T]) -> Result<usize> {
        if feature.len() != self.feature_dim() {
            return Err(Error::Dimension {
                context: "KMeansModel::assign",
                expected: self.feature_dim(),
                got: feature.len(),
            });
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(feature, c);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        Ok(best)
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.to_f64_lossy() - y.to_f64_lossy();
            d * d
        })
        .sum()
}

fn sq_dist_f64(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Fits k-means with k-means++ initialization and Lloyd iterations
/// (at most [`MAX_LLOYD_ITER`], stopping when no centroid coordinate moves
/// more than [`LLOYD_TOL`]). Deterministic for a fixed seed. Errors when
/// `k` exceeds the number of points.
pub fn kmeans_fit<T: Scalar>(features: &[Vec<T>], k: usize, seed: u64) -> Result<KMeansModel<T>> {
    if k == 0 {
        return Err(Error::Config("kmeans_fit: k must be ≥ 1".into()));
    }
    if features.len() < k {
        return Err(Error::TooFewSamples {
            context: "kmeans_fit",
            needed: k,
            got: features.len(),
        });
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::Config("kmeans_fit: features must be non-empty".into()));
    }
    let mut pts = Vec::with_capacity(features.len());
    for f in features {
        if f.len() != dim {
            return Err(Error::Dimension {
                context: "kmeans_fit",
                expected: dim,
                got: f.len(),
            });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kmeans_fit input"));
        }
        pts.push(f.iter().map(|v| v.to_f64_lossy()).collect::<Vec<f64>>());
    }

    let mut rng = stream_rng(seed, "kmeans-init");
    let centroids = plus_plus_seed(&pts, k, &mut rng);
    let (centroids, _inertia) = lloyd(&pts, centroids);
    Ok(KMeansModel {
        centroids: centroids
            .into_iter()
            .map(|c| c.into_iter().map(T::from_f64_lossy).collect())
            .collect(),
    })
}

/// k-means++ seeding: first centroid uniform, then each next point drawn
/// with probability proportional to its squared distance from the nearest
/// centroid chosen so far.
fn plus_plus_seed<R: Rng>(pts: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = pts.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(pts[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = pts.iter().map(|p| sq_dist_f64(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                r -= w;
                if r <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All points coincide with existing centroids; any choice works.
            rng.gen_range(0..n)
        };
        centroids.push(pts[next].clone());
        for (i, p) in pts.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist_f64(p, centroids.last().expect("non-empty")));
        }
    }
    centroids
}

/// Lloyd iterations; returns the final centroids and per-iteration inertia
/// (sum of squared distances to assigned centroids), which is
/// non-increasing. Clusters that lose all members keep their previous
/// centroid.
fn lloyd(pts: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = centroids.len();
    let dim = centroids[0].len();
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITER {
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        let mut inertia = 0.0f64;
        for p in pts {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = sq_dist_f64(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            inertia += best_d;
            counts[best] += 1;
            for (s, &v) in sums[best].iter_mut().zip(p) {
                *s += v;
            }
        }
        history.push(inertia);
        let mut movement = 0.0f64;
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            for i in 0..dim {
                let new = sums[j][i] / counts[j] as f64;
                movement = movement.max((new - centroids[j][i]).abs());
                centroids[j][i] = new;
            }
        }
        if movement <= LLOYD_TOL {
            break;
        }
    }
    (centroids, history)
}

// -------------------------------------------------------- full pipeline --

/// Output of [`baseline_sort`]: labeled events plus the fitted models.
#[derive(Debug, Clone)]
pub struct BaselineOutput<T> {
    /// Event times, seconds (subset of the input per the training-window
    /// labeling flag).
    pub times: Vec<f64>,
    /// Cluster label per event, `0..n_clusters`.
    pub labels: Vec<i32>,
    /// The fitted projection.
    pub pca: PcaModel<T>,
    /// The fitted clustering.
    pub kmeans: KMeansModel<T>,
}

/// Runs the full reference sorter: fit PCA and k-means on waveforms from
/// the first `train_window_s` seconds, then label waveforms by nearest
/// centroid — all of them, or only the post-training segment, per
/// `label_training_window`.
///
/// Errors when the training window holds fewer waveforms than clusters
/// (or than `k_per_channel + 1`).
pub fn baseline_sort<T: Scalar>(
    waveforms: &[SpikeWaveform<T>],
    n_channels: usize,
    cfg: &BaselineConfig,
) -> Result<BaselineOutput<T>> {
    cfg.validate()?;
    let train: Vec<Vec<T>> = waveforms
        .iter()
        .filter(|w| w.timestamp < cfg.train_window_s)
        .map(|w| w.vector.clone())
        .collect();
    if train.len() < cfg.n_clusters {
        return Err(Error::TooFewSamples {
            context: "baseline_sort training window",
            needed: cfg.n_clusters,
            got: train.len(),
        });
    }
    let pca = pca_fit(&train, n_channels, cfg.k_per_channel)?;
    let feats: Vec<Vec<T>> = train.iter().map(|w| pca.project(w)).collect::<Result<_>>()?;
    let kmeans = kmeans_fit(&feats, cfg.n_clusters, cfg.seed)?;

    let mut times = Vec::new();
    let mut labels = Vec::new();
    for w in waveforms {
        if !cfg.label_training_window && w.timestamp < cfg.train_window_s {
            continue;
        }
        let label = kmeans.assign(&pca.project(&w.vector)?)?;
        times.push(w.timestamp);
        labels.push(label as i32);
    }
    Ok(BaselineOutput {
        times,
        labels,
        pca,
        kmeans,
    })
}
