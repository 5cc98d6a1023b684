//! Ground-truth evaluation: greedy event matching with a 1 ms tolerance,
//! per-unit agreement/F₁ scores, detection precision, confusion matrices,
//! and emission-sparsity metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::UNASSIGNED;
use crate::scalar::Scalar;

/// Default event-matching tolerance, seconds (1 ms).
pub const DEFAULT_TOL_S: f64 = 0.001;

/// A sorted spike train belonging to one unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub unit_id: i32,
    pub times: Vec<f64>,
}

impl SpikeTrain {
    /// Validates strictly increasing, finite times.
    pub fn new(unit_id: i32, times: Vec<f64>) -> Result<Self> {
        for pair in times.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::Config(format!(
                    "spike train {unit_id} not strictly increasing at {} -> {}",
                    pair[0], pair[1]
                )));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("spike train times"));
        }
        Ok(Self { unit_id, times })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The sub-train with times in [from, to).
    pub fn window(&self, from: f64, to: f64) -> SpikeTrain {
        SpikeTrain {
            unit_id: self.unit_id,
            times: self
                .times
                .iter()
                .copied()
                .filter(|&t| t >= from && t < to)
                .collect(),
        }
    }
}

/// Greedy nearest-first one-to-one matching between two sorted time lists:
/// candidate pairs within `tol_s` are taken closest-first, each event used
/// at most once. Returns the matched count.
fn greedy_match(a: &[f64], b: &[f64], tol_s: f64) -> usize {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    let mut lo = 0usize;
    for (i, &ta) in a.iter().enumerate() {
        while lo < b.len() && b[lo] < ta - tol_s {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() && b[j] <= ta + tol_s {
            pairs.push(((ta - b[j]).abs(), i, j));
            j += 1;
        }
    }
    pairs.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap()
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut matched = 0;
    for (_, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            matched += 1;
        }
    }
    matched
}

/// Agreement = matched / (|a| + |b| − matched); 0 when both trains are
/// empty.
pub fn agreement_score(a: &SpikeTrain, b: &SpikeTrain, tol_s: f64) -> f64 {
    let m = greedy_match(&a.times, &b.times, tol_s);
    let denom = a.len() + b.len() - m;
    if denom == 0 {
        0.0
    } else {
        m as f64 / denom as f64
    }
}

/// How ground-truth units are matched to inferred units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Each ground-truth unit independently takes its best inferred unit
    /// (several may share one).
    PerUnit,
    /// Exact one-to-one assignment maximizing total agreement.
    Exclusive,
}

/// One ground-truth unit's match.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitMatch {
    pub gt_unit: i32,
    /// Best inferred unit, or None when there are no inferred trains (or
    /// the exclusive assignment left this unit out).
    pub inferred_unit: Option<i32>,
    pub agreement: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub f1: f64,
}

fn scored_match(gt: &SpikeTrain, inf: &SpikeTrain, tol_s: f64) -> (f64, usize, usize, usize, f64) {
    let m = greedy_match(&gt.times, &inf.times, tol_s);
    let agreement = {
        let denom = gt.len() + inf.len() - m;
        if denom == 0 {
            0.0
        } else {
            m as f64 / denom as f64
        }
    };
    let fn_count = gt.len() - m;
    let fp_count = inf.len() - m;
    let denom = 2 * m + fn_count + fp_count;
    let f1 = if denom == 0 {
        0.0
    } else {
        2.0 * m as f64 / denom as f64
    };
    (agreement, m, fp_count, fn_count, f1)
}

fn unmatched(gt: &SpikeTrain) -> UnitMatch {
    UnitMatch {
        gt_unit: gt.unit_id,
        inferred_unit: None,
        agreement: 0.0,
        true_positives: 0,
        false_positives: 0,
        false_negatives: gt.len(),
        f1: 0.0,
    }
}

/// Matches every ground-truth unit to an inferred unit and scores the pair
/// with agreement and F₁ = 2·TP/(2·TP + FN + FP).
pub fn match_units(
    gt: &[SpikeTrain],
    inferred: &[SpikeTrain],
    tol_s: f64,
    mode: MatchMode,
) -> Result<Vec<UnitMatch>> {
    if inferred.is_empty() {
        return Ok(gt.iter().map(unmatched).collect());
    }
    let agreements: Vec<Vec<f64>> = gt
        .iter()
        .map(|g| {
            inferred
                .iter()
                .map(|f| agreement_score(g, f, tol_s))
                .collect()
        })
        .collect();
    let assignment: Vec<Option<usize>> = match mode {
        MatchMode::PerUnit => agreements
            .iter()
            .map(|row| {
                let mut best = 0usize;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                Some(best)
            })
            .collect(),
        MatchMode::Exclusive => exclusive_assignment(&agreements)?,
    };
    Ok(gt
        .iter()
        .zip(&assignment)
        .map(|(g, pick)| match pick {
            None => unmatched(g),
            Some(j) => {
                let (agreement, tp, fp, fn_count, f1) = scored_match(g, &inferred[*j], tol_s);
                UnitMatch {
                    gt_unit: g.unit_id,
                    inferred_unit: Some(inferred[*j].unit_id),
                    agreement,
                    true_positives: tp,
                    false_positives: fp,
                    false_negatives: fn_count,
                    f1,
                }
            }
        })
        .collect())
}

/// Exact one-to-one assignment maximizing total agreement, by dynamic
/// programming over subsets of inferred units (ground-truth units may stay
/// unassigned; ties prefer assigning the lowest inferred index).
fn exclusive_assignment(agreements: &[Vec<f64>]) -> Result<Vec<Option<usize>>> {
    let n_inf = agreements.first().map_or(0, Vec::len);
    if n_inf > 16 {
        return Err(Error::Config(
            "exclusive matching supports at most 16 inferred units; use per-unit mode".into(),
        ));
    }
    let n_gt = agreements.len();
    let masks = 1usize << n_inf;
    // dp[k][mask]: best total over the first k ground-truth units using
    // exactly the inferred units in `mask`. choice: n_inf = skip.
    let mut dp = vec![f64::NEG_INFINITY; masks];
    dp[0] = 0.0;
    let mut choice = vec![vec![u8::MAX; masks]; n_gt];
    for k in 0..n_gt {
        let mut next = vec![f64::NEG_INFINITY; masks];
        for mask in 0..masks {
            if dp[mask] == f64::NEG_INFINITY {
                continue;
            }
            // Skip this ground-truth unit.
            if dp[mask] > next[mask] {
                next[mask] = dp[mask];
                choice[k][mask] = n_inf as u8;
            }
            for j in 0..n_inf {
                let bit = 1usize << j;
                if mask & bit != 0 {
                    continue;
                }
                let total = dp[mask] + agreements[k][j];
                let target = mask | bit;
                if total > next[target] {
                    next[target] = total;
                    choice[k][target] = j as u8;
                }
            }
        }
        dp = next;
    }
    let mut best_mask = 0;
    for mask in 0..masks {
        if dp[mask] > dp[best_mask] {
            best_mask = mask;
        }
    }
    let mut picks = vec![None; n_gt];
    let mut mask = best_mask;
    for k in (0..n_gt).rev() {
        let c = choice[k][mask];
        if c == u8::MAX {
            // Unreachable state chain; treat as skip.
            continue;
        }
        if (c as usize) < n_inf {
            picks[k] = Some(c as usize);
            mask &= !(1usize << c);
        }
    }
    Ok(picks)
}

/// Detection quality against all ground-truth spikes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectionMetrics {
    /// Matched detections / total detections (NaN when nothing was
    /// detected).
    pub precision: f64,
    /// Unmatched detections / total ground-truth spikes (NaN when there is
    /// no ground truth).
    pub fp_rate: f64,
}

/// Scores detected event times against the merged ground-truth times.
pub fn detection_metrics(gt_all: &[f64], detected: &[f64], tol_s: f64) -> DetectionMetrics {
    let m = greedy_match(gt_all, detected, tol_s);
    let precision = if detected.is_empty() {
        f64::NAN
    } else {
        m as f64 / detected.len() as f64
    };
    let fp_rate = if gt_all.is_empty() {
        f64::NAN
    } else {
        (detected.len() - m) as f64 / gt_all.len() as f64
    };
    DetectionMetrics { precision, fp_rate }
}

/// Event-level confusion counts: rows are ground-truth units plus a final
/// noise row, columns are inferred labels plus a final UNASSIGNED column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Confusion {
    pub matrix: Vec<Vec<usize>>,
    pub n_gt_units: usize,
    pub n_labels: usize,
}

impl Confusion {
    pub fn noise_row(&self) -> &[usize] {
        &self.matrix[self.n_gt_units]
    }
}

/// Attributes each labeled event to the ground-truth unit with the nearest
/// spike within `tol_s` (ties to the lower unit id) or to noise, and tallies
/// against its label.
pub fn confusion_matrix(
    gt: &[SpikeTrain],
    events: &[(f64, i32)],
    n_labels: usize,
    tol_s: f64,
) -> Confusion {
    let n_gt = gt.len();
    let mut matrix = vec![vec![0usize; n_labels + 1]; n_gt + 1];
    for &(t, label) in events {
        let mut best: Option<(f64, usize)> = None;
        for (u, train) in gt.iter().enumerate() {
            let idx = train.times.partition_point(|&x| x < t);
            for cand in idx.saturating_sub(1)..(idx + 1).min(train.times.len()) {
                let d = (train.times[cand] - t).abs();
                if d <= tol_s && best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, u));
                }
            }
        }
        let row = best.map_or(n_gt, |(_, u)| u);
        let col = if label == UNASSIGNED {
            n_labels
        } else {
            (label as usize).min(n_labels)
        };
        matrix[row][col] += 1;
    }
    Confusion {
        matrix,
        n_gt_units: n_gt,
        n_labels,
    }
}

/// Emission sparsity over logged presentations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SparsityMetrics {
    /// Mean over waveforms and neurons of the fraction of silent steps.
    pub temporal: f64,
    /// Mean over waveforms of how many neurons emitted at least once.
    pub spatial: f64,
}

/// Computes sparsity from per-waveform, per-step emission vectors.
pub fn sparsity_metrics<T: Scalar>(logs: &[Vec<Vec<T>>]) -> SparsityMetrics {
    if logs.is_empty() {
        return SparsityMetrics {
            temporal: f64::NAN,
            spatial: f64::NAN,
        };
    }
    let mut temporal_sum = 0.0;
    let mut temporal_count = 0usize;
    let mut spatial_sum = 0.0;
    for log in logs {
        let n_steps = log.len();
        if n_steps == 0 {
            continue;
        }
        let n_neurons = log[0].len();
        let mut zero_steps = vec![0usize; n_neurons];
        for step in log {
            for (z, &a) in zero_steps.iter_mut().zip(step) {
                if a == T::zero() {
                    *z += 1;
                }
            }
        }
        let mut active = 0usize;
        for &z in &zero_steps {
            temporal_sum += z as f64 / n_steps as f64;
            if z < n_steps {
                active += 1;
            }
        }
        temporal_count += n_neurons;
        spatial_sum += active as f64;
    }
    SparsityMetrics {
        temporal: temporal_sum / temporal_count as f64,
        spatial: spatial_sum / logs.len() as f64,
    }
}

/// Cosine similarity between two flattened templates.
pub fn template_cosine_similarity<T: Scalar>(t1: &[T], t2: &[T]) -> Result<f64> {
    if t1.len() != t2.len() {
        return Err(Error::Dimension {
            context: "template cosine",
            expected: t1.len(),
            got: t2.len(),
        });
    }
    let n1 = t1.iter().map(|&v| v * v).sum::<T>().sqrt().to_f64_lossy();
    let n2 = t2.iter().map(|&v| v * v).sum::<T>().sqrt().to_f64_lossy();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector("template cosine"));
    }
    let dot = t1
        .iter()
        .zip(t2)
        .map(|(&a, &b)| a.to_f64_lossy() * b.to_f64_lossy())
        .sum::<f64>();
    Ok(dot / (n1 * n2))
}

/// Full evaluation bundle for one sorted recording.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchReport {
    pub pairs: Vec<UnitMatch>,
    pub detection_precision: f64,
    pub detection_fp_rate: f64,
    pub confusion: Confusion,
}

impl MatchReport {
    /// Mean F₁ over ground-truth units.
    pub fn mean_f1(&self) -> f64 {
        if self.pairs.is_empty() {
            return f64::NAN;
        }
        self.pairs.iter().map(|p| p.f1).sum::<f64>() / self.pairs.len() as f64
    }
}

/// Scores labeled events against ground truth, considering only activity at
/// or after `t_from` (training burn-in excluded). `n_labels` is the number
/// of possible non-UNASSIGNED labels (the sorter's cluster count).
pub fn evaluate_sorting(
    gt_trains: &[Vec<f64>],
    times: &[f64],
    labels: &[i32],
    n_labels: usize,
    tol_s: f64,
    t_from: f64,
    mode: MatchMode,
) -> Result<MatchReport> {
    if times.len() != labels.len() {
        return Err(Error::Dimension {
            context: "evaluate_sorting labels",
            expected: times.len(),
            got: labels.len(),
        });
    }
    let gt: Vec<SpikeTrain> = gt_trains
        .iter()
        .enumerate()
        .map(|(u, t)| {
            SpikeTrain::new(
                u as i32,
                t.iter().copied().filter(|&x| x >= t_from).collect(),
            )
        })
        .collect::<Result<_>>()?;
    let events: Vec<(f64, i32)> = times
        .iter()
        .zip(labels)
        .filter(|(&t, _)| t >= t_from)
        .map(|(&t, &l)| (t, l))
        .collect();
    let mut inferred = Vec::with_capacity(n_labels);
    for label in 0..n_labels as i32 {
        let times: Vec<f64> = events
            .iter()
            .filter(|(_, l)| *l == label)
            .map(|(t, _)| *t)
            .collect();
        inferred.push(SpikeTrain::new(label, times)?);
    }
    let pairs = match_units(&gt, &inferred, tol_s, mode)?;
    let mut gt_all: Vec<f64> = gt.iter().flat_map(|t| t.times.iter().copied()).collect();
    gt_all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let detected: Vec<f64> = events.iter().map(|(t, _)| *t).collect();
    let det = detection_metrics(&gt_all, &detected, tol_s);
    let confusion = confusion_matrix(&gt, &events, n_labels, tol_s);
    Ok(MatchReport {
        pairs,
        detection_precision: det.precision,
        detection_fp_rate: det.fp_rate,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train(id: i32, times: &[f64]) -> SpikeTrain {
        SpikeTrain::new(id, times.to_vec()).unwrap()
    }

    #[test]
    fn spike_train_validation() {
        assert!(SpikeTrain::new(0, vec![1.0, 2.0, 3.0]).is_ok());
        assert!(SpikeTrain::new(0, vec![1.0, 1.0]).is_err());
        assert!(SpikeTrain::new(0, vec![2.0, 1.0]).is_err());
        assert!(SpikeTrain::new(0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn agreement_hand_cases() {
        let a = train(0, &[1.0, 2.0]);
        let b = train(1, &[1.0005, 5.0]);
        let s = agreement_score(&a, &b, DEFAULT_TOL_S);
        assert!((s - 1.0 / 3.0).abs() < 1e-12);

        let c = train(0, &[1.0, 2.0, 3.0]);
        assert_eq!(agreement_score(&c, &c, DEFAULT_TOL_S), 1.0);

        let d = train(1, &[1.5, 2.5]);
        assert_eq!(agreement_score(&c, &d, DEFAULT_TOL_S), 0.0);

        let empty = train(2, &[]);
        assert_eq!(agreement_score(&empty, &empty, DEFAULT_TOL_S), 0.0);
        assert_eq!(agreement_score(&c, &empty, DEFAULT_TOL_S), 0.0);
    }

    #[test]
    fn agreement_symmetric_and_shift_invariant() {
        // Pseudo-random trains with generic (untied) spacings.
        let mut h = 0x1234_5678u64;
        let mut next = move || {
            h ^= h << 13;
            h ^= h >> 7;
            h ^= h << 17;
            (h >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let mut ta = Vec::new();
            let mut tb = Vec::new();
            let mut t = 0.0;
            for _ in 0..50 {
                t += 0.0005 + 0.01 * next();
                ta.push(t);
                if next() > 0.3 {
                    tb.push(t + 0.0015 * (next() - 0.5));
                }
            }
            tb.sort_by(|a, b| a.partial_cmp(b).unwrap());
            tb.dedup_by(|a, b| *a <= *b);
            let a = train(0, &ta);
            let b = train(1, &tb);
            let fwd = agreement_score(&a, &b, DEFAULT_TOL_S);
            let rev = agreement_score(&b, &a, DEFAULT_TOL_S);
            assert!((fwd - rev).abs() < 1e-12);

            let shift = 17.25;
            let a2 = train(0, &ta.iter().map(|t| t + shift).collect::<Vec<_>>());
            let b2 = train(1, &tb.iter().map(|t| t + shift).collect::<Vec<_>>());
            let shifted = agreement_score(&a2, &b2, DEFAULT_TOL_S);
            assert!((fwd - shifted).abs() < 1e-12);
        }
    }

    #[test]
    fn matching_never_exceeds_tolerance() {
        let a = train(0, &[1.0, 2.0, 3.0]);
        let b = train(1, &[1.0011, 2.0012, 3.5]);
        assert_eq!(agreement_score(&a, &b, DEFAULT_TOL_S), 0.0);
        let c = train(1, &[1.0009]);
        assert!(agreement_score(&a, &c, DEFAULT_TOL_S) > 0.0);
    }

    #[test]
    fn match_units_hand_case() {
        let gt = vec![train(0, &[1.0, 2.0, 3.0]), train(1, &[10.0, 11.0])];
        let inferred = vec![
            train(0, &[1.0005, 2.0005, 3.2]),
            train(1, &[10.0002]),
            train(2, &[50.0]),
        ];
        let report = match_units(&gt, &inferred, DEFAULT_TOL_S, MatchMode::PerUnit).unwrap();
        assert_eq!(report[0].inferred_unit, Some(0));
        assert!((report[0].agreement - 0.5).abs() < 1e-12);
        assert_eq!(report[0].true_positives, 2);
        assert_eq!(report[0].false_positives, 1);
        assert_eq!(report[0].false_negatives, 1);
        assert!((report[0].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(report[1].inferred_unit, Some(1));
        assert!((report[1].agreement - 0.5).abs() < 1e-12);
        assert!((report[1].f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn f1_is_harmonic_mean_of_precision_recall()  {
        let gt = vec![train(0, &[1.0, 2.0, 3.0, 4.0])];
        let inferred = vec![train(0, &[1.0005, 2.0005, 7.0, 8.0, 9.0])];
        let report = match_units(&gt, &inferred, DEFAULT_TOL_S, MatchMode::PerUnit).unwrap();
        let p = &report[0];
        let precision =
            p.true_positives as f64 / (p.true_positives + p.false_positives) as f64;
        let recall = p.true_positives as f64 / (p.true_positives + p.false_negatives) as f64;
        let harmonic = 2.0 * precision * recall / (precision + recall);
        assert!((p.f1 - harmonic).abs() < 1e-12);
    }

    #[test]
    fn per_unit_allows_sharing_exclusive_does_not() {
        let gt = vec![
            train(0, &[1.0, 2.0, 3.0]),
            train(1, &[1.0002, 2.0002, 3.0002]),
        ];
        let inferred = vec![
            train(0, &[1.0001, 2.0001, 3.0001]),
            train(1, &[1.0009, 2.0009, 3.0009]),
        ];
        let shared = match_units(&gt, &inferred, DEFAULT_TOL_S, MatchMode::PerUnit).unwrap();
        assert_eq!(shared[0].inferred_unit, Some(0));
        assert_eq!(shared[1].inferred_unit, Some(0), "tie should pick lower index");
        let exclusive = match_units(&gt, &inferred, DEFAULT_TOL_S, MatchMode::Exclusive).unwrap();
        let mut picks: Vec<i32> = exclusive.iter().filter_map(|p| p.inferred_unit).collect();
        picks.sort_unstable();
        assert_eq!(picks, vec![0, 1]);
        let total: f64 = exclusive.iter().map(|p| p.agreement).sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_inferred_unit_scores_zero() {
        let gt = vec![train(0, &[1.0, 2.0])];
        let inferred = vec![train(0, &[])];
        let report = match_units(&gt, &inferred, DEFAULT_TOL_S, MatchMode::PerUnit).unwrap();
        assert_eq!(report[0].agreement, 0.0);
        assert_eq!(report[0].f1, 0.0);
        let none = match_units(&gt, &[], DEFAULT_TOL_S, MatchMode::PerUnit).unwrap();
        assert_eq!(none[0].inferred_unit, None);
        assert_eq!(none[0].false_negatives, 2);
    }

    #[test]
    fn detection_metric_cases() {
        let gt = [1.0, 2.0, 3.0];
        let det = detection_metrics(&gt, &[1.0002, 2.0003, 3.0001], DEFAULT_TOL_S);
        assert_eq!(det.precision, 1.0);
        assert_eq!(det.fp_rate, 0.0);

        let det = detection_metrics(&gt, &[1.0002, 5.0], DEFAULT_TOL_S);
        assert!((det.precision - 0.5).abs() < 1e-12);
        assert!((det.fp_rate - 1.0 / 3.0).abs() < 1e-12);

        let det = detection_metrics(&[], &[1.0], DEFAULT_TOL_S);
        assert_eq!(det.precision, 0.0);
        assert!(det.fp_rate.is_nan());

        let det = detection_metrics(&gt, &[], DEFAULT_TOL_S);
        assert!(det.precision.is_nan());
        assert_eq!(det.fp_rate, 0.0);
    }

    #[test]
    fn sparsity_hand_cases() {
        let silent: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0, 0.0, 0.0]; 10]; 3];
        let s = sparsity_metrics(&silent);
        assert_eq!(s.temporal, 1.0);
        assert_eq!(s.spatial, 0.0);

        let busy: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.5, 1.0]; 8]; 2];
        let s = sparsity_metrics(&busy);
        assert_eq!(s.temporal, 0.0);
        assert_eq!(s.spatial, 2.0);

        // One neuron silent, one active half the steps.
        let mixed: Vec<Vec<Vec<f64>>> = vec![vec![
            vec![0.0, 0.3],
            vec![0.0, 0.0],
            vec![0.0, 0.3],
            vec![0.0, 0.0],
        ]];
        let s = sparsity_metrics(&mixed);
        assert!((s.temporal - 0.75).abs() < 1e-12);
        assert_eq!(s.spatial, 1.0);

        let empty: Vec<Vec<Vec<f64>>> = Vec::new();
        assert!(sparsity_metrics(&empty).temporal.is_nan());
    }

    #[test]
    fn template_cosine_cases() {
        let a = [1.0, 0.0, 2.0];
        assert!((template_cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let b = [0.0, 3.0, 0.0];
        assert!(template_cosine_similarity(&a, &b).unwrap().abs() < 1e-12);
        let c = [-1.0, 0.0, -2.0];
        assert!((template_cosine_similarity(&a, &c).unwrap() + 1.0).abs() < 1e-12);
        assert!(template_cosine_similarity(&a, &[0.0, 0.0, 0.0]).is_err());
        assert!(template_cosine_similarity(&a, &[1.0]).is_err());
    }

    #[test]
    fn confusion_attributes_events() {
        let gt = vec![train(0, &[1.0, 2.0]), train(1, &[5.0])];
        let events = vec![
            (1.0002, 3),      // unit 0 detected, labeled 3
            (2.0001, 3),      // unit 0, labeled 3
            (5.0003, 0),      // unit 1, labeled 0
            (9.0, UNASSIGNED), // noise event, unassigned
            (1.5, 2),         // noise event, labeled 2
        ];
        let c = confusion_matrix(&gt, &events, 4, DEFAULT_TOL_S);
        assert_eq!(c.matrix[0][3], 2);
        assert_eq!(c.matrix[1][0], 1);
        assert_eq!(c.noise_row()[4], 1);
        assert_eq!(c.noise_row()[2], 1);
        let total: usize = c.matrix.iter().flatten().sum();
        assert_eq!(total, events.len());
    }

    #[test]
    fn evaluate_sorting_end_to_end_hand_case() {
        let gt = vec![vec![0.5, 1.0, 2.0], vec![1.5, 2.5]];
        // Events: one early (excluded by t_from), rest labeled mostly right.
        let times = vec![0.5, 1.0002, 1.5001, 2.0003, 2.5002, 3.0];
        let labels = vec![0, 0, 1, 0, 1, UNASSIGNED];
        let report =
            evaluate_sorting(&gt, &times, &labels, 3, DEFAULT_TOL_S, 0.9, MatchMode::PerUnit)
                .unwrap();
        // After t_from = 0.9: gt0 has {1.0, 2.0} matched by label 0 twice.
        assert_eq!(report.pairs[0].inferred_unit, Some(0));
        assert_eq!(report.pairs[0].true_positives, 2);
        assert_eq!(report.pairs[0].f1, 1.0);
        assert_eq!(report.pairs[1].inferred_unit, Some(1));
        assert_eq!(report.pairs[1].f1, 1.0);
        // 5 post-window events, 4 matched to gt times, 1 unmatched.
        assert!((report.detection_precision - 0.8).abs() < 1e-12);
        assert!((report.detection_fp_rate - 0.25).abs() < 1e-12);
        assert!((report.mean_f1() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_filters_inclusive_exclusive() {
        let t = train(0, &[1.0, 2.0, 3.0]);
        let w = t.window(2.0, 3.0);
        assert_eq!(w.times, vec![2.0]);
    }
}
