//! Shared oracles and frozen reference values for integration tests.
//!
//! Everything here is deliberately independent of the library under test:
//! plain `f64` loops, a local xorshift generator, and a textbook proximal
//! gradient solver. The frozen constants were computed once with an
//! independent scientific stack and must not be regenerated from this
//! crate's own output.

#![allow(dead_code)]

/// Frozen band-pass magnitude response of the 3rd-order Butterworth
/// 300–3000 Hz filter at 10 kHz sampling (bilinear transform with
/// prewarped band edges). Pairs of (frequency Hz, expected |H|).
pub const BANDPASS_FROZEN_MAGNITUDES: [(f64, f64); 5] = [
    (50.0, 0.003728697929),
    (300.0, 0.707106781187),
    (1000.0, 0.999999979114),
    (3000.0, 0.707106781187),
    (4000.0, 0.075099284100),
];

/// Frozen hand trace of the temporally diffused quantizer: constant
/// pre-quantization activation 0.4 with step s = 1 emits this pattern and
/// ends with zero carry.
pub const TDQ_FROZEN_TRACE_INPUT: f64 = 0.4;
pub const TDQ_FROZEN_TRACE_EMISSIONS: [f64; 5] = [0.0, 0.0, 1.0, 0.0, 1.0];
pub const TDQ_FROZEN_TRACE_FINAL_CARRY: f64 = 0.0;

/// Raw MAD of a standard normal distribution (the 0.6745 quantile constant;
/// no Gaussian consistency rescaling is applied anywhere in the pipeline).
pub const STD_NORMAL_MAD: f64 = 0.6745;

/// Frozen small nonnegative-LASSO instance: dictionary and input generated
/// by [`Xorshift64`] seeded with `LASSO_FROZEN_SEED` (row-major fill, see
/// [`frozen_lasso_problem`]), lambda = 0.03. The optimal objective was
/// computed by an independent ISTA run (200k iterations, step 1/L).
pub const LASSO_FROZEN_SEED: u64 = 0x9E37_79B9_7F4A_7C15;
pub const LASSO_FROZEN_L: usize = 5;
pub const LASSO_FROZEN_M: usize = 8;
pub const LASSO_FROZEN_LAMBDA: f64 = 0.03;
pub const LASSO_FROZEN_OBJECTIVE: f64 = 0.056957750369752;
pub const LASSO_FROZEN_SUPPORT: usize = 5;

/// Minimal xorshift64 generator so oracle problems never depend on the
/// crate's own RNG plumbing.
pub struct Xorshift64 {
    state: u64,
}

impl Xorshift64 {
    pub fn new(seed: u64) -> Self {
        assert_ne!(seed, 0, "xorshift64 state must be nonzero");
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut s = self.state;
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        self.state = s;
        s
    }

    /// Uniform draw in [-1, 1).
    pub fn uniform_pm1(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

/// A dense column-major matrix of unit-norm columns plus a unit-norm input,
/// generated from a seed. Entries are filled row-major (row by row) to match
/// the frozen reference computation exactly.
pub fn random_lasso_problem(seed: u64, l: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = Xorshift64::new(seed);
    // Row-major fill, then transpose into column-major storage.
    let mut rows = vec![vec![0.0; m]; l];
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.uniform_pm1();
        }
    }
    let mut d = vec![0.0; l * m];
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            d[j * l + i] = v;
        }
    }
    for j in 0..m {
        let col = &mut d[j * l..(j + 1) * l];
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in col.iter_mut() {
            *v /= norm;
        }
    }
    let mut x: Vec<f64> = (0..l).map(|_| rng.uniform_pm1()).collect();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
    (d, x)
}

/// The frozen reference problem behind [`LASSO_FROZEN_OBJECTIVE`].
pub fn frozen_lasso_problem() -> (Vec<f64>, Vec<f64>) {
    random_lasso_problem(LASSO_FROZEN_SEED, LASSO_FROZEN_L, LASSO_FROZEN_M)
}

/// Nonnegative-LASSO objective 0.5‖x − Da‖² + λ‖a‖₁ for column-major D.
pub fn lasso_objective(d: &[f64], l: usize, m: usize, x: &[f64], a: &[f64], lambda: f64) -> f64 {
    let mut resid = x.to_vec();
    for j in 0..m {
        let aj = a[j];
        if aj != 0.0 {
            for i in 0..l {
                resid[i] -= d[j * l + i] * aj;
            }
        }
    }
    let fit: f64 = resid.iter().map(|v| v * v).sum::<f64>() * 0.5;
    let penalty: f64 = lambda * a.iter().sum::<f64>();
    fit + penalty
}

/// Largest eigenvalue of DᵀD by power iteration (for the ISTA step size).
fn lipschitz(d: &[f64], l: usize, m: usize) -> f64 {
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut lambda_max = 1.0;
    for _ in 0..200 {
        // w = Dᵀ(D v)
        let mut dv = vec![0.0; l];
        for j in 0..m {
            for i in 0..l {
                dv[i] += d[j * l + i] * v[j];
            }
        }
        let mut w = vec![0.0; m];
        for j in 0..m {
            for i in 0..l {
                w[j] += d[j * l + i] * dv[i];
            }
        }
        lambda_max = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if lambda_max == 0.0 {
            return 1.0;
        }
        for j in 0..m {
            v[j] = w[j] / lambda_max;
        }
    }
    lambda_max
}

/// Proximal-gradient (ISTA) solver for min_a≥0 0.5‖x − Da‖² + λ‖a‖₁.
///
/// Fixed step 1/L with L from power iteration; `iters` in the tens of
/// thousands reaches well past the tolerances any test here asserts.
pub fn ista_nonneg_lasso(
    d: &[f64],
    l: usize,
    m: usize,
    x: &[f64],
    lambda: f64,
    iters: usize,
) -> Vec<f64> {
    let step = 1.0 / lipschitz(d, l, m).max(1e-12);
    let mut a = vec![0.0; m];
    for _ in 0..iters {
        // gradient of the fit term: Dᵀ(Da − x)
        let mut resid = vec![0.0; l];
        for j in 0..m {
            let aj = a[j];
            if aj != 0.0 {
                for i in 0..l {
                    resid[i] += d[j * l + i] * aj;
                }
            }
        }
        for i in 0..l {
            resid[i] -= x[i];
        }
        for j in 0..m {
            let mut g = 0.0;
            for i in 0..l {
                g += d[j * l + i] * resid[i];
            }
            a[j] = (a[j] - step * (g + lambda)).max(0.0);
        }
    }
    a
}

/// Greedy nearest-first matching count between two sorted time lists —
/// brute-force reference for agreement scoring.
pub fn greedy_match_count(a: &[f64], b: &[f64], tol_s: f64) -> usize {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &ta) in a.iter().enumerate() {
        for (j, &tb) in b.iter().enumerate() {
            let d = (ta - tb).abs();
            if d <= tol_s {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap().then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
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
