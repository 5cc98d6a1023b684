//! Dictionaries (feedforward weights of one LCA layer) and the derived
//! lateral-inhibition matrix.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Column norms may drift this far from 1 before operations reject the
/// dictionary.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// A dictionary of `m` unit-norm atoms over inputs of dimension `l`,
/// stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary<T> {
    l: usize,
    m: usize,
    data: Vec<T>,
}

impl<T: Scalar> Dictionary<T> {
    /// Builds a dictionary from column-major data, verifying shape and unit
    /// column norms.
    pub fn from_column_major(l: usize, m: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != l * m {
            return Err(Error::Dimension {
                context: "dictionary data length",
                expected: l * m,
                got: data.len(),
            });
        }
        let dict = Self { l, m, data };
        dict.check_unit_norms()?;
        Ok(dict)
    }

    /// Builds without the norm check, for intermediate states that will be
    /// renormalized before use.
    pub(crate) fn from_column_major_unchecked(l: usize, m: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), l * m, "dictionary data length");
        Self { l, m, data }
    }

    /// Random dictionary: i.i.d. standard Gaussian entries, columns
    /// normalized. Draws are made in `f64` so the same seed produces the
    /// same dictionary for every scalar type.
    pub fn random<R: Rng>(l: usize, m: usize, rng: &mut R) -> Self {
        let mut data = Vec::with_capacity(l * m);
        for _ in 0..l * m {
            data.push(T::from_f64_lossy(gaussian(rng)));
        }
        let mut dict = Self { l, m, data };
        dict.renormalize_columns(rng);
        dict
    }

    /// Input dimension L (rows).
    pub fn input_dim(&self) -> usize {
        self.l
    }

    /// Number of atoms M (columns).
    pub fn atom_count(&self) -> usize {
        self.m
    }

    /// Borrows atom `j`.
    pub fn column(&self, j: usize) -> &[T] {
        &self.data[j * self.l..(j + 1) * self.l]
    }

    /// Column-major backing slice.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Mutable column-major backing slice (used by learning; callers must
    /// renormalize afterwards).
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Correlations b = Dᵀx.
    pub fn correlate(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.l {
            return Err(Error::Dimension {
                context: "correlate input",
                expected: self.l,
                got: x.len(),
            });
        }
        let mut b = vec![T::zero(); self.m];
        for (j, bj) in b.iter_mut().enumerate() {
            let col = self.column(j);
            let mut acc = T::zero();
            for i in 0..self.l {
                acc += col[i] * x[i];
            }
            *bj = acc;
        }
        Ok(b)
    }

    /// Correlations b = Dᵀa for a sparse input given as (index, value)
    /// pairs over the rows of D.
    pub fn correlate_sparse(&self, nonzero: &[(usize, T)]) -> Vec<T> {
        let mut b = vec![T::zero(); self.m];
        for (j, bj) in b.iter_mut().enumerate() {
            let col = self.column(j);
            let mut acc = T::zero();
            for &(i, v) in nonzero {
                acc += col[i] * v;
            }
            *bj = acc;
        }
        b
    }

    /// Reconstruction D·a, skipping zero coefficients.
    pub fn reconstruct(&self, a: &[T]) -> Result<Vec<T>> {
        if a.len() != self.m {
            return Err(Error::Dimension {
                context: "reconstruct code",
                expected: self.m,
                got: a.len(),
            });
        }
        let mut x = vec![T::zero(); self.l];
        for (j, &aj) in a.iter().enumerate() {
            if aj != T::zero() {
                let col = self.column(j);
                for i in 0..self.l {
                    x[i] += col[i] * aj;
                }
            }
        }
        Ok(x)
    }

    /// Rescales every column to unit norm; zero-norm columns are
    /// re-initialized from a fresh random unit vector (dead-atom recovery).
    /// Returns the indices that were re-initialized.
    pub fn renormalize_columns<R: Rng>(&mut self, rng: &mut R) -> Vec<usize> {
        let mut revived = Vec::new();
        for j in 0..self.m {
            let col = &mut self.data[j * self.l..(j + 1) * self.l];
            let norm = col.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm.to_f64_lossy() < 1e-12 {
                loop {
                    for v in col.iter_mut() {
                        *v = T::from_f64_lossy(gaussian(rng));
                    }
                    let n = col.iter().map(|&v| v * v).sum::<T>().sqrt();
                    if n.to_f64_lossy() >= 1e-12 {
                        for v in col.iter_mut() {
                            *v = *v / n;
                        }
                        break;
                    }
                }
                revived.push(j);
            } else {
                for v in col.iter_mut() {
                    *v = *v / norm;
                }
            }
        }
        revived
    }

    /// Errors unless every column norm is within [`UNIT_NORM_TOL`] of 1.
    pub fn check_unit_norms(&self) -> Result<()> {
        for j in 0..self.m {
            let norm = self
                .column(j)
                .iter()
                .map(|&v| v * v)
                .sum::<T>()
                .sqrt()
                .to_f64_lossy();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::NotUnitNorm {
                    context: "dictionary column",
                    norm,
                });
            }
        }
        Ok(())
    }
}

/// One standard-Gaussian draw via Box–Muller on `f64` uniforms.
pub(crate) fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos();
        }
    }
}

/// Lateral inhibition W = −(DᵀD − I): symmetric, zero diagonal, stored
/// row-major (M × M).
#[derive(Debug, Clone)]
pub struct InhibitionMatrix<T> {
    m: usize,
    w: Vec<T>,
}

impl<T: Scalar> InhibitionMatrix<T> {
    /// Builds the inhibition matrix from a unit-norm dictionary.
    pub fn build(dict: &Dictionary<T>) -> Result<Self> {
        dict.check_unit_norms()?;
        let m = dict.atom_count();
        let l = dict.input_dim();
        let mut w = vec![T::zero(); m * m];
        for i in 0..m {
            let ci = dict.column(i);
            for j in (i + 1)..m {
                let cj = dict.column(j);
                let mut dot = T::zero();
                for k in 0..l {
                    dot += ci[k] * cj[k];
                }
                w[i * m + j] = -dot;
                w[j * m + i] = -dot;
            }
        }
        Ok(Self { m, w })
    }

    /// Matrix size M.
    pub fn size(&self) -> usize {
        self.m
    }

    /// Entry (i, j).
    pub fn get(&self, i: usize, j: usize) -> T {
        self.w[i * self.m + j]
    }

    /// Accumulates out += W·a for a sparse emission vector given as
    /// (index, value) pairs. Rows are contiguous, so the inner loop runs
    /// once per active neuron over its row.
    pub fn accumulate_sparse(&self, nonzero: &[(usize, T)], out: &mut [T]) {
        for &(j, aj) in nonzero {
            let row = &self.w[j * self.m..(j + 1) * self.m];
            for (o, &wij) in out.iter_mut().zip(row.iter()) {
                // W is symmetric, so row j doubles as column j.
                *o += wij * aj;
            }
        }
    }
}
