use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, RngSeed};
use crate::error::{Error, Result};

/// Trainable residual transform `M(x) = x + B·tanh(A·x + a) + b`.
///
/// A fresh head has `B = 0` and `b = 0`, so it is exactly the identity map; `A` is drawn
/// from a seeded Gaussian so the hidden units are not all equal once `B` starts to move.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingHead {
    /// hidden × d
    pub(crate) a: DMatrix<f64>,
    pub(crate) a_bias: DVector<f64>,
    /// d × hidden
    pub(crate) b: DMatrix<f64>,
    pub(crate) b_bias: DVector<f64>,
}

/// Gradient of a scalar loss with respect to every head parameter, laid out like the head.
pub type HeadGradient = EmbeddingHead;

impl EmbeddingHead {
    /// Identity head with hidden width equal to `d`.
    pub fn new(d: usize, seed: RngSeed) -> Self {
        Self::with_hidden(d, d, seed)
    }

    pub fn with_hidden(d: usize, hidden: usize, seed: RngSeed) -> Self {
        let mut rng = seed.rng();
        let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("valid std");
        EmbeddingHead {
            a: DMatrix::from_fn(hidden, d, |_, _| normal.sample(&mut rng)),
            a_bias: DVector::zeros(hidden),
            b: DMatrix::zeros(d, hidden),
            b_bias: DVector::zeros(d),
        }
    }

    pub fn zeros(d: usize, hidden: usize) -> Self {
        EmbeddingHead {
            a: DMatrix::zeros(hidden, d),
            a_bias: DVector::zeros(hidden),
            b: DMatrix::zeros(d, hidden),
            b_bias: DVector::zeros(d),
        }
    }

    /// Builds a head from explicit parameter blocks (row-major slices).
    pub fn from_parts(
        d: usize,
        hidden: usize,
        a: &[f64],
        a_bias: &[f64],
        b: &[f64],
        b_bias: &[f64],
    ) -> Result<Self> {
        let check = |name: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Checkpoint(format!(
                    "block {name} has {got} values, expected {want}"
                )))
            }
        };
        check("a", a.len(), hidden * d)?;
        check("a_bias", a_bias.len(), hidden)?;
        check("b", b.len(), d * hidden)?;
        check("b_bias", b_bias.len(), d)?;
        let head = EmbeddingHead {
            a: DMatrix::from_row_slice(hidden, d, a),
            a_bias: DVector::from_column_slice(a_bias),
            b: DMatrix::from_row_slice(d, hidden, b),
            b_bias: DVector::from_column_slice(b_bias),
        };
        if head.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(head)
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.a.nrows()
    }

    pub fn param_count(&self) -> usize {
        2 * self.d() * self.hidden() + self.d() + self.hidden()
    }

    pub fn is_identity(&self) -> bool {
        self.b.iter().all(|&v| v == 0.0) && self.b_bias.iter().all(|&v| v == 0.0)
    }

    /// Parameters in checkpoint order: A, a, B, b, each row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        push_row_major(&mut out, &self.a);
        out.extend(self.a_bias.iter());
        push_row_major(&mut out, &self.b);
        out.extend(self.b_bias.iter());
        out
    }

    /// Inverse of [`to_flat`](Self::to_flat) for a head of the same shape.
    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let (d, h) = (self.d(), self.hidden());
        let mut it = flat.iter().copied();
        for i in 0..h {
            for j in 0..d {
                self.a[(i, j)] = it.next().unwrap();
            }
        }
        for i in 0..h {
            self.a_bias[i] = it.next().unwrap();
        }
        for i in 0..d {
            for j in 0..h {
                self.b[(i, j)] = it.next().unwrap();
            }
        }
        for i in 0..d {
            self.b_bias[i] = it.next().unwrap();
        }
    }

    /// Hidden activations and outputs for one input row.
    pub(crate) fn forward_row(&self, x: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let h = DVector::from_fn(self.hidden(), |r, _| {
            let mut acc = self.a_bias[r];
            for (c, &xc) in x.iter().enumerate() {
                acc += self.a[(r, c)] * xc;
            }
            acc.tanh()
        });
        let z = DVector::from_fn(self.d(), |r, _| {
            let mut branch = self.b_bias[r];
            for (c, &hc) in h.iter().enumerate() {
                branch += self.b[(r, c)] * hc;
            }
            x[r] + branch
        });
        (h, z)
    }

    /// Row-wise `M(x)` on a bare n×d matrix.
    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: x.ncols(),
            });
        }
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        let mut row = vec![0.0; x.ncols()];
        for i in 0..x.nrows() {
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = x[(i, k)];
            }
            let (_, z) = self.forward_row(&row);
            out.set_row(i, &z.transpose());
        }
        Ok(out)
    }

    /// Updated features: `M(x)` for every row, ids unchanged.
    pub fn apply(&self, features: &FeatureMatrix) -> Result<FeatureMatrix> {
        features.with_data(self.apply_matrix(features.data())?)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            d: self.d(),
            hidden: self.hidden(),
            a: row_major(&self.a),
            a_bias: self.a_bias.iter().copied().collect(),
            b: row_major(&self.b),
            b_bias: self.b_bias.iter().copied().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        ck.into_head()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// On-disk head format: dimensions plus the four parameter blocks in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub d: usize,
    pub hidden: usize,
    pub a: Vec<f64>,
    pub a_bias: Vec<f64>,
    pub b: Vec<f64>,
    pub b_bias: Vec<f64>,
}

impl Checkpoint {
    pub fn into_head(self) -> Result<EmbeddingHead> {
        EmbeddingHead::from_parts(
            self.d,
            self.hidden,
            &self.a,
            &self.a_bias,
            &self.b,
            &self.b_bias,
        )
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    push_row_major(&mut out, m);
    out
}

fn push_row_major(out: &mut Vec<f64>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
}
