//! Euclidean distance matrices and unit-square layout normalization.

use nalgebra::DMatrix;

use crate::data::Layout2D;
use crate::error::{Error, Result};

/// Symmetric, non-negative, zero-diagonal distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(DMatrix<f64>);

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal, non-negativity and finiteness.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let n = m.nrows();
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::InvalidDataset(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let v = m[(i, j)];
                if !v.is_finite() || v < 0.0 || v != m[(j, i)] {
                    return Err(Error::InvalidDataset(format!(
                        "invalid distance entry at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix(m))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Mean over the n(n−1)/2 pairs i < j.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for j in 1..n {
            for i in 0..j {
                sum += self.0[(i, j)];
            }
        }
        sum / (n * (n - 1) / 2) as f64
    }

    /// Divides every entry by the mean off-diagonal distance; errors when that mean is zero.
    pub fn mean_normalized(&self) -> Result<DistanceMatrix> {
        let mean = self.mean_off_diagonal();
        if mean <= 0.0 {
            return Err(Error::DegenerateEmbedding);
        }
        Ok(DistanceMatrix(self.0.map(|v| v / mean)))
    }
}

/// Euclidean distances between the rows of `points`.
pub fn pairwise_distances(points: &DMatrix<f64>) -> DistanceMatrix {
    let n = points.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sq = 0.0;
            for k in 0..points.ncols() {
                let diff = points[(i, k)] - points[(j, k)];
                sq += diff * diff;
            }
            let d = sq.sqrt();
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    DistanceMatrix(out)
}

/// Rescales a layout into the unit square without distorting its aspect ratio.
///
/// The longer axis is mapped onto [0, 1] by min–max; the shorter axis gets the same
/// scale factor and is centered. A degenerate axis (all points share one value) therefore
/// lands on 0.5.
pub fn normalize_layout(layout: &Layout2D) -> Result<Layout2D> {
    let coords = normalize_coords(layout.coords())?;
    Layout2D::new(layout.ids().to_vec(), coords)
}

/// [`normalize_layout`] on a bare n×2 coordinate block.
pub fn normalize_coords(coords: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if coords.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: coords.ncols(),
        });
    }
    if coords.nrows() == 0 {
        return Err(Error::DegenerateLayout);
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for i in 0..coords.nrows() {
        for a in 0..2 {
            lo[a] = lo[a].min(coords[(i, a)]);
            hi[a] = hi[a].max(coords[(i, a)]);
        }
    }
    let range = [hi[0] - lo[0], hi[1] - lo[1]];
    let scale = range[0].max(range[1]);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateLayout);
    }
    let offset = [
        (1.0 - range[0] / scale) / 2.0,
        (1.0 - range[1] / scale) / 2.0,
    ];
    Ok(DMatrix::from_fn(coords.nrows(), 2, |i, a| {
        ((coords[(i, a)] - lo[a]) / scale + offset[a]).clamp(0.0, 1.0)
    }))
}
