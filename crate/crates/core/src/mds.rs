//! Forward projection: classical (Torgerson) MDS as initializer, refined by SMACOF
//! stress majorization.
//!
//! Raw stress is `Σ_{i<j} (‖y_i − y_j‖ − δ_ij)²`. The same functional, applied to embedding
//! distances instead of layout distances, is the MDS⁻¹ fine-tuning loss in
//! [`crate::finetune`].

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, Layout2D, RngSeed};
use crate::error::{Error, Result};
use crate::finetune::EmbeddingHead;
use crate::geometry::{normalize_coords, pairwise_distances, DistanceMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdsConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: RngSeed,
}

impl Default for MdsConfig {
    fn default() -> Self {
        MdsConfig {
            max_iters: 300,
            rel_tol: 1e-6,
            seed: RngSeed(0),
        }
    }
}

impl MdsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("mds max_iters must be ≥ 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("mds rel_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Sum of squared residuals between layout distances and `target`, over the masked pairs
/// (all `i < j` when `pair_mask` is `None`).
pub fn stress(
    target: &DistanceMatrix,
    coords: &DMatrix<f64>,
    pair_mask: Option<&[(usize, usize)]>,
) -> Result<f64> {
    let n = target.n();
    if coords.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: coords.nrows(),
        });
    }
    let dist = |i: usize, j: usize| -> f64 {
        let mut sq = 0.0;
        for k in 0..coords.ncols() {
            let t = coords[(i, k)] - coords[(j, k)];
            sq += t * t;
        }
        sq.sqrt()
    };
    match pair_mask {
        Some(pairs) => {
            let mut s = 0.0;
            for &(i, j) in pairs {
                if i >= n || j >= n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: i.max(j) + 1,
                    });
                }
                let r = dist(i, j) - target.get(i, j);
                s += r * r;
            }
            Ok(s)
        }
        None => {
            let mut s = 0.0;
            for j in 1..n {
                for i in 0..j {
                    let r = dist(i, j) - target.get(i, j);
                    s += r * r;
                }
            }
            Ok(s)
        }
    }
}

/// Stress of a [`Layout2D`] against `target`.
pub fn layout_stress(
    target: &DistanceMatrix,
    layout: &Layout2D,
    pair_mask: Option<&[(usize, usize)]>,
) -> Result<f64> {
    stress(target, layout.coords(), pair_mask)
}

/// Top-two principal coordinates of the double-centered squared-distance matrix.
///
/// Each eigenvector's sign is fixed so that its largest-magnitude loading is positive.
pub fn classical_mds_init(d: &DistanceMatrix) -> Result<DMatrix<f64>> {
    let (coords, _) = classical_with_spectrum(d)?;
    Ok(coords)
}

fn classical_with_spectrum(d: &DistanceMatrix) -> Result<(DMatrix<f64>, [f64; 2])> {
    let n = d.n();
    if n < 3 {
        return Err(Error::NotEnough {
            needed: "3 points for classical MDS",
            got: n.to_string(),
        });
    }
    let sq = d.as_matrix().map(|v| v * v);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let gram = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut coords = DMatrix::zeros(n, 2);
    let mut spectrum = [0.0; 2];
    for (c, &idx) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        spectrum[c] = lambda;
        let v = eig.eigenvectors.column(idx);
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = lambda.sqrt() * sign;
        for i in 0..n {
            coords[(i, c)] = v[i] * scale;
        }
    }
    Ok((coords, spectrum))
}

/// SMACOF iterations (unit weights) starting from `init`.
///
/// Returns the final configuration and the raw-stress trace, whose first entry is the stress
/// of `init`. Stops after `max_iters` Guttman transforms, when the relative improvement falls
/// below `rel_tol`, or when stress reaches zero.
pub fn smacof(
    d: &DistanceMatrix,
    init: &DMatrix<f64>,
    cfg: &MdsConfig,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = d.n();
    if init.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: init.nrows(),
        });
    }
    cfg.validate()?;
    let mut x = init.clone();
    let mut current = stress(d, &x, None)?;
    let mut trace = vec![current];
    let dims = x.ncols();
    for _ in 0..cfg.max_iters {
        if current == 0.0 {
            break;
        }
        let dx = pairwise_distances(&x);
        let mut next = DMatrix::zeros(n, dims);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dij = dx.get(i, j);
                // zero-distance guard: 1/d treated as 0
                let bij = if dij > 0.0 { -d.get(i, j) / dij } else { 0.0 };
                diag -= bij;
                for k in 0..dims {
                    next[(i, k)] += bij * x[(j, k)];
                }
            }
            for k in 0..dims {
                next[(i, k)] += diag * x[(i, k)];
            }
        }
        next /= n as f64;
        let s = stress(d, &next, None)?;
        trace.push(s);
        let improvement = current - s;
        x = next;
        let prev = current;
        current = s;
        if improvement < cfg.rel_tol * prev {
            break;
        }
    }
    Ok((x, trace))
}

/// A projection together with the SMACOF stress trace that produced it.
#[derive(Debug, Clone)]
pub struct Projection {
    pub layout: Layout2D,
    pub stress_trace: Vec<f64>,
}

/// Embeds the features (through `head` when given), projects with classical init + SMACOF
/// and returns a unit-square layout.
pub fn project(
    features: &FeatureMatrix,
    head: Option<&EmbeddingHead>,
    cfg: &MdsConfig,
) -> Result<Layout2D> {
    project_detailed(features, head, cfg).map(|p| p.layout)
}

pub fn project_detailed(
    features: &FeatureMatrix,
    head: Option<&EmbeddingHead>,
    cfg: &MdsConfig,
) -> Result<Projection> {
    let embedded = match head {
        Some(h) => h.apply_matrix(features.data())?,
        None => features.data().clone(),
    };
    let target = pairwise_distances(&embedded).mean_normalized()?;
    let (coords, trace) = project_distances(&target, cfg)?;
    Ok(Projection {
        layout: Layout2D::new(features.ids().to_vec(), coords)?,
        stress_trace: trace,
    })
}

/// Classical init + SMACOF + normalization on an already-built distance matrix.
pub fn project_distances(
    target: &DistanceMatrix,
    cfg: &MdsConfig,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (mut init, spectrum) = classical_with_spectrum(target)?;
    if spectrum[1] <= 1e-12 * spectrum[0] && stress(target, &init, None)? > 1e-12 {
        // rank-one start would pin SMACOF to a line; open the second axis with seeded jitter
        let mut rng = cfg.seed.rng();
        let amp = 1e-3 * spectrum[0].sqrt().max(1e-12);
        for i in 0..init.nrows() {
            init[(i, 1)] += amp * rng.random_range(-1.0..1.0);
        }
    }
    let (x, trace) = smacof(target, &init, cfg)?;
    Ok((normalize_coords(&x)?, trace))
}
