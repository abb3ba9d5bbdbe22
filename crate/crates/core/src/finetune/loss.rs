//! The two feedback losses and their exact gradients with respect to the head parameters.
//!
//! Both losses act on mean-normalized distances: embedding distances over the involved
//! points are divided by their mean, which makes the losses invariant to a global rescaling
//! of the embedding. The derivative of `‖u‖` at `u = 0` is taken to be 0.

use nalgebra::{DMatrix, DVector};

use crate::data::{FeatureMatrix, ResolvedInteraction};
use crate::error::{Error, Result};
use crate::finetune::head::{EmbeddingHead, HeadGradient};
use crate::finetune::triplets::Triplet;
use crate::geometry::pairwise_distances;

/// Cached forward pass over a subset of dataset rows.
struct Forward {
    x: Vec<DVector<f64>>,
    h: Vec<DVector<f64>>,
    z: DMatrix<f64>,
}

fn forward(head: &EmbeddingHead, features: &FeatureMatrix, rows: &[usize]) -> Result<Forward> {
    if features.d() != head.d() {
        return Err(Error::DimensionMismatch {
            expected: head.d(),
            found: features.d(),
        });
    }
    let mut x = Vec::with_capacity(rows.len());
    let mut h = Vec::with_capacity(rows.len());
    let mut z = DMatrix::zeros(rows.len(), head.d());
    for (r, &i) in rows.iter().enumerate() {
        let xi: Vec<f64> = features.data().row(i).iter().copied().collect();
        let (hi, zi) = head.forward_row(&xi);
        z.set_row(r, &zi.transpose());
        x.push(DVector::from_vec(xi));
        h.push(hi);
    }
    Ok(Forward { x, h, z })
}

/// Backpropagates `dL/dz` (one row per cached point) through the residual block.
fn backward(head: &EmbeddingHead, fwd: &Forward, grad_z: &DMatrix<f64>) -> HeadGradient {
    let mut g = EmbeddingHead::zeros(head.d(), head.hidden());
    for r in 0..fwd.x.len() {
        let gz = grad_z.row(r).transpose();
        let h = &fwd.h[r];
        g.b += &gz * h.transpose();
        g.b_bias += &gz;
        let gh = head.b.transpose() * &gz;
        let gpre = gh.component_mul(&h.map(|v| 1.0 - v * v));
        g.a += &gpre * fwd.x[r].transpose();
        g.a_bias += &gpre;
    }
    g
}

/// Chain rule from a symmetric matrix of `dL/dD_ij` to `dL/dz_i`.
fn distance_grad_to_points(
    z: &DMatrix<f64>,
    dist: &DMatrix<f64>,
    grad_dist: &DMatrix<f64>,
) -> DMatrix<f64> {
    let m = z.nrows();
    let mut gz = DMatrix::zeros(m, z.ncols());
    for i in 0..m {
        for j in (i + 1)..m {
            let g = grad_dist[(i, j)];
            let d = dist[(i, j)];
            if g == 0.0 || d == 0.0 {
                continue;
            }
            for k in 0..z.ncols() {
                let t = g * (z[(i, k)] - z[(j, k)]) / d;
                gz[(i, k)] += t;
                gz[(j, k)] -= t;
            }
        }
    }
    gz
}

/// Stress between mean-normalized 2D interaction distances and mean-normalized embedding
/// distances, summed over all pairs of moved points.
pub fn mds_inverse_loss(
    head: &EmbeddingHead,
    features: &FeatureMatrix,
    interaction: &ResolvedInteraction,
) -> Result<(f64, HeadGradient)> {
    let m = interaction.len();
    if m < 2 {
        return Err(Error::InvalidInteraction(vec![format!(
            "need at least 2 moved points, got {m}"
        )]));
    }
    let target = pairwise_distances(&interaction.coords)
        .mean_normalized()
        .map_err(|_| Error::DegenerateInteraction)?;
    let fwd = forward(head, features, &interaction.indices)?;
    let dist = pairwise_distances(&fwd.z);
    let mean = dist.mean_off_diagonal();
    if !(mean > 0.0) {
        return Err(Error::DegenerateEmbedding);
    }
    let pairs = (m * (m - 1) / 2) as f64;
    let mut loss = 0.0;
    let mut resid_dot_s = 0.0;
    for j in 1..m {
        for i in 0..j {
            let s = dist.get(i, j) / mean;
            let r = target.get(i, j) - s;
            loss += r * r;
            resid_dot_s += r * s;
        }
    }
    // dL/dD_ij = (−2 r_ij + (2/P) Σ_p r_p s_p) / mean, where r = target − s
    let shared = 2.0 * resid_dot_s / pairs;
    let mut grad_dist = DMatrix::zeros(m, m);
    for j in 1..m {
        for i in 0..j {
            let r = target.get(i, j) - dist.get(i, j) / mean;
            grad_dist[(i, j)] = (-2.0 * r + shared) / mean;
        }
    }
    let gz = distance_grad_to_points(&fwd.z, dist.as_matrix(), &grad_dist);
    Ok((loss, backward(head, &fwd, &gz)))
}

/// Mean hinge `max(0, s_ap − s_an + margin)` over `triplets`, where `s` are embedding
/// distances divided by the mean pairwise distance among all points the triplets touch.
pub fn triplet_margin_loss(
    head: &EmbeddingHead,
    features: &FeatureMatrix,
    triplets: &[Triplet],
    margin: f64,
) -> Result<(f64, HeadGradient)> {
    if triplets.is_empty() {
        return Err(Error::EmptyTriplets);
    }
    let lookup = |id: &crate::data::ItemId| {
        features.index_of(id.as_str()).ok_or_else(|| Error::NotFound {
            kind: "item",
            id: id.as_str().to_owned(),
        })
    };
    let mut rows: Vec<usize> = Vec::new();
    let mut local = Vec::with_capacity(triplets.len());
    for t in triplets {
        let mut slot = |row: usize| match rows.iter().position(|&r| r == row) {
            Some(p) => p,
            None => {
                rows.push(row);
                rows.len() - 1
            }
        };
        let a = slot(lookup(&t.anchor)?);
        let p = slot(lookup(&t.positive)?);
        let n = slot(lookup(&t.negative)?);
        local.push((a, p, n));
    }
    let fwd = forward(head, features, &rows)?;
    let dist = pairwise_distances(&fwd.z);
    let mean = dist.mean_off_diagonal();
    if !(mean > 0.0) {
        return Err(Error::DegenerateEmbedding);
    }
    let count = triplets.len() as f64;
    let m = rows.len();
    let pairs = (m * (m - 1) / 2) as f64;
    let mut loss = 0.0;
    let mut grad_dist = DMatrix::zeros(m, m);
    let mut grad_mean = 0.0;
    let add = |g: &mut DMatrix<f64>, i: usize, j: usize, v: f64| {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        g[(lo, hi)] += v;
    };
    for &(a, p, n) in &local {
        let (dap, dan) = (dist.get(a, p), dist.get(a, n));
        let hinge = (dap - dan) / mean + margin;
        if hinge > 0.0 {
            loss += hinge;
            add(&mut grad_dist, a, p, 1.0 / (count * mean));
            add(&mut grad_dist, a, n, -1.0 / (count * mean));
            grad_mean -= (dap - dan) / (count * mean * mean);
        }
    }
    loss /= count;
    if grad_mean != 0.0 {
        for j in 1..m {
            for i in 0..j {
                grad_dist[(i, j)] += grad_mean / pairs;
            }
        }
    }
    let gz = distance_grad_to_points(&fwd.z, dist.as_matrix(), &grad_dist);
    Ok((loss, backward(head, &fwd, &gz)))
}
