//! Weighted-MDS baseline: per-feature weights applied before projection, learned from an
//! interaction by inverting the projection (WMDS⁻¹).
//!
//! Weights live on the probability simplex. Learning is stateless: each interaction starts
//! again from uniform weights.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, Layout2D, ResolvedInteraction};
use crate::error::{Error, Result};
use crate::geometry::pairwise_distances;
use crate::mds::{project, MdsConfig};

/// Non-negative feature weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn uniform(d: usize) -> Self {
        WeightVector(vec![1.0 / d as f64; d])
    }

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidConfig("empty weight vector".into()));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig("weights must be finite and ≥ 0".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// CSV `feature_index,weight`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let err = |e| Error::io("<writer>", e);
        writeln!(w, "feature_index,weight").map_err(err)?;
        for (k, v) in self.0.iter().enumerate() {
            writeln!(w, "{k},{v}").map_err(err)?;
        }
        Ok(())
    }
}

/// `√(Σ_k w_k (x_k − y_k)²)`.
pub fn weighted_distance(x: &[f64], y: &[f64], w: &WeightVector) -> Result<f64> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: if x.len() != w.len() { x.len() } else { y.len() },
        });
    }
    Ok(x.iter()
        .zip(y)
        .zip(&w.0)
        .map(|((a, b), wk)| wk * (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WmdsConfig {
    pub steps: usize,
    pub step_size: f64,
}

impl Default for WmdsConfig {
    fn default() -> Self {
        WmdsConfig {
            steps: 500,
            step_size: 0.05,
        }
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // absorb rounding so the sum is 1 to the last few ulps
    let sum: f64 = w.iter().sum();
    if sum > 0.0 {
        w.iter_mut().for_each(|x| *x /= sum);
    }
    w
}

/// Objective and gradient for WMDS⁻¹ on the moved points.
struct InverseProblem {
    /// Squared per-feature differences, one row per moved pair.
    sq_diff: DMatrix<f64>,
    /// Mean-normalized 2D target distance per pair.
    target: Vec<f64>,
}

impl InverseProblem {
    fn new(interaction: &ResolvedInteraction, features: &FeatureMatrix) -> Result<Self> {
        let m = interaction.len();
        let target_m = pairwise_distances(&interaction.coords)
            .mean_normalized()
            .map_err(|_| Error::DegenerateInteraction)?;
        let pairs = m * (m - 1) / 2;
        let d = features.d();
        let mut sq_diff = DMatrix::zeros(pairs, d);
        let mut target = Vec::with_capacity(pairs);
        let mut p = 0;
        for j in 1..m {
            for i in 0..j {
                let (xi, xj) = (interaction.indices[i], interaction.indices[j]);
                for k in 0..d {
                    let t = features.data()[(xi, k)] - features.data()[(xj, k)];
                    sq_diff[(p, k)] = t * t;
                }
                target.push(target_m.get(i, j));
                p += 1;
            }
        }
        Ok(InverseProblem { sq_diff, target })
    }

    fn distances(&self, w: &[f64]) -> Vec<f64> {
        (0..self.target.len())
            .map(|p| {
                self.sq_diff
                    .row(p)
                    .iter()
                    .zip(w)
                    .map(|(s, wk)| s * wk)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Normalized stress; `None` when every weighted distance is zero.
    fn loss(&self, w: &[f64]) -> Option<f64> {
        let dist = self.distances(w);
        let mean = dist.iter().sum::<f64>() / dist.len() as f64;
        if !(mean > 0.0) {
            return None;
        }
        Some(
            dist.iter()
                .zip(&self.target)
                .map(|(dw, r)| (r - dw / mean).powi(2))
                .sum(),
        )
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let dist = self.distances(w);
        let pairs = dist.len() as f64;
        let mean = dist.iter().sum::<f64>() / pairs;
        let resid: Vec<f64> = dist
            .iter()
            .zip(&self.target)
            .map(|(dw, r)| r - dw / mean)
            .collect();
        let shared = 2.0 * resid.iter().zip(&dist).map(|(r, dw)| r * dw / mean).sum::<f64>() / pairs;
        let mut g = vec![0.0; w.len()];
        for (p, dw) in dist.iter().enumerate() {
            if *dw == 0.0 {
                continue;
            }
            let g_dist = (-2.0 * resid[p] + shared) / mean;
            for (k, gk) in g.iter_mut().enumerate() {
                *gk += g_dist * self.sq_diff[(p, k)] / (2.0 * dw);
            }
        }
        g
    }
}

/// Learns simplex weights whose weighted feature distances, mean-normalized, best match the
/// mean-normalized 2D distances of the moved points. Never returns weights with higher loss
/// than the uniform start.
pub fn wmds_inverse(
    interaction: &ResolvedInteraction,
    features: &FeatureMatrix,
    cfg: &WmdsConfig,
) -> Result<WeightVector> {
    if interaction.len() < 2 {
        return Err(Error::InvalidInteraction(vec![format!(
            "need at least 2 moved points, got {}",
            interaction.len()
        )]));
    }
    let problem = InverseProblem::new(interaction, features)?;
    let mut w = WeightVector::uniform(features.d()).0;
    let mut loss = problem.loss(&w).ok_or(Error::DegenerateEmbedding)?;
    let mut step = cfg.step_size;
    for _ in 0..cfg.steps {
        let g = problem.gradient(&w);
        let proposal: Vec<f64> = w.iter().zip(&g).map(|(wk, gk)| wk - step * gk).collect();
        let candidate = project_to_simplex(&proposal);
        match problem.loss(&candidate) {
            Some(l) if l <= loss => {
                w = candidate;
                loss = l;
            }
            _ => step /= 2.0,
        }
        if step < 1e-12 {
            break;
        }
    }
    WeightVector::new(w)
}

/// Normalized WMDS⁻¹ stress of `w` on an interaction (for diagnostics and tests).
pub fn wmds_loss(
    interaction: &ResolvedInteraction,
    features: &FeatureMatrix,
    w: &WeightVector,
) -> Result<f64> {
    InverseProblem::new(interaction, features)?
        .loss(w.as_slice())
        .ok_or(Error::DegenerateEmbedding)
}

/// Scales column k by √w_k and projects with plain MDS.
pub fn wmds_project(
    features: &FeatureMatrix,
    w: &WeightVector,
    cfg: &MdsConfig,
) -> Result<Layout2D> {
    if w.len() != features.d() {
        return Err(Error::DimensionMismatch {
            expected: features.d(),
            found: w.len(),
        });
    }
    let scaled = features.data().map_with_location(|_, k, v| v * w.0[k].sqrt());
    project(&features.with_data(scaled)?, None, cfg)
}
