//! Layout quality against ground-truth classes.
//!
//! The adjusted score is twice the silhouette, so a silhouette of 0.5 (points about twice as
//! far from the nearest other class as from their own) scores 1. Between 0 and 1 the layout
//! is more spread than that; above 1 it is more tightly clustered.

use serde::{Deserialize, Serialize};

use crate::data::{LabelMap, Layout2D};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalScore {
    pub silhouette: f64,
    pub adjusted: f64,
    pub n: usize,
    pub classes: usize,
}

/// Mean silhouette over all points of `layout`, classes taken from `labels`.
///
/// A point whose class has no other member scores 0.
pub fn silhouette(layout: &Layout2D, labels: &LabelMap) -> Result<f64> {
    let (score, _) = silhouette_with_classes(layout, labels)?;
    Ok(score)
}

fn silhouette_with_classes(layout: &Layout2D, labels: &LabelMap) -> Result<(f64, usize)> {
    let n = layout.len();
    if n < 3 {
        return Err(Error::NotEnough {
            needed: "3 points",
            got: n.to_string(),
        });
    }
    let class = labels.class_indices(layout.ids())?;
    let k = class.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &c in &class {
        sizes[c] += 1;
    }
    let present = sizes.iter().filter(|&&s| s > 0).count();
    if present < 2 {
        return Err(Error::NotEnough {
            needed: "2 classes",
            got: present.to_string(),
        });
    }
    let coords = layout.coords();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i == j {
                continue;
            }
            let dx = coords[(i, 0)] - coords[(j, 0)];
            let dy = coords[(i, 1)] - coords[(j, 1)];
            sums[class[j]] += (dx * dx + dy * dy).sqrt();
        }
        let own = class[i];
        if sizes[own] < 2 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok((total / n as f64, present))
}

/// Silhouette and its doubled, sensemaking-oriented variant.
pub fn adjusted_silhouette(layout: &Layout2D, labels: &LabelMap) -> Result<EvalScore> {
    let (s, classes) = silhouette_with_classes(layout, labels)?;
    Ok(EvalScore {
        silhouette: s,
        adjusted: 2.0 * s,
        n: layout.len(),
        classes,
    })
}
