//! Coordinate-driven triplet selection: positives and negatives are inferred from how far
//! apart the user placed points in 2D, not from class labels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ItemId, ResolvedInteraction, RngSeed};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripletConfig {
    /// A moved point strictly closer than this to the anchor is a positive candidate.
    pub eps_p: f64,
    /// A moved point strictly farther than this from the anchor is a negative candidate.
    pub eps_n: f64,
    pub margin: f64,
    pub triplets_per_anchor: usize,
}

impl Default for TripletConfig {
    fn default() -> Self {
        TripletConfig {
            eps_p: 0.35,
            eps_n: 0.70,
            margin: 1.0,
            triplets_per_anchor: 4,
        }
    }
}

impl TripletConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_p > 0.0 && self.eps_n > 0.0) {
            return Err(Error::InvalidConfig("eps_p and eps_n must be > 0".into()));
        }
        if !(self.eps_p < self.eps_n) {
            return Err(Error::InvalidConfig(format!(
                "eps_p ({}) must be < eps_n ({})",
                self.eps_p, self.eps_n
            )));
        }
        if !(self.margin > 0.0) {
            return Err(Error::InvalidConfig("margin must be > 0".into()));
        }
        if self.triplets_per_anchor == 0 {
            return Err(Error::InvalidConfig("triplets_per_anchor must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: ItemId,
    pub positive: ItemId,
    pub negative: ItemId,
}

/// Positive and negative candidate pools for `anchor` among the moved points.
pub fn build_triplet_pools(
    anchor: &ItemId,
    interaction: &ResolvedInteraction,
    cfg: &TripletConfig,
) -> Result<(Vec<ItemId>, Vec<ItemId>)> {
    let a = interaction
        .ids
        .iter()
        .position(|id| id == anchor)
        .ok_or_else(|| Error::AnchorNotMoved(anchor.as_str().to_owned()))?;
    let coords = interaction.unit_coords()?;
    Ok(pools_at(a, interaction, &coords, cfg))
}

fn pools_at(
    a: usize,
    interaction: &ResolvedInteraction,
    coords: &nalgebra::DMatrix<f64>,
    cfg: &TripletConfig,
) -> (Vec<ItemId>, Vec<ItemId>) {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (v, id) in interaction.ids.iter().enumerate() {
        if v == a {
            continue;
        }
        let dx = coords[(a, 0)] - coords[(v, 0)];
        let dy = coords[(a, 1)] - coords[(v, 1)];
        let dist = (dx * dx + dy * dy).sqrt();
        if dist < cfg.eps_p {
            positives.push(id.clone());
        }
        if dist > cfg.eps_n {
            negatives.push(id.clone());
        }
    }
    (positives, negatives)
}

/// Uses every moved point as an anchor in turn and draws `triplets_per_anchor` triples
/// uniformly from its pools. Anchors with an empty pool are skipped.
pub fn sample_triplets(
    interaction: &ResolvedInteraction,
    cfg: &TripletConfig,
    seed: RngSeed,
) -> Result<Vec<Triplet>> {
    cfg.validate()?;
    if interaction.len() < 2 {
        return Err(Error::InvalidInteraction(vec![format!(
            "need at least 2 moved points, got {}",
            interaction.len()
        )]));
    }
    let coords = interaction.unit_coords()?;
    let mut rng = seed.rng();
    let mut out = Vec::new();
    for a in 0..interaction.len() {
        let (pos, neg) = pools_at(a, interaction, &coords, cfg);
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        for _ in 0..cfg.triplets_per_anchor {
            let p = &pos[rng.random_range(0..pos.len())];
            let n = &neg[rng.random_range(0..neg.len())];
            out.push(Triplet {
                anchor: interaction.ids[a].clone(),
                positive: p.clone(),
                negative: n.clone(),
            });
        }
    }
    if out.is_empty() {
        return Err(Error::NoValidTriplets);
    }
    Ok(out)
}
