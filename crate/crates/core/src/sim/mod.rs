//! Simulation engine: an interaction simulator that groups sampled items by class in the
//! corners of the unit square, and a sweep harness that scores each method's re-projection
//! as a function of the number of moved items per class.

mod benchmark;
mod report;

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    FeatureMatrix, InteractionSpec, LabelMap, Method, MovedPoint, ResolvedInteraction, RngSeed,
};
use crate::error::{Error, Result};
use crate::eval::adjusted_silhouette;
use crate::finetune::{fine_tune_objective, EmbeddingHead, Objective, TrainConfig, Triplet, TripletConfig};
use crate::mds::{project, MdsConfig};
use crate::wmds::{wmds_inverse, wmds_project, WmdsConfig};

pub use benchmark::{generate_synthetic_benchmark, Benchmark, BenchmarkConfig};
pub use report::{render_svg, Aggregate, EvalReport, ReportRow};

/// Class anchor positions: corners first, then edge midpoints.
pub const CLASS_POSITIONS: [[f64; 2]; 8] = [
    [0.0, 0.0],
    [1.0, 1.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [0.5, 0.0],
    [1.0, 0.5],
    [0.5, 1.0],
    [0.0, 0.5],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub methods: Vec<Method>,
    pub k_values: Vec<usize>,
    pub repetitions: usize,
    pub seed: RngSeed,
    pub train: TrainConfig,
    pub triplet: TripletConfig,
    pub mds: MdsConfig,
    pub wmds: WmdsConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            methods: Method::ALL.to_vec(),
            k_values: vec![2, 4, 6, 8],
            repetitions: 10,
            seed: RngSeed(7),
            train: TrainConfig::default(),
            triplet: TripletConfig::default(),
            mds: MdsConfig::default(),
            wmds: WmdsConfig::default(),
        }
    }
}

impl SimConfig {
    /// Checks the config on its own and against the class sizes of `labels`.
    pub fn validate(&self, labels: &LabelMap) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if self.k_values.is_empty() {
            return Err(Error::InvalidConfig("no k values given".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be ≥ 1".into()));
        }
        self.train.validate()?;
        self.triplet.validate()?;
        self.mds.validate()?;
        let members = labels.members();
        if members.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "simulation needs at least 2 classes, labels have {}",
                members.len()
            )));
        }
        if members.len() > CLASS_POSITIONS.len() {
            return Err(Error::InvalidConfig(format!(
                "at most {} classes can be placed, labels have {}",
                CLASS_POSITIONS.len(),
                members.len()
            )));
        }
        let smallest = members.iter().map(|(_, m)| m.len()).min().unwrap_or(0);
        for &k in &self.k_values {
            if k == 0 {
                return Err(Error::InvalidConfig("k must be ≥ 1".into()));
            }
            if k > smallest {
                return Err(Error::InvalidConfig(format!(
                    "k = {k} exceeds the smallest class size {smallest}"
                )));
            }
            if k < 2 && self.methods.contains(&Method::Triplet) {
                return Err(Error::InvalidConfig(format!(
                    "triplet needs k ≥ 2 moved samples per class so every anchor has a positive, got k = {k}"
                )));
            }
        }
        Ok(())
    }
}

/// Samples `k` items per class (without replacement) and places each class's items on its
/// anchor position: two classes go to opposite corners, √2 apart.
pub fn simulate_interaction(
    labels: &LabelMap,
    k: usize,
    method: Method,
    seed: RngSeed,
) -> Result<InteractionSpec> {
    let members = labels.members();
    if members.len() < 2 || members.len() > CLASS_POSITIONS.len() {
        return Err(Error::InvalidConfig(format!(
            "simulation supports 2 to {} classes, got {}",
            CLASS_POSITIONS.len(),
            members.len()
        )));
    }
    let mut rng = seed.rng();
    let mut moved = Vec::with_capacity(k * members.len());
    for (c, (class, ids)) in members.iter().enumerate() {
        if k > ids.len() {
            return Err(Error::InvalidConfig(format!(
                "k = {k} exceeds the size {} of class {class:?}",
                ids.len()
            )));
        }
        let [x, y] = CLASS_POSITIONS[c];
        for i in sample(&mut rng, ids.len(), k) {
            moved.push(MovedPoint {
                id: ids[i].as_str().to_owned(),
                x,
                y,
            });
        }
    }
    Ok(InteractionSpec::new(method, moved))
}

/// Label-driven triplets: every moved point is an anchor in turn, the positive is drawn from
/// the other moved points of its class and the negative from moved points of other classes.
pub fn simulate_triplet_interaction_sampling(
    interaction: &ResolvedInteraction,
    labels: &LabelMap,
    per_anchor: usize,
    seed: RngSeed,
) -> Result<Vec<Triplet>> {
    let classes = labels.class_indices(&interaction.ids)?;
    let mut counts = std::collections::HashMap::new();
    for &c in &classes {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    if let Some((&c, _)) = counts.iter().find(|(_, &n)| n < 2) {
        return Err(Error::InvalidConfig(format!(
            "class {:?} has a single moved sample; triplets need at least two per class (k ≥ 2)",
            labels.classes()[c]
        )));
    }
    if counts.len() < 2 {
        return Err(Error::NoValidTriplets);
    }
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(interaction.len() * per_anchor);
    for a in 0..interaction.len() {
        let pos: Vec<usize> = (0..interaction.len())
            .filter(|&v| v != a && classes[v] == classes[a])
            .collect();
        let neg: Vec<usize> = (0..interaction.len())
            .filter(|&v| classes[v] != classes[a])
            .collect();
        for _ in 0..per_anchor {
            let p = pos[rng.random_range(0..pos.len())];
            let n = neg[rng.random_range(0..neg.len())];
            out.push(Triplet {
                anchor: interaction.ids[a].clone(),
                positive: interaction.ids[p].clone(),
                negative: interaction.ids[n].clone(),
            });
        }
    }
    Ok(out)
}

/// One sweep cell's identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub method: Method,
    pub k: usize,
    pub repetition: usize,
}

impl Cell {
    /// `seed` mixed with (method index, k, repetition).
    pub fn seed(&self, base: RngSeed) -> RngSeed {
        base.mix(&[self.method.index(), self.k as u64, self.repetition as u64])
    }
}

/// Enumerates cells in report order: method, then k, then repetition.
pub fn cells(cfg: &SimConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &method in &cfg.methods {
        for &k in &cfg.k_values {
            for repetition in 0..cfg.repetitions {
                out.push(Cell { method, k, repetition });
            }
        }
    }
    out
}

/// Runs one cell from fresh model state and returns the adjusted silhouette of the
/// re-projection w.r.t. `labels`.
pub fn run_cell(
    features: &FeatureMatrix,
    labels: &LabelMap,
    cfg: &SimConfig,
    cell: Cell,
) -> Result<f64> {
    let seed = cell.seed(cfg.seed);
    let spec = simulate_interaction(labels, cell.k, cell.method, seed.mix(&[0]))?;
    let resolved = spec.resolve(features)?;
    let layout = match cell.method {
        Method::WmdsInverse => {
            let w = wmds_inverse(&resolved, features, &cfg.wmds)?;
            wmds_project(features, &w, &cfg.mds)?
        }
        Method::MdsInverse | Method::Triplet => {
            let head = EmbeddingHead::new(features.d(), seed.mix(&[1]));
            let objective = if cell.method == Method::MdsInverse {
                Objective::MdsInverse(resolved)
            } else {
                let triplets = simulate_triplet_interaction_sampling(
                    &resolved,
                    labels,
                    cfg.triplet.triplets_per_anchor,
                    seed.mix(&[2]),
                )?;
                Objective::Triplet { triplets, margin: cfg.triplet.margin }
            };
            let tuned = fine_tune_objective(&head, features, &objective, &cfg.train)?;
            project(features, Some(&tuned.head), &cfg.mds)?
        }
    };
    Ok(adjusted_silhouette(&layout, labels)?.adjusted)
}

/// Full sweep. Cells run in parallel; results are independent of execution order.
pub fn run_simulation(
    features: &FeatureMatrix,
    labels: &LabelMap,
    cfg: &SimConfig,
) -> Result<EvalReport> {
    run_simulation_with_progress(features, labels, cfg, &|_, _| {})
}

/// [`run_simulation`] reporting `(finished, total)` after every cell.
pub fn run_simulation_with_progress(
    features: &FeatureMatrix,
    labels: &LabelMap,
    cfg: &SimConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<EvalReport> {
    cfg.validate(labels)?;
    if let Some(id) = features.ids().iter().find(|id| labels.get(id).is_none()) {
        return Err(Error::MissingLabel(id.as_str().to_owned()));
    }
    let all = cells(cfg);
    let total = all.len();
    let done = AtomicUsize::new(0);
    let rows: Vec<ReportRow> = all
        .par_iter()
        .map(|&cell| {
            let outcome = run_cell(features, labels, cfg, cell);
            progress(done.fetch_add(1, Ordering::SeqCst) + 1, total);
            ReportRow::from_outcome(cell, cell.seed(cfg.seed), outcome)
        })
        .collect();
    Ok(EvalReport::from_rows(rows))
}
