//! The interactive steering loop: project, take a user arrangement, update the model,
//! re-project. A [`Session`] retains its model between interactions and can be reset.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, InteractionSpec, LabelMap, Layout2D, Method, RngSeed};
use crate::error::Result;
use crate::eval::{adjusted_silhouette, EvalScore};
use crate::finetune::{fine_tune, EmbeddingHead, TrainConfig, TripletConfig};
use crate::mds::{project, MdsConfig};
use crate::wmds::{wmds_inverse, wmds_project, WeightVector, WmdsConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub seed: RngSeed,
    pub train: TrainConfig,
    pub triplet: TripletConfig,
    pub mds: MdsConfig,
    pub wmds: WmdsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub version: usize,
    /// `None` for the baseline projection.
    pub interaction: Option<InteractionSpec>,
    #[serde(skip)]
    pub layout: Layout2D,
}

/// Model state for one user working on one dataset.
///
/// Embedding-head feedback accumulates: each fine-tune starts from the head left by the
/// previous one. WMDS⁻¹ weights are learned in the current embedding space and stay in
/// effect until the next fine-tune, which clears them.
#[derive(Debug, Clone)]
pub struct Session {
    features: Arc<FeatureMatrix>,
    cfg: SessionConfig,
    head: EmbeddingHead,
    weights: Option<WeightVector>,
    history: Vec<HistoryEntry>,
}

impl Session {
    pub fn new(features: Arc<FeatureMatrix>, cfg: SessionConfig) -> Result<Self> {
        cfg.train.validate()?;
        cfg.triplet.validate()?;
        cfg.mds.validate()?;
        let head = EmbeddingHead::new(features.d(), cfg.seed);
        let layout = project(&features, Some(&head), &cfg.mds)?;
        Ok(Session {
            features,
            cfg,
            head,
            weights: None,
            history: vec![HistoryEntry { version: 0, interaction: None, layout }],
        })
    }

    pub fn features(&self) -> &Arc<FeatureMatrix> {
        &self.features
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn head(&self) -> &EmbeddingHead {
        &self.head
    }

    pub fn weights(&self) -> Option<&WeightVector> {
        self.weights.as_ref()
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn version(&self) -> usize {
        self.history.len() - 1
    }

    pub fn layout(&self) -> &Layout2D {
        &self.history.last().expect("history is never empty").layout
    }

    /// Applies the interaction with the method it names, re-projects every point and
    /// appends the result to the history. On error the session is left unchanged.
    pub fn submit(&mut self, spec: &InteractionSpec) -> Result<&Layout2D> {
        let resolved = spec.resolve(&self.features)?;
        // a fresh seed per history position, so a reset followed by the same sequence replays exactly
        let seed = self.cfg.seed.mix(&[self.history.len() as u64]);
        let (head, weights) = match spec.method {
            Method::WmdsInverse => {
                let embedded = self.head.apply(&self.features)?;
                let w = wmds_inverse(&resolved, &embedded, &self.cfg.wmds)?;
                (self.head.clone(), Some(w))
            }
            Method::MdsInverse | Method::Triplet => {
                let train = TrainConfig { seed, ..self.cfg.train };
                let tuned = fine_tune(&self.head, &self.features, spec, &self.cfg.triplet, &train)?;
                (tuned.head, None)
            }
        };
        let layout = self.project_with(&head, weights.as_ref())?;
        self.head = head;
        self.weights = weights;
        self.history.push(HistoryEntry {
            version: self.history.len(),
            interaction: Some(spec.clone()),
            layout,
        });
        Ok(self.layout())
    }

    /// Back to the identity head and the baseline layout; history restarts at version 0.
    pub fn reset(&mut self) -> &Layout2D {
        self.head = EmbeddingHead::new(self.features.d(), self.cfg.seed);
        self.weights = None;
        self.history.truncate(1);
        self.layout()
    }

    pub fn score(&self, labels: &LabelMap) -> Result<EvalScore> {
        adjusted_silhouette(self.layout(), labels)
    }

    fn project_with(&self, head: &EmbeddingHead, weights: Option<&WeightVector>) -> Result<Layout2D> {
        match weights {
            Some(w) => wmds_project(&head.apply(&self.features)?, w, &self.cfg.mds),
            None => project(&self.features, Some(head), &self.cfg.mds),
        }
    }
}
