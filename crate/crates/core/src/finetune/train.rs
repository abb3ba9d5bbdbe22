use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, InteractionSpec, Method, ResolvedInteraction, RngSeed};
use crate::error::{Error, Result};
use crate::finetune::head::EmbeddingHead;
use crate::finetune::loss::{mds_inverse_loss, triplet_margin_loss};
use crate::finetune::triplets::{sample_triplets, Triplet, TripletConfig};

/// Full-batch Adam settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub step_size: f64,
    pub seed: RngSeed,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            step_size: 1e-2,
            seed: RngSeed(0),
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be ≥ 1".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidConfig("step_size must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// What a fine-tuning run minimizes.
#[derive(Debug, Clone)]
pub enum Objective {
    /// Stress against the moved points' 2D distances.
    MdsInverse(ResolvedInteraction),
    /// Hinge loss over a fixed set of triplets.
    Triplet { triplets: Vec<Triplet>, margin: f64 },
}

impl Objective {
    pub fn evaluate(
        &self,
        head: &EmbeddingHead,
        features: &FeatureMatrix,
    ) -> Result<(f64, EmbeddingHead)> {
        match self {
            Objective::MdsInverse(inter) => mds_inverse_loss(head, features, inter),
            Objective::Triplet { triplets, margin } => {
                triplet_margin_loss(head, features, triplets, *margin)
            }
        }
    }
}

/// Outcome of [`fine_tune`].
#[derive(Debug, Clone)]
pub struct FineTuned {
    pub head: EmbeddingHead,
    /// Loss at entry followed by the loss after every optimizer step (`epochs + 1` values).
    pub loss_trace: Vec<f64>,
    /// Index into `loss_trace` of the returned head.
    pub best_epoch: usize,
}

impl FineTuned {
    pub fn final_loss(&self) -> f64 {
        self.loss_trace[self.best_epoch]
    }
}

/// Fine-tunes `head` (continuing from its current parameters) on one interaction.
///
/// `mds_inverse` minimizes pairwise stress; `triplet` draws triplets from the coordinate
/// pools with `cfg.seed` and minimizes the margin loss. The head with the lowest loss seen
/// along the way is returned, so the returned loss never exceeds the entry loss.
pub fn fine_tune(
    head: &EmbeddingHead,
    features: &FeatureMatrix,
    interaction: &InteractionSpec,
    triplet_cfg: &TripletConfig,
    cfg: &TrainConfig,
) -> Result<FineTuned> {
    let resolved = interaction.resolve(features)?;
    let objective = match interaction.method {
        Method::MdsInverse => Objective::MdsInverse(resolved),
        Method::Triplet => Objective::Triplet {
            triplets: sample_triplets(&resolved, triplet_cfg, cfg.seed)?,
            margin: triplet_cfg.margin,
        },
        Method::WmdsInverse => {
            return Err(Error::InvalidConfig(
                "wmds_inverse learns feature weights, not a head".into(),
            ))
        }
    };
    fine_tune_objective(head, features, &objective, cfg)
}

pub fn fine_tune_objective(
    head: &EmbeddingHead,
    features: &FeatureMatrix,
    objective: &Objective,
    cfg: &TrainConfig,
) -> Result<FineTuned> {
    cfg.validate()?;
    let mut current = head.clone();
    let mut params = current.to_flat();
    let mut first = vec![0.0; params.len()];
    let mut second = vec![0.0; params.len()];
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let mut best = (f64::INFINITY, 0usize, params.clone());
    let mut last_finite = f64::NAN;

    for epoch in 0..=cfg.epochs {
        current.set_flat(&params);
        let (loss, grad) = objective.evaluate(&current, features)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, last_finite });
        }
        last_finite = loss;
        trace.push(loss);
        if loss < best.0 {
            best = (loss, epoch, params.clone());
        }
        if epoch == cfg.epochs {
            break;
        }
        let t = (epoch + 1) as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for (k, g) in grad.to_flat().into_iter().enumerate() {
            first[k] = cfg.beta1 * first[k] + (1.0 - cfg.beta1) * g;
            second[k] = cfg.beta2 * second[k] + (1.0 - cfg.beta2) * g * g;
            let m_hat = first[k] / bc1;
            let v_hat = second[k] / bc2;
            params[k] -= cfg.step_size * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    current.set_flat(&best.2);
    Ok(FineTuned {
        head: current,
        loss_trace: trace,
        best_epoch: best.1,
    })
}
