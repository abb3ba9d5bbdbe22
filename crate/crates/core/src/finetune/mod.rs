//! Fine-tuning a trainable embedding head from user feedback.
//!
//! Two objectives are available: MDS⁻¹ (match the pairwise distances of the moved points)
//! and the coordinate triplet margin loss (pull same-region points together, push
//! far-apart ones away). Feedback is retained: every call continues from the head it is
//! given.

mod head;
mod loss;
mod train;
mod triplets;

pub use head::{Checkpoint, EmbeddingHead, HeadGradient};
pub use loss::{mds_inverse_loss, triplet_margin_loss};
pub use train::{fine_tune, fine_tune_objective, FineTuned, Objective, TrainConfig};
pub use triplets::{build_triplet_pools, sample_triplets, Triplet, TripletConfig};
