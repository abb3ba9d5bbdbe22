//! Semantic-interaction dimension reduction.
//!
//! Items are projected to 2D with MDS. A user drags a few of them into an arrangement, and
//! the arrangement updates a model: either per-feature weights of the distance (WMDS⁻¹),
//! or a trainable embedding head fit with an MDS⁻¹ stress or a coordinate triplet loss.
//! Every point is then re-projected.
//!
//! ```
//! use sidr::sim::{generate_synthetic_benchmark, simulate_interaction, BenchmarkConfig};
//! use sidr::{adjusted_silhouette, Method, RngSeed, Session, SessionConfig};
//! use std::sync::Arc;
//!
//! let bench = generate_synthetic_benchmark(&BenchmarkConfig::default())?;
//! let mut session = Session::new(Arc::new(bench.features.clone()), SessionConfig::default())?;
//! let before = adjusted_silhouette(session.layout(), &bench.secondary)?.adjusted;
//!
//! let spec = simulate_interaction(&bench.secondary, 8, Method::Triplet, RngSeed(1))?;
//! session.submit(&spec)?;
//! let after = adjusted_silhouette(session.layout(), &bench.secondary)?.adjusted;
//! assert!(after > before);
//! # Ok::<(), sidr::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod finetune;
pub mod geometry;
pub mod io;
pub mod mds;
pub mod session;
pub mod sim;
pub mod wmds;

pub use data::{
    FeatureMatrix, InteractionSpec, ItemId, LabelMap, Layout2D, Method, MovedPoint,
    ResolvedInteraction, RngSeed,
};
pub use error::{Error, Result};
pub use eval::{adjusted_silhouette, silhouette, EvalScore};
pub use finetune::{EmbeddingHead, TrainConfig, TripletConfig};
pub use mds::{project, MdsConfig};
pub use session::{Session, SessionConfig};
pub use wmds::{WeightVector, WmdsConfig};

// The guide's chapters are compiled and run as doc-tests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/projection.md")]
    mod projection {}
    #[doc = include_str!("../../../book/src/feedback.md")]
    mod feedback {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/sessions.md")]
    mod sessions {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
