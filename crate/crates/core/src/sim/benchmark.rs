use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, ItemId, LabelMap, RngSeed};
use crate::error::{Error, Result};

/// Parameters of the 2×2 factorial benchmark.
///
/// Factor A (dominant) shifts points along one random unit direction by `dominant_gap`,
/// factor B (secondary) along an orthogonal one by `secondary_gap`; isotropic Gaussian
/// noise with standard deviation `noise` is added to every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub n_per_cell: usize,
    pub d: usize,
    pub dominant_gap: f64,
    pub secondary_gap: f64,
    pub noise: f64,
    pub seed: RngSeed,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            n_per_cell: 10,
            d: 16,
            dominant_gap: 3.0,
            secondary_gap: 1.0,
            noise: 0.25,
            seed: RngSeed(7),
        }
    }
}

/// Features plus both factor labelings.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub features: FeatureMatrix,
    /// Dominant factor: `a0` / `a1`.
    pub primary: LabelMap,
    /// Secondary factor: `b0` / `b1`.
    pub secondary: LabelMap,
}

pub fn generate_synthetic_benchmark(cfg: &BenchmarkConfig) -> Result<Benchmark> {
    if !(cfg.secondary_gap > 0.0 && cfg.dominant_gap > cfg.secondary_gap) {
        return Err(Error::InvalidConfig(format!(
            "need dominant_gap > secondary_gap > 0, got {} and {}",
            cfg.dominant_gap, cfg.secondary_gap
        )));
    }
    if !(cfg.noise >= 0.0) || !cfg.noise.is_finite() {
        return Err(Error::InvalidConfig("noise must be ≥ 0".into()));
    }
    if cfg.n_per_cell == 0 || cfg.d < 2 {
        return Err(Error::InvalidConfig("need n_per_cell ≥ 1 and d ≥ 2".into()));
    }
    let mut rng = cfg.seed.rng();
    let mut gauss = |len: usize| -> DVector<f64> {
        DVector::from_fn(len, |_, _| StandardNormal.sample(&mut rng))
    };
    let dir_a = gauss(cfg.d).normalize();
    let raw_b = gauss(cfg.d);
    let dir_b = (&raw_b - &dir_a * dir_a.dot(&raw_b)).normalize();

    let n = 4 * cfg.n_per_cell;
    let mut data = DMatrix::zeros(n, cfg.d);
    let mut ids = Vec::with_capacity(n);
    let mut primary = Vec::with_capacity(n);
    let mut secondary = Vec::with_capacity(n);
    let width = (n - 1).to_string().len();
    for cell in 0..4 {
        let (fa, fb) = (cell / 2, cell % 2);
        let centre = &dir_a * (cfg.dominant_gap * (fa as f64 - 0.5))
            + &dir_b * (cfg.secondary_gap * (fb as f64 - 0.5));
        for _ in 0..cfg.n_per_cell {
            let i = ids.len();
            let row = &centre + gauss(cfg.d) * cfg.noise;
            data.set_row(i, &row.transpose());
            let id = format!("item_{i:0width$}");
            primary.push((id.clone(), format!("a{fa}")));
            secondary.push((id.clone(), format!("b{fb}")));
            ids.push(ItemId::new(id)?);
        }
    }
    Ok(Benchmark {
        features: FeatureMatrix::new(ids, data)?,
        primary: LabelMap::from_pairs(primary)?,
        secondary: LabelMap::from_pairs(secondary)?,
    })
}
