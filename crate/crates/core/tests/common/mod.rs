//! Finite-difference gradient suites shared by the gradient tests and the acceptance run.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sidr::finetune::{mds_inverse_loss, triplet_margin_loss, Triplet};
use sidr::{EmbeddingHead, FeatureMatrix, InteractionSpec, ItemId, Method, MovedPoint, RngSeed};

pub const STEP: f64 = 1e-5;
pub const REL: f64 = 1e-4;
pub const ABS: f64 = 1e-8;

fn random_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let ids = (0..n).map(|i| ItemId::new(format!("x{i}")).unwrap()).collect();
    FeatureMatrix::new(ids, DMatrix::from_fn(n, d, |_, _| rng.random_range(-2.0..2.0))).unwrap()
}

/// A head with every block non-zero, so no gradient is trivially zero.
fn random_head(rng: &mut ChaCha8Rng, d: usize, hidden: usize) -> EmbeddingHead {
    let mut head = EmbeddingHead::zeros(d, hidden);
    let flat: Vec<f64> = (0..head.param_count()).map(|_| rng.random_range(-0.8..0.8)).collect();
    head.set_flat(&flat);
    head
}

fn euclid(z: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (z.row(i) - z.row(j)).norm()
}

fn check(name: &str, analytic: &[f64], loss: impl Fn(&[f64]) -> f64, theta: &[f64]) {
    assert_eq!(analytic.len(), theta.len());
    let mut probe = theta.to_vec();
    for k in 0..theta.len() {
        probe[k] = theta[k] + STEP;
        let up = loss(&probe);
        probe[k] = theta[k] - STEP;
        let down = loss(&probe);
        probe[k] = theta[k];
        let fd = (up - down) / (2.0 * STEP);
        let tol = ABS.max(REL * analytic[k].abs().max(fd.abs()));
        assert!(
            (analytic[k] - fd).abs() <= tol,
            "{name}: parameter {k}: analytic {} vs finite difference {fd}",
            analytic[k]
        );
    }
}

/// Checks `instances` random MDS⁻¹ problems; panics on the first mismatch.
pub fn mds_inverse_suite(instances: u64) {
    for inst in 0..instances {
        let mut rng = RngSeed(1000 + inst).rng();
        let n = rng.random_range(3..=10);
        let d = rng.random_range(2..=8);
        let hidden = rng.random_range(2..=8);
        let features = random_features(&mut rng, n, d);
        let head = random_head(&mut rng, d, hidden);
        let m = rng.random_range(3..=n);
        let moved = sample(&mut rng, n, m)
            .into_iter()
            .map(|i| MovedPoint {
                id: format!("x{i}"),
                x: rng.random_range(0.0..1.0),
                y: rng.random_range(0.0..1.0),
            })
            .collect();
        let resolved = InteractionSpec::new(Method::MdsInverse, moved).resolve(&features).unwrap();

        // independent value oracle: straight from the definition
        let z = head.apply_matrix(features.data()).unwrap();
        let pairs: Vec<(usize, usize)> =
            (0..m).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
        let t: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| (resolved.coords.row(i) - resolved.coords.row(j)).norm())
            .collect();
        let e: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| euclid(&z, resolved.indices[i], resolved.indices[j]))
            .collect();
        let (tm, em) = (t.iter().sum::<f64>() / t.len() as f64, e.iter().sum::<f64>() / e.len() as f64);
        let want: f64 = t.iter().zip(&e).map(|(a, b)| (a / tm - b / em).powi(2)).sum();

        let (value, grad) = mds_inverse_loss(&head, &features, &resolved).unwrap();
        assert!((value - want).abs() <= 1e-12 * want.max(1.0), "instance {inst}: {value} vs {want}");

        let theta = head.to_flat();
        let f = |p: &[f64]| {
            let mut h = head.clone();
            h.set_flat(p);
            mds_inverse_loss(&h, &features, &resolved).unwrap().0
        };
        check(&format!("mds_inverse #{inst}"), &grad.to_flat(), f, &theta);
    }
}

/// Checks `instances` random triplet problems away from hinge kinks; panics on the first mismatch.
pub fn triplet_suite(instances: u64) {
    let mut checked = 0;
    let mut seed = 2000;
    while checked < instances {
        seed += 1;
        let mut rng = RngSeed(seed).rng();
        let n = rng.random_range(3..=10);
        let d = rng.random_range(2..=8);
        let hidden = rng.random_range(2..=8);
        let features = random_features(&mut rng, n, d);
        let head = random_head(&mut rng, d, hidden);
        let margin = rng.random_range(0.05..1.5);
        let count = rng.random_range(1..=6);
        let raw: Vec<[usize; 3]> = (0..count)
            .map(|_| {
                let v = sample(&mut rng, n, 3).into_vec();
                [v[0], v[1], v[2]]
            })
            .collect();
        let triplets: Vec<Triplet> = raw
            .iter()
            .map(|&[a, p, q]| Triplet {
                anchor: ItemId::new(format!("x{a}")).unwrap(),
                positive: ItemId::new(format!("x{p}")).unwrap(),
                negative: ItemId::new(format!("x{q}")).unwrap(),
            })
            .collect();

        // independent oracle over the distinct points the triplets touch
        let z = head.apply_matrix(features.data()).unwrap();
        let mut touched: Vec<usize> = raw.iter().flatten().copied().collect();
        touched.sort_unstable();
        touched.dedup();
        let mut sum = 0.0;
        let mut npairs = 0.0;
        for (x, &i) in touched.iter().enumerate() {
            for &j in &touched[x + 1..] {
                sum += euclid(&z, i, j);
                npairs += 1.0;
            }
        }
        let mean = sum / npairs;
        let hinges: Vec<f64> = raw
            .iter()
            .map(|&[a, p, q]| (euclid(&z, a, p) - euclid(&z, a, q)) / mean + margin)
            .collect();
        // the hinge is not differentiable at 0; skip draws that land near the kink
        if hinges.iter().any(|h| h.abs() < 1e-3) {
            continue;
        }
        let want = hinges.iter().map(|h| h.max(0.0)).sum::<f64>() / count as f64;

        let (value, grad) = triplet_margin_loss(&head, &features, &triplets, margin).unwrap();
        assert!((value - want).abs() <= 1e-12 * want.max(1.0), "seed {seed}: {value} vs {want}");

        let theta = head.to_flat();
        let f = |p: &[f64]| {
            let mut h = head.clone();
            h.set_flat(p);
            triplet_margin_loss(&h, &features, &triplets, margin).unwrap().0
        };
        check(&format!("triplet seed {seed}"), &grad.to_flat(), f, &theta);
        checked += 1;
    }
}
