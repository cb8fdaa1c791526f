//! Shared generators for the integration and acceptance tests.
#![allow(dead_code)]

use fracising::kernel::FractionalOrder;
use fracising::quadratic::{critical_field, entropy_field, evolve_perturbation, BdgRealSpaceModel, DriveProtocol, EntropyField};
use fracising::scaling::{
    fit_front_level, fit_gap_scaling, fit_pseudocritical_drift, DataSource, GapDataset, GapPoint, ScalingFit,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn order(q: f64) -> FractionalOrder {
    FractionalOrder::new(q).unwrap()
}

/// Chain lengths 10..400, geometric.
pub fn sizes() -> Vec<usize> {
    let mut v: Vec<usize> = (0..12).map(|i| (10.0 * 40f64.powf(i as f64 / 11.0)).round() as usize).collect();
    v.dedup();
    v
}

fn within(fit: &ScalingFit, truth: &[(&str, f64)]) -> bool {
    truth.iter().all(|&(name, v)| (fit.value(name) - v).abs() <= 3.0 * fit.stderr(name))
}

/// Randomised gap-law datasets with 1e-4 relative noise; returns how many
/// fits put every generating parameter within three standard errors.
pub fn gap_recovery(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    (0..trials)
        .filter(|_| {
            let (a, z, b, w) =
                (rng.random_range(1.0..3.0), rng.random_range(0.5..1.5), rng.random_range(0.3..1.0), rng.random_range(0.8..1.5));
            let pts = sizes()
                .into_iter()
                .map(|l| {
                    let lf = l as f64;
                    let clean = a * lf.powf(-z) * (1.0 + b * lf.powf(-w));
                    let sigma = 1e-4 * clean;
                    GapPoint { length: l, g: 1.0, gap: clean + sigma * unit.sample(&mut rng), sigma: Some(sigma) }
                })
                .collect();
            let data = GapDataset::new(pts, DataSource::Synthetic).unwrap();
            fit_gap_scaling(&data).is_ok_and(|f| within(&f, &[("a", a), ("z", z), ("b", b), ("omega", w)]))
        })
        .count()
}

/// Randomised pseudocritical-drift datasets, L = 10..1000 (16 sizes) with
/// 1e-6 absolute noise; (1/ν, b, ω') are nearly degenerate on shorter or
/// noisier series and the linearised errors then under-cover.
pub fn drift_recovery(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = 1e-6;
    let noise = Normal::new(0.0, sigma).unwrap();
    (0..trials)
        .filter(|_| {
            let (gc, a, y, b, w) = (
                rng.random_range(0.5..1.5),
                rng.random_range(-1.5..-0.5),
                rng.random_range(0.7..1.3),
                rng.random_range(0.2..0.6),
                rng.random_range(0.8..1.5),
            );
            let series: Vec<(f64, f64)> = (0..16)
                .map(|i| {
                    let lf = (10.0 * 100f64.powf(i as f64 / 15.0)).round();
                    (lf, gc + a * lf.powf(-y) * (1.0 + b * lf.powf(-w)) + noise.sample(&mut rng))
                })
                .collect();
            let s = vec![sigma; series.len()];
            fit_pseudocritical_drift(&series, Some(&s))
                .is_ok_and(|f| within(&f, &[("g_c", gc), ("a", a), ("inv_nu", y), ("b", b), ("omega", w)]))
        })
        .count()
}

/// Randomised front laws d = a (t − t0)^{1/z} with 1e-4 relative noise.
pub fn front_recovery(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    (0..trials)
        .filter(|_| {
            let (a, p, t0) = (rng.random_range(2.0..4.0), rng.random_range(0.6..1.6), rng.random_range(0.5..3.0));
            let mut pts = Vec::new();
            let mut sig = Vec::new();
            for i in 0..40 {
                let t = 5.0 + 2.5 * i as f64;
                let clean = a * (t - t0).powf(p);
                let s = 1e-4 * clean;
                pts.push((t, clean + s * unit.sample(&mut rng)));
                sig.push(s);
            }
            fit_front_level(&pts, Some(&sig)).is_ok_and(|f| within(&f, &[("log_a", a.ln()), ("inv_z", p), ("t0", t0)]))
        })
        .count()
}

/// Entropy field of the default drive protocol on an open chain at g_c.
pub fn critical_light_cone(q: f64, length: usize) -> EntropyField {
    let gc = critical_field(order(q), 1.0);
    let model = BdgRealSpaceModel::new(order(q), 1.0, gc, length).unwrap();
    let protocol = DriveProtocol::defaults_for(&model);
    entropy_field(&evolve_perturbation(&model, &protocol).unwrap()).unwrap()
}
