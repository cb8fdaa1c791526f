//! Thermodynamic-limit dispersion of the quadratic model.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by std float methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernel::{cosine_sum_closed_form, hypergeometric_f, sine_sum, FractionalOrder};
use crate::scaling::{fit_dispersion_z, ScalingFit};

/// g_c = ½ J0 binom(q, q/2), where E_{k=0} vanishes.
pub fn critical_field(order: FractionalOrder, j0: f64) -> f64 {
    0.5 * j0 * order.central_binomial()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub k: f64,
    pub xi: f64,
    pub delta: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdgMomentumModel {
    pub order: FractionalOrder,
    pub j0: f64,
    pub g: f64,
    pub k_grid: Vec<f64>,
}

impl BdgMomentumModel {
    /// Model on [`default_k_grid`].
    pub fn new(order: FractionalOrder, j0: f64, g: f64) -> Self {
        Self { order, j0, g, k_grid: default_k_grid() }
    }

    pub fn with_grid(order: FractionalOrder, j0: f64, g: f64, k_grid: Vec<f64>) -> Self {
        Self { order, j0, g, k_grid }
    }

    /// Dispersion at every grid momentum.
    pub fn spectrum(&self) -> Result<Vec<DispersionPoint>> {
        self.k_grid.iter().map(|&k| dispersion(self, k)).collect()
    }
}

/// 4096 uniform momenta on (−π, π] plus 64 geometric points per side from
/// 10⁻⁵ up to the uniform spacing, sorted ascending.
pub fn default_k_grid() -> Vec<f64> {
    const UNIFORM: usize = 4096;
    const REFINE: usize = 64;
    let step = 2.0 * PI / UNIFORM as f64;
    let mut grid: Vec<f64> = (1..=UNIFORM).map(|i| -PI + step * i as f64).collect();
    let (lo, hi) = (1e-5f64.ln(), step.ln());
    for i in 0..REFINE {
        let k = (lo + (hi - lo) * i as f64 / REFINE as f64).exp();
        grid.push(k);
        grid.push(-k);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// ξ_k = 2g − 2C_k, Δ_k = 2S_k and E_k = sqrt(ξ² + Δ²).
pub fn dispersion(model: &BdgMomentumModel, k: f64) -> Result<DispersionPoint> {
    if !(-PI..=PI).contains(&k) {
        return Err(Error::domain("momentum must lie in [-pi, pi]"));
    }
    let c = cosine_sum_closed_form(model.order, model.j0, k);
    let s = sine_sum(model.order, model.j0, k)?;
    let xi = 2.0 * model.g - 2.0 * c;
    let delta = 2.0 * s;
    Ok(DispersionPoint { k, xi, delta, energy: xi.hypot(delta) })
}

/// The same energy in expanded form, 2 sqrt(C² + S² − 2gC + g²).
pub fn expanded_energy(model: &BdgMomentumModel, k: f64) -> Result<f64> {
    let c = cosine_sum_closed_form(model.order, model.j0, k);
    let s = sine_sum(model.order, model.j0, k)?;
    let g = model.g;
    Ok(2.0 * (c * c + s * s - 2.0 * g * c + g * g).max(0.0).sqrt())
}

/// Closed-form mean-field energy written through F(q, k):
///
/// `E_k² = |F|² + (b − g) |sin(k/2)|^q + g (g − b)`, b = binom(q, q/2),
///
/// with g in units of J0 and the result scaled back by |J0|. Negative
/// round-off under the root is clamped to zero.
pub fn meanfield_energy(order: FractionalOrder, j0: f64, g: f64, k: f64) -> Result<f64> {
    if j0 == 0.0 {
        return Err(Error::domain("J0 must be nonzero"));
    }
    let b = order.central_binomial();
    let gr = g / j0;
    let f = hypergeometric_f(order, k)?;
    let s = (0.5 * k).sin().abs().powf(order.value());
    let e2 = f.norm_sqr() + (b - gr) * s + gr * (gr - b);
    Ok(j0.abs() * e2.max(0.0).sqrt())
}

/// Log–log slope of the mean-field energy at g_c over `points` geometric
/// momenta in `window`.
pub fn meanfield_z(order: FractionalOrder, j0: f64, window: (f64, f64), points: usize) -> Result<ScalingFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi <= 0.3) {
        return Err(Error::domain("fit window must satisfy 0 < k_min < k_max <= 0.3"));
    }
    if points < 8 {
        return Err(Error::IllConditioned(alloc::format!("{points} points; need at least 8")));
    }
    let g = critical_field(order, j0);
    let samples = geometric(lo, hi, points)
        .into_iter()
        .map(|k| meanfield_energy(order, j0, g, k).map(|e| (k, e)))
        .collect::<Result<Vec<_>>>()?;
    fit_dispersion_z(&samples)
}

/// `n` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
