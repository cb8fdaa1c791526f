//! Regression analyses: finite-size gap scaling, pseudocritical drift,
//! light-cone fronts and small-k dispersion slopes.
//!
//! Nonlinear fits use Levenberg–Marquardt with analytic Jacobians from a
//! fixed set of deterministic starting points; the lowest cost wins. Points
//! are weighted by 1/σ² when uncertainties are supplied. Without them the
//! covariance is rescaled by the reduced χ².

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by std float methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, normal_covariance, LeastSquaresProblem, LmOptions};
use crate::quadratic::EntropyField;

/// Which model a [`ScalingFit`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// Δ(L) = a L^{−z} (1 + b L^{−ω})
    GapCorrected,
    /// Δ(L) = a L^{−z}
    GapPurePower,
    /// g_c(L) = g_c + a L^{−1/ν} (1 + b L^{−ω'})
    PseudocriticalDrift,
    /// d = a (t − t0)^{1/z} for one contour level
    FrontLaw,
    /// Levels pooled
    FrontPooled,
    /// log E = z log k + c
    DispersionSlope,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub name: &'static str,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub model: FitModel,
    pub estimates: Vec<Estimate>,
    /// Row-major, in the order of `estimates`.
    pub covariance: DMatrix<f64>,
    /// sqrt(Σ w r²) at the optimum.
    pub residual_norm: f64,
    pub points: usize,
    /// Systematic error of the headline exponent (window drift, dropped
    /// sizes or level spread, depending on the model).
    pub systematic: f64,
    /// Simpler companion fit (pure power law for gaps, per-level fits for fronts).
    pub companions: Vec<ScalingFit>,
}

impl ScalingFit {
    pub fn get(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    /// Value of a named parameter; panics if absent.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name).unwrap_or_else(|| panic!("no parameter {name}")).value
    }

    pub fn stderr(&self, name: &str) -> f64 {
        self.get(name).unwrap_or_else(|| panic!("no parameter {name}")).stderr
    }
}

/// Where gap data came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Ed,
    Quadratic,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint {
    pub length: usize,
    pub g: f64,
    pub gap: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapDataset {
    pub points: Vec<GapPoint>,
    pub source: DataSource,
}

impl GapDataset {
    pub fn new(points: Vec<GapPoint>, source: DataSource) -> Result<Self> {
        if points.windows(2).any(|w| w[1].length <= w[0].length) {
            return Err(Error::domain("system sizes must be strictly increasing"));
        }
        if points.iter().any(|p| !(p.gap > 0.0)) {
            return Err(Error::domain("gaps must be positive"));
        }
        if points.iter().any(|p| p.sigma.is_some_and(|s| !(s > 0.0))) {
            return Err(Error::domain("uncertainties must be positive"));
        }
        Ok(Self { points, source })
    }

    fn sigmas(&self) -> Option<Vec<f64>> {
        self.points.iter().map(|p| p.sigma).collect()
    }
}

type ModelFn = fn(x: f64, p: &[f64], grad: &mut [f64]) -> f64;

struct Curve<'a> {
    x: &'a [f64],
    y: &'a [f64],
    inv_sigma: Vec<f64>,
    model: ModelFn,
    /// Parameters held at their starting value.
    frozen: Vec<bool>,
    /// Maps a parameter vector back into the model's domain.
    guard: fn(&[f64]) -> bool,
}

impl LeastSquaresProblem for Curve<'_> {
    fn residuals(&mut self, p: &DVector<f64>) -> Option<DVector<f64>> {
        if !(self.guard)(p.as_slice()) {
            return None;
        }
        let mut grad = vec![0.0; p.len()];
        let r = DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(self.y)
                .zip(&self.inv_sigma)
                .map(|((&x, &y), &w)| ((self.model)(x, p.as_slice(), &mut grad) - y) * w),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&mut self, p: &DVector<f64>) -> DMatrix<f64> {
        let mut grad = vec![0.0; p.len()];
        let mut j = DMatrix::zeros(self.x.len(), p.len());
        for (i, (&x, &w)) in self.x.iter().zip(&self.inv_sigma).enumerate() {
            (self.model)(x, p.as_slice(), &mut grad);
            for k in 0..p.len() {
                j[(i, k)] = if self.frozen[k] { 0.0 } else { grad[k] * w };
            }
        }
        j
    }
}

struct CurveFit {
    params: DVector<f64>,
    covariance: DMatrix<f64>,
    cost: f64,
}

/// Multi-start LM. Frozen parameters are excluded from the covariance
/// (their rows and columns are zero).
fn fit_curve(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    model: ModelFn,
    guard: fn(&[f64]) -> bool,
    starts: &[Vec<f64>],
    frozen: &[bool],
) -> Result<CurveFit> {
    let inv_sigma: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; x.len()],
    };
    let mut problem = Curve { x, y, inv_sigma, model, frozen: frozen.to_vec(), guard };
    let opts = LmOptions { max_iterations: 500, ftol: 1e-14, xtol: 1e-14, ..LmOptions::default() };
    let mut best: Option<(f64, DVector<f64>)> = None;
    for s in starts {
        let Ok(out) = levenberg_marquardt(&mut problem, DVector::from_column_slice(s), &opts) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| out.cost < b.0) {
            best = Some((out.cost, out.params));
        }
    }
    let (cost, params) = best.ok_or_else(|| Error::IllConditioned("no starting point was feasible".into()))?;
    problem.residuals(&params);
    let jac = problem.jacobian(&params);
    let free: Vec<usize> = (0..params.len()).filter(|&k| !frozen[k]).collect();
    let reduced = DMatrix::from_fn(x.len(), free.len(), |i, k| jac[(i, free[k])]);
    let cov_free = normal_covariance(&reduced)?;
    let dof = x.len().saturating_sub(free.len());
    let scale = if sigma.is_some() || dof == 0 { 1.0 } else { cost / dof as f64 };
    let mut covariance = DMatrix::zeros(params.len(), params.len());
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            covariance[(i, j)] = cov_free[(a, b)] * scale;
        }
    }
    Ok(CurveFit { params, covariance, cost })
}

fn estimates(names: &[&'static str], fit: &CurveFit) -> Vec<Estimate> {
    names
        .iter()
        .enumerate()
        .map(|(k, &name)| Estimate { name, value: fit.params[k], stderr: fit.covariance[(k, k)].max(0.0).sqrt() })
        .collect()
}

// Δ(L) = a L^{−z} (1 + b L^{−ω}), p = [a, z, b, ln ω]
fn gap_model(l: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let (a, z, b, w) = (p[0], p[1], p[2], p[3].exp());
    let ln = l.ln();
    let pz = (-z * ln).exp();
    let pw = (-w * ln).exp();
    let corr = 1.0 + b * pw;
    let f = a * pz * corr;
    g[0] = pz * corr;
    g[1] = -ln * f;
    g[2] = a * pz * pw;
    g[3] = -a * pz * b * ln * pw * w;
    f
}

// g_c(L) = g∞ + a L^{−y} (1 + b L^{−ω'}), p = [g∞, a, y, b, ln ω']
fn drift_model(l: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let (ginf, a, y, b, w) = (p[0], p[1], p[2], p[3], p[4].exp());
    let ln = l.ln();
    let py = (-y * ln).exp();
    let pw = (-w * ln).exp();
    let corr = 1.0 + b * pw;
    g[0] = 1.0;
    g[1] = py * corr;
    g[2] = -ln * a * py * corr;
    g[3] = a * py * pw;
    g[4] = -a * py * b * ln * pw * w;
    ginf + a * py * corr
}

// d = e^{c} (t − t0)^{p}, p = [c, p, t0]
fn front_model(t: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let (c, e, t0) = (p[0], p[1], p[2]);
    let s = t - t0;
    let f = (c + e * s.ln()).exp();
    g[0] = f;
    g[1] = f * s.ln();
    g[2] = -f * e / s;
    f
}

fn always(_: &[f64]) -> bool {
    true
}

fn gap_guard(p: &[f64]) -> bool {
    p[3].abs() < 5.0
}

fn drift_guard(p: &[f64]) -> bool {
    p[2] > 0.0 && p[2] < 10.0 && p[4].abs() < 5.0
}

const Z_STARTS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
const B_STARTS: [f64; 2] = [0.0, 0.5];

fn gap_fit_core(x: &[f64], y: &[f64], sigma: Option<&[f64]>, pure: bool) -> Result<CurveFit> {
    let starts: Vec<Vec<f64>> = Z_STARTS
        .iter()
        .flat_map(|&z| B_STARTS.iter().map(move |&b| (z, b)))
        .filter(|&(_, b)| !pure || b == 0.0)
        .map(|(z, b)| {
            // amplitude from the largest size, where corrections are smallest
            let n = x.len() - 1;
            vec![y[n] * x[n].powf(z) / (1.0 + b * x[n].recip()), z, b, 0.0]
        })
        .collect();
    let frozen = if pure { [false, false, true, true] } else { [false; 4] };
    let guard = if pure { always } else { gap_guard };
    fit_curve(x, y, sigma, gap_model, guard, &starts, &frozen)
}

/// Fit Δ(L) = a L^{−z} (1 + b L^{−ω}); the pure power law is attached as a companion.
///
/// `systematic` is the largest shift of z when the one or two smallest sizes are dropped.
pub fn fit_gap_scaling(data: &GapDataset) -> Result<ScalingFit> {
    if data.points.len() < 6 {
        return Err(Error::InsufficientSpan(format!("{} sizes; need at least 6", data.points.len())));
    }
    let x: Vec<f64> = data.points.iter().map(|p| p.length as f64).collect();
    let y: Vec<f64> = data.points.iter().map(|p| p.gap).collect();
    let sig = data.sigmas();
    let full = gap_fit_core(&x, &y, sig.as_deref(), false)?;
    let mut systematic: f64 = 0.0;
    for drop in 1..=2 {
        if x.len() - drop < 5 {
            break;
        }
        if let Ok(f) = gap_fit_core(&x[drop..], &y[drop..], sig.as_ref().map(|s| &s[drop..]), false) {
            systematic = systematic.max((f.params[1] - full.params[1]).abs());
        }
    }
    let pure = gap_fit_core(&x, &y, sig.as_deref(), true)?;
    let names = ["a", "z", "b", "omega"];
    let mut est = estimates(&names, &full);
    // report ω itself: propagate through ω = e^w
    let w = est[3].value.exp();
    est[3] = Estimate { name: "omega", value: w, stderr: w * est[3].stderr };
    let mut cov = full.covariance.clone();
    for k in 0..4 {
        cov[(3, k)] *= w;
        cov[(k, 3)] *= w;
    }
    let pure_fit = ScalingFit {
        model: FitModel::GapPurePower,
        estimates: estimates(&names[..2], &pure),
        covariance: pure.covariance.view((0, 0), (2, 2)).into_owned(),
        residual_norm: pure.cost.sqrt(),
        points: x.len(),
        systematic: 0.0,
        companions: Vec::new(),
    };
    Ok(ScalingFit {
        model: FitModel::GapCorrected,
        estimates: est,
        covariance: cov,
        residual_norm: full.cost.sqrt(),
        points: x.len(),
        systematic,
        companions: vec![pure_fit],
    })
}

/// Fit g_c(L) = g_c + a L^{−1/ν} (1 + b L^{−ω'}) to `(L, g_c(L))` pairs.
pub fn fit_pseudocritical_drift(series: &[(f64, f64)], sigma: Option<&[f64]>) -> Result<ScalingFit> {
    if series.len() < 6 {
        return Err(Error::InsufficientSpan(format!("{} sizes; need at least 6", series.len())));
    }
    if sigma.is_some_and(|s| s.len() != series.len() || s.iter().any(|v| !(*v > 0.0))) {
        return Err(Error::domain("uncertainties must be positive and match the series"));
    }
    let x: Vec<f64> = series.iter().map(|p| p.0).collect();
    let y: Vec<f64> = series.iter().map(|p| p.1).collect();
    let n = x.len() - 1;
    let starts: Vec<Vec<f64>> = Z_STARTS
        .iter()
        .flat_map(|&yv| B_STARTS.iter().map(move |&b| (yv, b)))
        .map(|(yv, b)| {
            // two-point estimate of (g∞, a) from the ends at this exponent
            let (p0, p1) = (x[0].powf(-yv), x[n].powf(-yv));
            let a = (y[0] - y[n]) / (p0 - p1);
            vec![y[n] - a * p1, a, yv, b, 0.0]
        })
        .collect();
    let fit = fit_curve(&x, &y, sigma, drift_model, drift_guard, &starts, &[false; 5])?;
    let mut est = estimates(&["g_c", "a", "inv_nu", "b", "omega"], &fit);
    let w = est[4].value.exp();
    est[4] = Estimate { name: "omega", value: w, stderr: w * est[4].stderr };
    let mut cov = fit.covariance.clone();
    for k in 0..5 {
        cov[(4, k)] *= w;
        cov[(k, 4)] *= w;
    }
    Ok(ScalingFit {
        model: FitModel::PseudocriticalDrift,
        estimates: est,
        covariance: cov,
        residual_norm: fit.cost.sqrt(),
        points: x.len(),
        systematic: 0.0,
        companions: Vec::new(),
    })
}

/// Contour crossings of an entropy field.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontDataset {
    /// Absolute entropy increments above the t = 0 baseline.
    pub levels: Vec<f64>,
    /// `crossings[i]` holds (t, d) for `levels[i]`, increasing in both.
    pub crossings: Vec<Vec<(f64, f64)>>,
    /// Crossings dropped because they broke monotonicity, per level.
    pub discarded: Vec<usize>,
}

/// Smallest distance used by front fits; closer bonds see the drive's near field.
pub const MIN_FRONT_DISTANCE: usize = 8;

/// First time ΔS(b, t) exceeds `level`, linearly interpolated between snapshots.
fn first_crossing(field: &EntropyField, bond: usize, level: f64) -> Option<f64> {
    let base = field.values[0][bond];
    let mut prev = (field.times[0], 0.0);
    for (t, row) in field.times.iter().zip(&field.values).skip(1) {
        let ds = row[bond] - base;
        if ds > level {
            let frac = (level - prev.1) / (ds - prev.1);
            return Some(prev.0 + frac * (t - prev.0));
        }
        prev = (*t, ds);
    }
    None
}

/// For each level, the time at which the entropy increment at distance d
/// from the driven site first exceeds it, averaged over the two sides.
///
/// Bond j* + d − 1 (right) and bond j* − d (left) are at distance d; bond b
/// separates sites b and b + 1.
pub fn extract_front(field: &EntropyField, levels: &[f64], baseline_eps: f64) -> Result<FrontDataset> {
    if field.values.is_empty() || field.times.first() != Some(&0.0) {
        return Err(Error::domain("field needs a t = 0 baseline row"));
    }
    if levels.is_empty() || levels.iter().any(|&l| !(l > baseline_eps)) {
        return Err(Error::domain("levels must exceed baseline_eps"));
    }
    let js = field.source_site;
    let bonds = field.bonds();
    let max_d = js.min(bonds + 1 - js);
    let mut crossings = Vec::with_capacity(levels.len());
    let mut discarded = Vec::with_capacity(levels.len());
    for &level in levels {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        let mut dropped = 0;
        for d in 1..=max_d {
            let sides = [js.checked_add(d - 1).filter(|&b| b < bonds), js.checked_sub(d)];
            let times: Vec<f64> = sides.iter().flatten().filter_map(|&b| first_crossing(field, b, level)).collect();
            if times.is_empty() {
                continue;
            }
            let t = times.iter().sum::<f64>() / times.len() as f64;
            if pts.last().is_some_and(|&(tp, _)| t <= tp) {
                dropped += 1;
                continue;
            }
            pts.push((t, d as f64));
        }
        crossings.push(pts);
        discarded.push(dropped);
    }
    let reaches = crossings[levels_min_index(levels)].iter().any(|&(_, d)| d > 5.0);
    if !reaches {
        return Err(Error::NoFront);
    }
    Ok(FrontDataset { levels: levels.to_vec(), crossings, discarded })
}

fn levels_min_index(levels: &[f64]) -> usize {
    levels.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|p| p.0).unwrap_or(0)
}

/// Contour levels {0.05, 0.10, 0.20} × the largest entropy increment in the field.
pub fn default_levels(field: &EntropyField) -> Vec<f64> {
    let base = &field.values[0];
    let peak = field
        .values
        .iter()
        .flat_map(|row| row.iter().zip(base).map(|(s, b)| s - b))
        .fold(0.0, f64::max);
    [0.05, 0.10, 0.20].iter().map(|f| f * peak).collect()
}

/// Fit d = a (t − t0)^{1/z} to one level's crossings (d ≥ `MIN_FRONT_DISTANCE`).
pub fn fit_front_level(points: &[(f64, f64)], sigma: Option<&[f64]>) -> Result<ScalingFit> {
    let pts: Vec<(usize, (f64, f64))> =
        points.iter().copied().enumerate().filter(|(_, p)| p.1 >= MIN_FRONT_DISTANCE as f64).collect();
    if pts.len() < 10 {
        return Err(Error::InsufficientSpan(format!("{} crossings beyond the near field; need 10", pts.len())));
    }
    let t: Vec<f64> = pts.iter().map(|p| p.1 .0).collect();
    let d: Vec<f64> = pts.iter().map(|p| p.1 .1).collect();
    let (tmin, tmax) = (t[0], t[t.len() - 1]);
    if !(tmin > 0.0) || tmax < 4.0 * tmin {
        return Err(Error::InsufficientSpan(format!("crossing times span {tmin:.3}..{tmax:.3}; need a factor 4")));
    }
    let sig: Option<Vec<f64>> = sigma.map(|s| pts.iter().map(|p| s[p.0]).collect());
    // Starting points: log–log slope with t0 = 0, then offsets into the gap before tmin.
    let n = t.len() as f64;
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let p0 = sxy / sxx;
    let starts: Vec<Vec<f64>> = [0.0, 0.5, -0.5]
        .iter()
        .map(|f| {
            let t0 = f * tmin;
            let c = my - p0 * t.iter().map(|v| (v - t0).ln()).sum::<f64>() / n;
            vec![c, p0, t0]
        })
        .collect();
    fn guard(_: &[f64]) -> bool {
        true
    }
    let fit = fit_curve(&t, &d, sig.as_deref(), front_model, guard, &starts, &[false; 3])
        .and_then(|f| if f.params[2] < tmin { Ok(f) } else { Err(Error::SingularFit) })?;
    let est = estimates(&["log_a", "inv_z", "t0"], &fit);
    let (p, sp) = (est[1].value, est[1].stderr);
    let mut all = est;
    all.push(Estimate { name: "z", value: 1.0 / p, stderr: sp / (p * p) });
    Ok(ScalingFit {
        model: FitModel::FrontLaw,
        estimates: all,
        covariance: fit.covariance,
        residual_norm: fit.cost.sqrt(),
        points: t.len(),
        systematic: 0.0,
        companions: Vec::new(),
    })
}

/// Per-level front fits pooled into one z.
///
/// The pooled value is the mean of the per-level z; its `stderr` is the
/// larger of the mean statistical error and the inter-level standard
/// deviation, and `systematic` is the half-range across levels.
pub fn fit_front_exponent(front: &FrontDataset) -> Result<ScalingFit> {
    let per_level: Vec<ScalingFit> = front.crossings.iter().map(|c| fit_front_level(c, None)).collect::<Result<_>>()?;
    let zs: Vec<f64> = per_level.iter().map(|f| f.value("z")).collect();
    let n = zs.len() as f64;
    let mean = zs.iter().sum::<f64>() / n;
    let stat = per_level.iter().map(|f| f.stderr("z")).sum::<f64>() / n;
    let spread = if zs.len() > 1 { (zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    let half_range = 0.5 * (zs.iter().fold(f64::MIN, |a, &b| a.max(b)) - zs.iter().fold(f64::MAX, |a, &b| a.min(b)));
    let err = stat.max(spread);
    Ok(ScalingFit {
        model: FitModel::FrontPooled,
        estimates: vec![Estimate { name: "z", value: mean, stderr: err }],
        covariance: DMatrix::from_element(1, 1, err * err),
        residual_norm: per_level.iter().map(|f| f.residual_norm.powi(2)).sum::<f64>().sqrt(),
        points: per_level.iter().map(|f| f.points).sum(),
        systematic: half_range,
        companions: per_level,
    })
}

/// Ordinary least-squares line y = c + s x; returns (s, c, stderr of s).
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let s = sxy / sxx;
    let c = my - s * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - c - s * a).powi(2)).sum();
    let se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (s, c, se)
}

/// Log–log slope of E against k from samples near k = 0 at g = g_c.
///
/// The slope over all samples is the estimate; the slope over the
/// smaller-k half is the nested window, and their difference is `systematic`.
pub fn fit_dispersion_z(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < 8 {
        return Err(Error::IllConditioned(format!("{} samples; need at least 8", samples.len())));
    }
    if samples.iter().any(|&(k, e)| !(k > 0.0) || !(e > 0.0)) {
        return Err(Error::domain("dispersion samples need k > 0 and E > 0"));
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lx: Vec<f64> = s.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = s.iter().map(|p| p.1.ln()).collect();
    let (z, c, se) = ols(&lx, &ly);
    let half = s.len().div_ceil(2).max(4);
    let (z_inner, _, _) = ols(&lx[..half], &ly[..half]);
    let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - c - z * a).powi(2)).sum();
    Ok(ScalingFit {
        model: FitModel::DispersionSlope,
        estimates: vec![
            Estimate { name: "z", value: z, stderr: se },
            Estimate { name: "log_amplitude", value: c, stderr: f64::NAN },
        ],
        covariance: DMatrix::from_element(1, 1, se * se),
        residual_norm: rss.sqrt(),
        points: s.len(),
        systematic: (z - z_inner).abs(),
        companions: Vec::new(),
    })
}
