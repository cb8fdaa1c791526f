//! Sum-of-exponentials compression of the coupling kernel,
//! `J0·J(r) ≈ Σ_α a_α e^{−b_α r}` on `r = 1..=range`.
//!
//! Each round fixes the number of terms N and alternates two steps:
//! Levenberg–Marquardt on `β = ln b` with the amplitudes eliminated by
//! weighted linear least squares (variable projection, Kaufman Jacobian), and
//! a Lawson-style reweighting `w_r ← w_r·|e_r| / max|e|` that pushes the
//! weighted optimum towards the minimax one. The round with N terms is
//! warm-started from the optimum with N − 1 terms plus one seeded rate.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by std float methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernel::CouplingKernel;
use crate::lsq::{levenberg_marquardt, LeastSquaresProblem, LmOptions};

/// Decay rates are kept inside this box during the search.
const RATE_MIN: f64 = 1e-6;
const RATE_MAX: f64 = 20.0;
/// Lawson weights never drop below this fraction of the total.
const WEIGHT_FLOOR: f64 = 1e-14;
const AMPLITUDE_RCOND: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub a: f64,
    pub b: f64,
}

/// How the extra decay rate of each new round is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedStrategy {
    /// Log-linear slope of |J(r)| over the decade of r where the current
    /// residual peaks.
    #[default]
    TailSlope,
    /// Geometric midpoint of the widest gap between current rates (or an
    /// extension past either end).
    GeometricGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub tolerance: f64,
    pub max_terms: usize,
    /// Fit over r = 1..=range; `None` uses the kernel's full range.
    pub range: Option<usize>,
    pub seed_strategy: SeedStrategy,
    /// Reweighting sweeps per round.
    pub lawson_sweeps: usize,
    /// LM iterations per sweep.
    pub lm_iterations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_terms: 20,
            range: None,
            seed_strategy: SeedStrategy::TailSlope,
            lawson_sweeps: 15,
            lm_iterations: 60,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::domain("tolerance must be > 0"));
        }
        if self.max_terms < 2 {
            return Err(Error::domain("max_terms must be >= 2"));
        }
        if self.lawson_sweeps == 0 || self.lm_iterations == 0 {
            return Err(Error::domain("sweep and iteration counts must be >= 1"));
        }
        Ok(())
    }
}

/// One round of the escalation: best sup error found with `terms` exponentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscalationStep {
    pub terms: usize,
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumApproximation {
    /// Sorted by descending decay rate.
    pub terms: Vec<ExpTerm>,
    pub fitted_range: usize,
    /// max_{1≤r≤range} |J0·J(r) − Σ a e^{−b r}|.
    pub sup_error: f64,
    /// Total LM iterations across all rounds.
    pub iterations_used: usize,
    pub escalation: Vec<EscalationStep>,
    pub seed_strategy: SeedStrategy,
}

/// Σ_α a_α e^{−b_α r}.
pub fn evaluate_expsum(approx: &ExpSumApproximation, r: usize) -> f64 {
    expsum_at(&approx.terms, r as f64)
}

fn expsum_at(terms: &[ExpTerm], r: f64) -> f64 {
    terms.iter().map(|t| t.a * (-t.b * r).exp()).sum()
}

/// `(r, J0·J(r) − model(r))` for r = 1..=fitted_range.
pub fn pointwise_error_profile(approx: &ExpSumApproximation, kernel: &CouplingKernel) -> Result<Vec<(usize, f64)>> {
    if approx.fitted_range > kernel.max_range {
        return Err(Error::domain("approximation range exceeds kernel range"));
    }
    Ok((1..=approx.fitted_range).map(|r| (r, kernel.get(r) - evaluate_expsum(approx, r))).collect())
}

fn sup_error_of(terms: &[ExpTerm], target: &[f64]) -> f64 {
    target
        .iter()
        .enumerate()
        .map(|(i, y)| (y - expsum_at(terms, (i + 1) as f64)).abs())
        .fold(0.0, f64::max)
}

/// Fit the kernel's couplings r = 1..=range.
pub fn fit_exponentials(kernel: &CouplingKernel, config: &FitConfig) -> Result<ExpSumApproximation> {
    config.validate()?;
    if kernel.max_range < 10 {
        return Err(Error::domain("kernel max_range must be >= 10 for an exponential fit"));
    }
    let range = config.range.unwrap_or(kernel.max_range);
    if range < 10 || range > kernel.max_range {
        return Err(Error::domain("fit range must lie in 10..=kernel.max_range"));
    }
    fit_exponentials_to(&kernel.values[1..=range], config)
}

const POLISH_ROUNDS: usize = 40;
const POLISH_GAIN: f64 = 1e-13;

/// Fit arbitrary samples `target[i] = f(i + 1)`.
pub fn fit_exponentials_to(target: &[f64], config: &FitConfig) -> Result<ExpSumApproximation> {
    config.validate()?;
    if target.len() < 3 {
        return Err(Error::domain("need at least 3 samples"));
    }
    if target.iter().filter(|v| **v != 0.0).count() < 2 {
        return Err(Error::DegenerateKernel);
    }
    let mut fitter = Fitter::new(target, config);

    let mut beta = vec![2.0f64.ln(), 0.05f64.ln()];
    let mut escalation: Vec<EscalationStep> = Vec::new();
    let mut best: Option<(f64, Vec<ExpTerm>)> = None;
    let mut n = 2;
    loop {
        let (sup, terms) = if n == 2 {
            fitter.round(&beta)
        } else {
            // Warm start: previous rates plus one seeded rate. Try seeds in
            // order of preference until one improves on the previous round.
            let prev_sup = escalation.last().map_or(f64::INFINITY, |s| s.sup_error);
            let prev_terms = &best.as_ref().expect("round 2 ran").1;
            let mut round_best: Option<(f64, Vec<ExpTerm>)> = None;
            for seed in fitter.seeds(prev_terms) {
                let mut start: Vec<f64> = prev_terms.iter().map(|t| t.b.ln()).collect();
                start.push(seed.ln());
                let candidate = fitter.round(&start);
                let improved = candidate.0 < prev_sup;
                if round_best.as_ref().is_none_or(|b| candidate.0 < b.0) {
                    round_best = Some(candidate);
                }
                if improved {
                    break;
                }
            }
            round_best.expect("at least one seed")
        };
        escalation.push(EscalationStep { terms: n, sup_error: sup });
        if best.as_ref().is_none_or(|b| sup < b.0) {
            best = Some((sup, terms));
        }
        let (best_sup, best_terms) = best.as_ref().expect("set above");
        beta = best_terms.iter().map(|t| t.b.ln()).collect();
        if *best_sup <= config.tolerance || n >= config.max_terms {
            break;
        }
        n += 1;
    }

    let (_, terms) = best.expect("at least one round");
    let mut terms = simplify(terms, target, config.tolerance);
    // Polish at fixed size until a round no longer helps, so that refitting
    // the result is a no-op.
    let mut sup = sup_error_of(&terms, target);
    for _ in 0..POLISH_ROUNDS {
        terms.sort_by(|x, y| y.b.total_cmp(&x.b));
        let beta: Vec<f64> = terms.iter().map(|t| t.b.ln()).collect();
        let (next, candidate) = fitter.round(&beta);
        if !(next < sup - POLISH_GAIN) {
            break;
        }
        sup = next;
        terms = candidate;
    }
    let approx = finish(terms, target, fitter.iterations, escalation, config.seed_strategy);
    if approx.sup_error <= config.tolerance {
        Ok(approx)
    } else {
        Err(Error::ToleranceNotReached { best: alloc::boxed::Box::new(approx) })
    }
}

/// Re-run one round at fixed term count, starting from `approx`.
///
/// The result is never worse than the starting point.
pub fn refit(approx: &ExpSumApproximation, target: &[f64], config: &FitConfig) -> Result<ExpSumApproximation> {
    config.validate()?;
    if approx.terms.is_empty() {
        return Err(Error::domain("refit needs a non-empty approximation"));
    }
    let start_sup = sup_error_of(&approx.terms, target);
    let mut fitter = Fitter::new(target, config);
    let beta: Vec<f64> = approx.terms.iter().map(|t| t.b.ln()).collect();
    let (sup, terms) = fitter.round(&beta);
    let terms = if sup < start_sup { terms } else { approx.terms.clone() };
    let mut escalation = approx.escalation.clone();
    escalation.push(EscalationStep { terms: terms.len(), sup_error: sup.min(start_sup) });
    Ok(finish(terms, target, fitter.iterations, escalation, approx.seed_strategy))
}

fn finish(
    mut terms: Vec<ExpTerm>,
    target: &[f64],
    iterations: usize,
    escalation: Vec<EscalationStep>,
    seed_strategy: SeedStrategy,
) -> ExpSumApproximation {
    terms.sort_by(|x, y| y.b.total_cmp(&x.b));
    let sup_error = sup_error_of(&terms, target);
    ExpSumApproximation { terms, fitted_range: target.len(), sup_error, iterations_used: iterations, escalation, seed_strategy }
}

/// Drop terms that contribute nothing and merge coincident rates, keeping the
/// change only if the tolerance still holds.
fn simplify(terms: Vec<ExpTerm>, target: &[f64], tolerance: f64) -> Vec<ExpTerm> {
    let before = sup_error_of(&terms, target);
    if before > tolerance {
        return terms;
    }
    let mut out: Vec<ExpTerm> = Vec::with_capacity(terms.len());
    let mut sorted = terms.clone();
    sorted.sort_by(|x, y| y.b.total_cmp(&x.b));
    for t in sorted {
        // Largest magnitude over r ≥ 1 is at r = 1.
        if (t.a * (-t.b).exp()).abs() < 1e-3 * tolerance {
            continue;
        }
        match out.last_mut() {
            Some(prev) if ((prev.b - t.b) / t.b).abs() < 1e-9 => prev.a += t.a,
            _ => out.push(t),
        }
    }
    if out.len() == terms.len() || out.is_empty() {
        return terms;
    }
    let rates: Vec<f64> = out.iter().map(|t| t.b).collect();
    let ones = DVector::from_element(target.len(), 1.0);
    let amps = amplitudes(&design(&rates, target.len()), &DVector::from_column_slice(target), &ones);
    let refitted: Vec<ExpTerm> = rates.iter().zip(amps.iter()).map(|(&b, &a)| ExpTerm { a, b }).collect();
    if sup_error_of(&refitted, target) <= tolerance {
        refitted
    } else {
        terms
    }
}

fn design(rates: &[f64], len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, rates.len(), |i, k| (-rates[k] * (i + 1) as f64).exp())
}

fn amplitudes(phi: &DMatrix<f64>, y: &DVector<f64>, sqrt_w: &DVector<f64>) -> DVector<f64> {
    crate::lsq::weighted_linear_lsq(phi, y, sqrt_w, AMPLITUDE_RCOND)
}

struct Fitter<'a> {
    target: &'a [f64],
    y: DVector<f64>,
    config: &'a FitConfig,
    iterations: usize,
}

impl<'a> Fitter<'a> {
    fn new(target: &'a [f64], config: &'a FitConfig) -> Self {
        Self { target, y: DVector::from_column_slice(target), config, iterations: 0 }
    }

    /// Lawson sweeps at fixed N. Returns the best (sup error, terms) seen,
    /// measured unweighted with the amplitudes actually fitted.
    fn round(&mut self, beta0: &[f64]) -> (f64, Vec<ExpTerm>) {
        let len = self.target.len();
        let mut weights = DVector::from_element(len, 1.0 / len as f64);
        let mut beta = DVector::from_column_slice(beta0);
        let mut best: (f64, Vec<ExpTerm>) = (f64::INFINITY, Vec::new());
        let opts = LmOptions { max_iterations: self.config.lm_iterations, ftol: 1e-12, ..LmOptions::default() };
        for _ in 0..self.config.lawson_sweeps {
            let mut problem = VarPro::new(&self.y, weights.map(f64::sqrt));
            if let Ok(out) = levenberg_marquardt(&mut problem, beta.clone(), &opts) {
                self.iterations += out.iterations;
                beta = out.params;
            }
            let rates: Vec<f64> = beta.iter().map(|v| v.exp()).collect();
            let phi = design(&rates, len);
            let a = amplitudes(&phi, &self.y, &weights.map(f64::sqrt));
            let err = &phi * &a - &self.y;
            let emax = err.amax();
            if emax < best.0 {
                best = (emax, rates.iter().zip(a.iter()).map(|(&b, &a)| ExpTerm { a, b }).collect());
            }
            if emax == 0.0 || !emax.is_finite() {
                break;
            }
            for (w, e) in weights.iter_mut().zip(err.iter()) {
                *w *= e.abs() / emax;
            }
            let total = weights.sum();
            weights.iter_mut().for_each(|w| *w = (*w / total).max(WEIGHT_FLOOR));
        }
        best
    }

    /// Candidate new rates, most preferred first.
    fn seeds(&self, terms: &[ExpTerm]) -> Vec<f64> {
        let mut rates: Vec<f64> = terms.iter().map(|t| t.b).collect();
        rates.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        let tail = self.tail_slope_seed(terms);
        let mut grid = Vec::new();
        // Widest log-gap midpoints first, then the two extensions.
        let mut gaps: Vec<(f64, f64)> = rates
            .windows(2)
            .map(|w| ((w[1] / w[0]).ln(), (w[0] * w[1]).sqrt()))
            .collect();
        gaps.sort_by(|x, y| y.0.total_cmp(&x.0));
        grid.push((rates[0] / 3.0).max(RATE_MIN));
        grid.extend(gaps.iter().take(1).map(|g| g.1));
        grid.push((rates[rates.len() - 1] * 3.0).min(RATE_MAX));
        match self.config.seed_strategy {
            SeedStrategy::TailSlope => {
                out.extend(tail);
                out.extend(grid);
            }
            SeedStrategy::GeometricGrid => {
                let mut g = grid;
                let widest = g.remove(1.min(g.len() - 1));
                out.push(widest);
                out.extend(g);
                out.extend(tail);
            }
        }
        out.dedup_by(|x, y| ((*x - *y) / *y).abs() < 1e-12);
        out
    }

    /// Decay rate of |target| over the decade of r holding the largest residual.
    fn tail_slope_seed(&self, terms: &[ExpTerm]) -> Option<f64> {
        let len = self.target.len();
        let (worst, _) = self
            .target
            .iter()
            .enumerate()
            .map(|(i, y)| (i, (y - expsum_at(terms, (i + 1) as f64)).abs()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let r_worst = (worst + 1) as f64;
        let lo = (r_worst / 3.0).max(1.0) as usize;
        let hi = ((r_worst * 3.0) as usize).min(len);
        let pts: Vec<(f64, f64)> = (lo..=hi)
            .filter_map(|r| {
                let v = self.target[r - 1].abs();
                (v > 0.0).then(|| (r as f64, v.ln()))
            })
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let slope = -sxy / sxx;
        (slope.is_finite() && slope > 0.0).then(|| slope.clamp(RATE_MIN, RATE_MAX))
    }
}

/// Variable-projection residual `√w (Φ(β) a*(β) − y)` with `b = e^β`.
struct VarPro<'a> {
    y: &'a DVector<f64>,
    sqrt_w: DVector<f64>,
    // Cached at the last successful residual evaluation.
    phi: DMatrix<f64>,
    a: DVector<f64>,
    basis: DMatrix<f64>,
}

impl<'a> VarPro<'a> {
    fn new(y: &'a DVector<f64>, sqrt_w: DVector<f64>) -> Self {
        Self { y, sqrt_w, phi: DMatrix::zeros(0, 0), a: DVector::zeros(0), basis: DMatrix::zeros(0, 0) }
    }
}

impl LeastSquaresProblem for VarPro<'_> {
    fn residuals(&mut self, p: &DVector<f64>) -> Option<DVector<f64>> {
        let rates: Vec<f64> = p.iter().map(|v| v.exp()).collect();
        let len = self.y.len();
        let phi = design(&rates, len);
        let mut phi_w = phi.clone();
        for (i, mut row) in phi_w.row_iter_mut().enumerate() {
            row *= self.sqrt_w[i];
        }
        let svd = phi_w.svd(true, true);
        let smax = svd.singular_values.max();
        let u = svd.u.as_ref()?;
        let yw = self.y.component_mul(&self.sqrt_w);
        // Orthonormal basis of the weighted column space (numerical rank).
        let keep: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > smax * AMPLITUDE_RCOND).collect();
        let basis = DMatrix::from_fn(len, keep.len(), |i, j| u[(i, keep[j])]);
        let a = svd.solve(&yw, smax * AMPLITUDE_RCOND).ok()?;
        let res = (&phi * &a - self.y).component_mul(&self.sqrt_w);
        if !res.iter().all(|v| v.is_finite()) {
            return None;
        }
        self.phi = phi;
        self.a = a;
        self.basis = basis;
        Some(res)
    }

    fn jacobian(&mut self, p: &DVector<f64>) -> DMatrix<f64> {
        let len = self.y.len();
        // ∂/∂β_k of √w Φ a = −√w r b_k e^{−b_k r} a_k
        let mut d = DMatrix::from_fn(len, p.len(), |i, k| {
            let b = p[k].exp();
            -self.sqrt_w[i] * (i + 1) as f64 * b * self.phi[(i, k)] * self.a[k]
        });
        // Kaufman: project out the weighted column space.
        let coeff = self.basis.transpose() * &d;
        d -= &self.basis * coeff;
        d
    }

    fn project(&self, p: &mut DVector<f64>) {
        let (lo, hi) = (RATE_MIN.ln(), RATE_MAX.ln());
        p.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, FractionalOrder};

    fn approx_of(terms: Vec<ExpTerm>) -> ExpSumApproximation {
        ExpSumApproximation {
            terms,
            fitted_range: 0,
            sup_error: 0.0,
            iterations_used: 0,
            escalation: Vec::new(),
            seed_strategy: SeedStrategy::TailSlope,
        }
    }

    #[test]
    fn evaluate_examples() {
        let a = approx_of(vec![ExpTerm { a: 1.0, b: 2f64.ln() }]);
        assert!((evaluate_expsum(&a, 1) - 0.5).abs() < 1e-16);
        assert_eq!(evaluate_expsum(&approx_of(Vec::new()), 7), 0.0);
    }

    #[test]
    fn synthetic_single_exponential_is_recovered() {
        let target: Vec<f64> = (1..=200).map(|r| 3.0 * (-0.7 * r as f64).exp()).collect();
        let fit = fit_exponentials_to(&target, &FitConfig::default()).unwrap();
        assert!(fit.terms.len() <= 2);
        let main = fit.terms.iter().max_by(|x, y| x.a.abs().total_cmp(&y.a.abs())).unwrap();
        assert!((main.a - 3.0).abs() < 1e-6 && (main.b - 0.7).abs() < 1e-6, "{:?}", fit.terms);
        assert!(fit.sup_error <= 1e-12);
    }

    #[test]
    fn nearest_neighbour_kernel_is_degenerate() {
        let k = build_kernel(FractionalOrder::new(2.0).unwrap(), 1.0, 50).unwrap();
        assert!(matches!(fit_exponentials(&k, &FitConfig::default()), Err(Error::DegenerateKernel)));
    }

    #[test]
    fn rejects_short_kernel_and_bad_config() {
        let k = build_kernel(FractionalOrder::new(1.5).unwrap(), 1.0, 5).unwrap();
        assert!(matches!(fit_exponentials(&k, &FitConfig::default()), Err(Error::Domain(_))));
        let k = build_kernel(FractionalOrder::new(1.5).unwrap(), 1.0, 50).unwrap();
        let bad = FitConfig { max_terms: 1, ..FitConfig::default() };
        assert!(fit_exponentials(&k, &bad).is_err());
    }

    #[test]
    fn two_terms_are_not_enough_for_q_one_and_a_half() {
        let k = build_kernel(FractionalOrder::new(1.5).unwrap(), 1.0, 1000).unwrap();
        let cfg = FitConfig { max_terms: 2, ..FitConfig::default() };
        match fit_exponentials(&k, &cfg) {
            Err(Error::ToleranceNotReached { best }) => {
                assert_eq!(best.terms.len(), 2);
                let profile = pointwise_error_profile(&best, &k).unwrap();
                let max = profile.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
                assert!(max > 1e-9);
                assert_eq!(max, best.sup_error);
            }
            other => panic!("expected TOLERANCE_NOT_REACHED, got {other:?}"),
        }
    }
}
