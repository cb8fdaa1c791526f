//! Exact diagonalisation of the spin chain for L ≤ 14.
//!
//! Basis and sign conventions follow [`crate::mpo::DenseHamiltonian`]: site 0
//! is the most significant bit, bit value 0 is spin up, and
//! `H = −Σ_{i<j} J(j−i) σˣ_i σˣ_j + g Σ σᶻ_j − h σˣ_0`.
//! The optional boundary pin h breaks the Z₂ symmetry; without it the
//! Hamiltonian is block diagonal in σᶻ parity and each block is solved
//! separately.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)] // shadowed by std float methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernel::CouplingKernel;
use crate::mpo::DENSE_LIMIT;

/// Target energy variance for every reported eigenpair.
pub const VARIANCE_TARGET: f64 = 1e-10;

const MAX_KRYLOV: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinChainSpec {
    pub length: usize,
    /// Couplings J0·J(r) for r = 1..L−1 (index 0 unused).
    pub couplings: Vec<f64>,
    pub g: f64,
    /// Longitudinal field on site 0; zero keeps the parity symmetry.
    pub pin: f64,
}

impl SpinChainSpec {
    pub fn new(kernel: &CouplingKernel, g: f64, length: usize) -> Result<Self> {
        if !(2..=DENSE_LIMIT).contains(&length) {
            return Err(Error::SizeLimit { length, limit: DENSE_LIMIT });
        }
        if kernel.max_range < length - 1 {
            return Err(Error::domain("kernel range must cover the chain"));
        }
        if !g.is_finite() {
            return Err(Error::domain("field must be finite"));
        }
        let couplings = (0..length).map(|r| if r == 0 { 0.0 } else { kernel.get(r) }).collect();
        Ok(Self { length, couplings, g, pin: 0.0 })
    }

    pub fn with_field(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    pub fn with_pin(&self, pin: f64) -> Self {
        Self { pin, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        1 << self.length
    }

    /// σˣσˣ flip masks with their (negated) couplings.
    fn bonds(&self) -> Vec<(usize, f64)> {
        let l = self.length;
        let mut out = Vec::with_capacity(l * (l - 1) / 2);
        for i in 0..l {
            for j in i + 1..l {
                let c = self.couplings[j - i];
                if c != 0.0 {
                    out.push(((1 << (l - 1 - i)) | (1 << (l - 1 - j)), -c));
                }
            }
        }
        out
    }

    fn diagonal(&self, s: usize) -> f64 {
        self.g * (self.length as f64 - 2.0 * s.count_ones() as f64)
    }

    /// H ψ over the full 2^L space.
    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        Sector::full(self).apply(self, &self.bonds(), psi)
    }
}

/// Basis states of one symmetry block.
struct Sector {
    states: Vec<usize>,
    /// Full-basis state → position in `states` (usize::MAX if absent).
    index: Vec<usize>,
    parity: Option<u32>,
}

impl Sector {
    fn full(spec: &SpinChainSpec) -> Self {
        let n = spec.dim();
        Self { states: (0..n).collect(), index: (0..n).collect(), parity: None }
    }

    fn parity(spec: &SpinChainSpec, p: u32) -> Self {
        let n = spec.dim();
        let states: Vec<usize> = (0..n).filter(|s| s.count_ones() % 2 == p).collect();
        let mut index = vec![usize::MAX; n];
        for (k, &s) in states.iter().enumerate() {
            index[s] = k;
        }
        Self { states, index, parity: Some(p) }
    }

    fn apply(&self, spec: &SpinChainSpec, bonds: &[(usize, f64)], psi: &[f64]) -> Vec<f64> {
        let pin_mask = 1 << (spec.length - 1);
        self.states
            .iter()
            .map(|&s| {
                let mut acc = spec.diagonal(s) * psi[self.index[s]];
                for &(mask, c) in bonds {
                    acc += c * psi[self.index[s ^ mask]];
                }
                if spec.pin != 0.0 {
                    acc -= spec.pin * psi[self.index[s ^ pin_mask]];
                }
                acc
            })
            .collect()
    }

    fn embed(&self, dim: usize, v: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(dim);
        for (&s, &x) in self.states.iter().zip(v) {
            out[s] = x;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub energy: f64,
    /// Full-basis vector, unit norm.
    pub vector: DVector<f64>,
    /// ‖Hψ − Eψ‖.
    pub residual: f64,
    /// ⟨H²⟩ − ⟨H⟩².
    pub variance: f64,
    /// σᶻ parity (0 even, 1 odd), if the state lies in one block.
    pub parity: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending in energy.
    pub states: Vec<EigenPair>,
}

impl EigenResult {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }

    pub fn ground(&self) -> &EigenPair {
        &self.states[0]
    }

    /// E1 − E0 over all sectors; zero for a degenerate doublet.
    pub fn gap(&self) -> f64 {
        self.states.get(1).map_or(f64::NAN, |s| s.energy - self.states[0].energy)
    }

    pub fn ground_variance(&self) -> f64 {
        self.states[0].variance
    }
}

/// Lanczos with full reorthogonalisation; returns the `m` lowest Ritz pairs.
fn lanczos(spec: &SpinChainSpec, sector: &Sector, m: usize) -> Result<Vec<EigenPair>> {
    let bonds = spec.bonds();
    let n = sector.states.len();
    let m = m.min(n);
    let kmax = n.min(MAX_KRYLOV);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(kmax);
    // deterministic start vector with weight on every state
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i as f64 * 0.618_034).fract() - 0.5)).collect();
    normalize(&mut v);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;
    loop {
        let w0 = sector.apply(spec, &bonds, &v);
        basis.push(v);
        let k = basis.len();
        let mut w = w0;
        let a = dot(&w, &basis[k - 1]);
        alpha.push(a);
        // two passes of Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let bnorm = dot(&w, &w).sqrt();
        let done = k == kmax || bnorm < 1e-12;
        if k >= m && (k.is_multiple_of(5) || done) {
            let (_, vecs) = tridiagonal_eigen(&alpha, &beta);
            let res: Vec<f64> = (0..m).map(|i| (bnorm * vecs[(k - 1, i)]).abs()).collect();
            let worst = res.iter().fold(0.0f64, |x, &y| x.max(y));
            best = best.min(worst);
            if worst < 1e-9 || done {
                let mut out = Vec::with_capacity(m);
                for i in 0..m {
                    let mut x = vec![0.0; n];
                    for (j, b) in basis.iter().enumerate() {
                        axpy(vecs[(j, i)], b, &mut x);
                    }
                    normalize(&mut x);
                    let hx = sector.apply(spec, &bonds, &x);
                    let e = dot(&x, &hx);
                    let r: f64 = hx.iter().zip(&x).map(|(h, v)| (h - e * v).powi(2)).sum::<f64>().sqrt();
                    out.push(EigenPair {
                        energy: e,
                        vector: sector.embed(spec.dim(), &x),
                        residual: r,
                        // equals ⟨H²⟩ − ⟨H⟩² for unit x, without the cancellation
                        variance: r * r,
                        parity: sector.parity,
                    });
                }
                let worst_var = out.iter().map(|p| p.variance).fold(0.0f64, f64::max);
                if worst_var >= VARIANCE_TARGET {
                    return Err(Error::NoConvergence { residual: best.max(worst_var.sqrt()) });
                }
                return Ok(out);
            }
        }
        beta.push(bnorm);
        v = w.iter().map(|x| x / bnorm).collect();
    }
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// The `m` lowest eigenpairs (m ≤ 6), merged across parity sectors when the
/// chain is unpinned.
pub fn lowest_states(spec: &SpinChainSpec, m: usize) -> Result<EigenResult> {
    if !(1..=6).contains(&m) {
        return Err(Error::domain("m must be between 1 and 6"));
    }
    if spec.length > DENSE_LIMIT {
        return Err(Error::SizeLimit { length: spec.length, limit: DENSE_LIMIT });
    }
    let mut states = if spec.pin != 0.0 {
        lanczos(spec, &Sector::full(spec), m)?
    } else {
        let mut s = lanczos(spec, &Sector::parity(spec, 0), m)?;
        s.extend(lanczos(spec, &Sector::parity(spec, 1), m)?);
        s
    };
    states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    states.truncate(m);
    Ok(EigenResult { states })
}

/// Von Neumann entropy (nats) between sites [0, cut) and [cut, L).
pub fn bipartite_entropy(psi: &DVector<f64>, length: usize, cut: usize) -> Result<f64> {
    if psi.len() != 1 << length {
        return Err(Error::domain("state dimension must be 2^L"));
    }
    if !(1..length).contains(&cut) {
        return Err(Error::domain("cut must lie in 1..L-1"));
    }
    let cols = 1 << (length - cut);
    let mat = DMatrix::from_fn(1 << cut, cols, |r, c| psi[r * cols + c]);
    let sv = mat.singular_values();
    let norm: f64 = sv.iter().map(|s| s * s).sum();
    Ok(sv
        .iter()
        .map(|s| s * s / norm)
        .filter(|&p| p > 1e-300)
        .map(|p| -p * p.ln())
        .sum())
}

/// Default boundary pin used for entropy scans.
pub const DEFAULT_PIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub g: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    pub half_entropy: f64,
    pub variance: f64,
}

/// Gaps from the symmetric chain, half-chain entropy from the pinned ground state.
pub fn scan_field(spec: &SpinChainSpec, fields: &[f64], pin: f64) -> Result<Vec<ScanPoint>> {
    fields
        .iter()
        .map(|&g| {
            let sym = lowest_states(&spec.with_field(g).with_pin(0.0), 2)?;
            let pinned = if pin == 0.0 { sym.clone() } else { lowest_states(&spec.with_field(g).with_pin(pin), 1)? };
            let s = bipartite_entropy(&pinned.ground().vector, spec.length, spec.length / 2)?;
            Ok(ScanPoint {
                g,
                e0: sym.states[0].energy,
                e1: sym.states[1].energy,
                gap: sym.gap(),
                half_entropy: s,
                variance: sym.ground_variance().max(pinned.ground_variance()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEstimate {
    pub position: f64,
    /// Jackknife standard error.
    pub uncertainty: f64,
    pub length_scale: f64,
    pub ridge: f64,
}

struct Ridge {
    x: Vec<f64>,
    weights: DVector<f64>,
    mean: f64,
    ell: f64,
}

impl Ridge {
    fn fit(x: &[f64], y: &[f64], ell: f64, ridge: f64) -> Option<(Self, f64)> {
        let n = x.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let k = DMatrix::from_fn(n, n, |i, j| se(x[i], x[j], ell));
        let reg = &k + DMatrix::identity(n, n) * ridge;
        let inv = reg.try_inverse()?;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - mean));
        let weights = &inv * &yc;
        // closed-form leave-one-out residuals: r_i = w_i / (K+λI)⁻¹_ii
        let loo: f64 = (0..n).map(|i| (weights[i] / inv[(i, i)]).powi(2)).sum::<f64>() / n as f64;
        Some((Self { x: x.to_vec(), weights, mean, ell }, loo))
    }

    fn eval(&self, t: f64) -> f64 {
        self.mean + self.x.iter().zip(self.weights.iter()).map(|(&xi, &w)| w * se(t, xi, self.ell)).sum::<f64>()
    }

    fn argmax(&self, lo: f64, hi: f64) -> f64 {
        const GRID: usize = 2000;
        let at = |i: usize| lo + (hi - lo) * i as f64 / GRID as f64;
        let i = (0..=GRID).max_by(|&a, &b| self.eval(at(a)).total_cmp(&self.eval(at(b)))).unwrap_or(0);
        if i == 0 || i == GRID {
            return at(i);
        }
        // parabolic refinement through the three grid points
        let (fm, f0, fp) = (self.eval(at(i - 1)), self.eval(at(i)), self.eval(at(i + 1)));
        let den = fm - 2.0 * f0 + fp;
        let h = (hi - lo) / GRID as f64;
        if den < 0.0 { at(i) + 0.5 * h * (fm - fp) / den } else { at(i) }
    }
}

fn se(a: f64, b: f64, ell: f64) -> f64 {
    (-0.5 * ((a - b) / ell).powi(2)).exp()
}

const LENGTH_FACTORS: [f64; 6] = [0.05, 0.08, 0.12, 0.18, 0.27, 0.4];
const RIDGES: [f64; 4] = [1e-8, 1e-6, 1e-4, 1e-2];

/// Peak of a smooth kernel-ridge fit to (g, S) samples.
///
/// Squared-exponential kernel; length scale (a fraction of the scanned
/// interval) and ridge are chosen by leave-one-out cross-validation. The
/// uncertainty is the jackknife spread of the peak over leave-one-out refits.
pub fn entropy_peak_gc(g: &[f64], s: &[f64]) -> Result<PeakEstimate> {
    if g.len() != s.len() || g.len() < 9 {
        return Err(Error::domain("need at least 9 (g, S) points"));
    }
    if g.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("fields must be strictly increasing"));
    }
    let (lo, hi) = (g[0], g[g.len() - 1]);
    let imax = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|p| p.0).unwrap_or(0);
    if imax == 0 || imax == s.len() - 1 {
        return Err(Error::NoInteriorPeak);
    }
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let ys: Vec<f64> = s.iter().map(|v| v / scale).collect();
    let mut best: Option<(f64, f64, f64)> = None;
    for &f in &LENGTH_FACTORS {
        for &r in &RIDGES {
            if let Some((_, loo)) = Ridge::fit(g, &ys, f * (hi - lo), r) {
                if best.is_none_or(|b| loo < b.0) {
                    best = Some((loo, f * (hi - lo), r));
                }
            }
        }
    }
    let (_, ell, ridge) = best.ok_or_else(|| Error::IllConditioned("kernel matrix singular".into()))?;
    let model = Ridge::fit(g, &ys, ell, ridge).ok_or(Error::SingularFit)?.0;
    let position = model.argmax(lo, hi);
    let edge = 0.01 * (hi - lo);
    if position - lo < edge || hi - position < edge {
        return Err(Error::NoInteriorPeak);
    }
    let n = g.len();
    let mut peaks = Vec::with_capacity(n);
    for drop in 0..n {
        let gx: Vec<f64> = (0..n).filter(|&i| i != drop).map(|i| g[i]).collect();
        let gy: Vec<f64> = (0..n).filter(|&i| i != drop).map(|i| ys[i]).collect();
        let m = Ridge::fit(&gx, &gy, ell, ridge).ok_or(Error::SingularFit)?.0;
        peaks.push(m.argmax(lo, hi));
    }
    let mean = peaks.iter().sum::<f64>() / n as f64;
    let var = peaks.iter().map(|p| (p - mean).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    if !var.is_finite() {
        return Err(Error::IllConditioned(format!("jackknife variance {var}")));
    }
    Ok(PeakEstimate { position, uncertainty: var.sqrt(), length_scale: ell, ridge })
}
