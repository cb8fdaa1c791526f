//! Gaussian-state dynamics under a windowed local field, and bond entropies.
//!
//! Majoranas are γ_{2j} = c_j + c†_j and γ_{2j+1} = i(c†_j − c_j); the state is
//! the real antisymmetric covariance Γ_ab = (i/2)⟨[γ_a, γ_b]⟩. Internally all
//! 2L × 2L matrices use block ordering (all even Majoranas, then all odd).
//!
//! With H = (i/4) γᵀ h γ the quadratic model has h_{2i,2j+1} = −M_ij, so
//! γ(t) = e^{ht} γ and, writing M = U Σ Vᵀ and Q = diag(U, V), the free
//! propagator is Q R(t) Qᵀ with R(t) = [[cos Σt, −sin Σt], [sin Σt, cos Σt]].
//! The ground state is Γ = Q [[0, I], [−I, 0]] Qᵀ.
//!
//! The drive λ0 ω(t) σᶻ_{j*} only rotates the two Majoranas of site j*.
//! Steps are Strang splits (half free step, drive rotation at the midpoint
//! field, half free step) accumulated in the interaction picture, where each
//! step is a rank-2 update of the accumulated propagator.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by std float methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadratic::momentum::critical_field;
use crate::quadratic::realspace::BdgRealSpaceModel;

/// Correlation eigenvalues are clamped this far inside (0, 1) before logs.
const CLAMP: f64 = 1e-12;

/// Four-term Blackman–Harris taper on [0, τ].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackmanHarrisWindow {
    pub tau: f64,
}

impl BlackmanHarrisWindow {
    pub const COEFFS: [f64; 4] = [0.35875, 0.48829, 0.14128, 0.01168];

    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::domain("window duration must be finite and > 0"));
        }
        Ok(Self { tau })
    }

    pub fn value(&self, t: f64) -> f64 {
        if !(0.0..=self.tau).contains(&t) {
            return 0.0;
        }
        let [a0, a1, a2, a3] = Self::COEFFS;
        if t == 0.5 * self.tau {
            // cos(π), cos(2π), cos(3π) exactly
            return a0 + a1 + a2 + a3;
        }
        let x = 2.0 * PI * t / self.tau;
        a0 - a1 * x.cos() + a2 * (2.0 * x).cos() - a3 * (3.0 * x).cos()
    }
}

/// Parameters of the local perturbation protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveProtocol {
    pub window: BlackmanHarrisWindow,
    pub lambda0: f64,
    /// Driven site j*.
    pub site: usize,
    /// Largest allowed time step; the actual step divides `snapshot_dt`.
    pub dt: f64,
    pub t_max: f64,
    pub snapshot_dt: f64,
}

impl DriveProtocol {
    /// λ0 = 0.1 g_c, τ = 5/g_c, dt = τ/500, j* = L/2, t_max = 0.225 L, snapshots every 0.5.
    pub fn defaults_for(model: &BdgRealSpaceModel) -> Self {
        let gc = critical_field(model.order, model.j0);
        let tau = 5.0 / gc;
        Self {
            window: BlackmanHarrisWindow { tau },
            lambda0: 0.1 * gc,
            site: model.length / 2,
            dt: tau / 500.0,
            t_max: 0.225 * model.length as f64,
            snapshot_dt: 0.5,
        }
    }

    fn validate(&self, length: usize) -> Result<()> {
        if self.site == 0 || self.site + 1 >= length {
            return Err(Error::domain("driven site must be interior"));
        }
        if !(self.dt > 0.0) || self.dt > self.window.tau / 100.0 {
            return Err(Error::domain("time step must satisfy 0 < dt <= tau/100"));
        }
        if !(self.t_max >= 0.0) || !(self.snapshot_dt > 0.0) {
            return Err(Error::domain("t_max must be >= 0 and snapshot_dt > 0"));
        }
        if !self.lambda0.is_finite() {
            return Err(Error::domain("lambda0 must be finite"));
        }
        Ok(())
    }
}

/// Normal modes M = U Σ Vᵀ of a real-space model.
#[derive(Debug, Clone)]
struct NormalModes {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    energies: DVector<f64>,
}

impl NormalModes {
    fn new(model: &BdgRealSpaceModel) -> Result<Self> {
        let svd = model.m().svd(true, true);
        let u = svd.u.ok_or(Error::NoConvergence { residual: f64::NAN })?;
        let v = svd.v_t.ok_or(Error::NoConvergence { residual: f64::NAN })?.transpose();
        Ok(Self { u, v, energies: svd.singular_values })
    }

    fn len(&self) -> usize {
        self.energies.len()
    }

    /// Q X Qᵀ for Q = diag(U, V).
    fn to_site_basis(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let l = self.len();
        let mut out = DMatrix::zeros(2 * l, 2 * l);
        let blocks = [(0, 0, &self.u, &self.u), (0, l, &self.u, &self.v), (l, 0, &self.v, &self.u), (l, l, &self.v, &self.v)];
        for (r, c, left, right) in blocks {
            let block = x.view((r, c), (l, l));
            let prod = left * block * right.transpose();
            out.view_mut((r, c), (l, l)).copy_from(&prod);
        }
        out
    }

    /// R(t) X R(t)ᵀ for the free rotation in the mode basis.
    fn rotate(&self, x: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
        let l = self.len();
        let (s, c): (Vec<f64>, Vec<f64>) = self.energies.iter().map(|e| (e * t).sin_cos()).unzip();
        let mut out = x.clone();
        // rows: R X
        for col in 0..2 * l {
            for k in 0..l {
                let (xe, xo) = (x[(k, col)], x[(k + l, col)]);
                out[(k, col)] = c[k] * xe - s[k] * xo;
                out[(k + l, col)] = s[k] * xe + c[k] * xo;
            }
        }
        // columns: (R X) Rᵀ
        let tmp = out.clone();
        for row in 0..2 * l {
            for k in 0..l {
                let (xe, xo) = (tmp[(row, k)], tmp[(row, k + l)]);
                out[(row, k)] = c[k] * xe - s[k] * xo;
                out[(row, k + l)] = s[k] * xe + c[k] * xo;
            }
        }
        out
    }
}

/// Ground state in the mode basis: [[0, I], [−I, 0]].
fn mode_ground_state(l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * l, 2 * l, |i, j| {
        if j == i + l {
            1.0
        } else if i == j + l {
            -1.0
        } else {
            0.0
        }
    })
}

/// Interaction-picture propagator W̃ for the driven chain, in the mode basis.
/// The full propagator at time t is Q R(t) W̃ Qᵀ.
#[derive(Debug, Clone)]
pub struct DrivenEvolution {
    modes: NormalModes,
    window: BlackmanHarrisWindow,
    lambda0: f64,
    site: usize,
    time: f64,
    w: DMatrix<f64>,
}

impl DrivenEvolution {
    pub fn new(model: &BdgRealSpaceModel, window: BlackmanHarrisWindow, lambda0: f64, site: usize) -> Result<Self> {
        if site >= model.length {
            return Err(Error::domain("driven site outside the chain"));
        }
        let modes = NormalModes::new(model)?;
        let n = 2 * model.length;
        Ok(Self { modes, window, lambda0, site, time: 0.0, w: DMatrix::identity(n, n) })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// One Strang step of signed length `dt`. A step with −dt from t + dt
    /// exactly undoes the step with dt from t.
    pub fn step(&mut self, dt: f64) {
        let mid = self.time + 0.5 * dt;
        let theta = 2.0 * self.lambda0 * self.window.value(mid) * dt;
        self.time += dt;
        if theta == 0.0 {
            return;
        }
        let l = self.modes.len();
        let j = self.site;
        // X = P R(mid): rows of Q at the driven Majoranas, rotated.
        let mut x = DMatrix::zeros(2, 2 * l);
        for k in 0..l {
            let (s, c) = (self.modes.energies[k] * mid).sin_cos();
            let (u, v) = (self.modes.u[(j, k)], self.modes.v[(j, k)]);
            x[(0, k)] = u * c;
            x[(0, k + l)] = -u * s;
            x[(1, k)] = v * s;
            x[(1, k + l)] = v * c;
        }
        // D = rotation − I on (even, odd) of site j, generator h_eo = −θ/dt.
        let (s, c) = theta.sin_cos();
        let d = nalgebra::Matrix2::new(c - 1.0, -s, s, c - 1.0);
        let xw = &x * &self.w; // 2 × 2L
        let dxw = DMatrix::from_fn(2, 2 * l, |r, col| d[(r, 0)] * xw[(0, col)] + d[(r, 1)] * xw[(1, col)]);
        self.w += x.transpose() * dxw;
    }

    /// max |W̃ᵀW̃ − I|.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.w.nrows();
        (self.w.transpose() * &self.w - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// Interaction-picture covariance W̃ Γ̃₀ W̃ᵀ.
    fn interaction_state(&self) -> DMatrix<f64> {
        let g0 = mode_ground_state(self.modes.len());
        &self.w * g0 * self.w.transpose()
    }

    /// Covariance at the current time.
    pub fn state(&self) -> CorrelationState {
        let g = self.modes.rotate(&self.interaction_state(), self.time);
        CorrelationState { time: self.time, gamma: self.modes.to_site_basis(&g) }
    }
}

/// Gaussian state as a Majorana covariance matrix (block ordering).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationState {
    pub time: f64,
    /// Γ in block ordering: rows 0..L are γ_{2j}, rows L..2L are γ_{2j+1}.
    pub gamma: DMatrix<f64>,
}

impl CorrelationState {
    /// Ground state of the quadratic model.
    pub fn ground(model: &BdgRealSpaceModel) -> Result<Self> {
        let modes = NormalModes::new(model)?;
        Ok(Self { time: 0.0, gamma: modes.to_site_basis(&mode_ground_state(model.length)) })
    }

    pub fn length(&self) -> usize {
        self.gamma.nrows() / 2
    }

    /// Γ with interleaved ordering γ_0, γ_1, γ_2, ...
    pub fn majorana_covariance(&self) -> DMatrix<f64> {
        let l = self.length();
        let idx = |a: usize| if a.is_multiple_of(2) { a / 2 } else { l + a / 2 };
        DMatrix::from_fn(2 * l, 2 * l, |a, b| self.gamma[(idx(a), idx(b))])
    }

    /// ⟨γ_a γ_b⟩ = δ_ab − i Γ_ab in block ordering.
    fn moment(&self, a: usize, b: usize) -> Complex64 {
        let delta = if a == b { 1.0 } else { 0.0 };
        Complex64::new(delta, -self.gamma[(a, b)])
    }

    /// G_ij = ⟨c†_i c_j⟩.
    pub fn g_matrix(&self) -> DMatrix<Complex64> {
        let l = self.length();
        let i1 = Complex64::new(0.0, 1.0);
        DMatrix::from_fn(l, l, |i, j| {
            let (ei, oi, ej, oj) = (i, i + l, j, j + l);
            (self.moment(ei, ej) + i1 * self.moment(ei, oj) - i1 * self.moment(oi, ej) + self.moment(oi, oj)) * 0.25
        })
    }

    /// F_ij = ⟨c†_i c†_j⟩.
    pub fn f_matrix(&self) -> DMatrix<Complex64> {
        let l = self.length();
        let i1 = Complex64::new(0.0, 1.0);
        DMatrix::from_fn(l, l, |i, j| {
            let (ei, oi, ej, oj) = (i, i + l, j, j + l);
            (self.moment(ei, ej) - i1 * self.moment(ei, oj) - i1 * self.moment(oi, ej) - self.moment(oi, oj)) * 0.25
        })
    }

    /// Build Γ from G = ⟨c†c⟩ and F = ⟨c†c†⟩.
    pub fn from_correlations(g: &DMatrix<Complex64>, f: &DMatrix<Complex64>) -> Result<Self> {
        let l = g.nrows();
        if g.ncols() != l || f.shape() != (l, l) {
            return Err(Error::domain("G and F must be square and of equal size"));
        }
        let i1 = Complex64::new(0.0, 1.0);
        // ⟨c_i c_j⟩ = conj F_ji, ⟨c_i c†_j⟩ = δ_ij − G_ji
        let cc = |i: usize, j: usize| f[(j, i)].conj();
        let ccd = |i: usize, j: usize| if i == j { Complex64::new(1.0, 0.0) - g[(j, i)] } else { -g[(j, i)] };
        let mut gamma = DMatrix::zeros(2 * l, 2 * l);
        for i in 0..l {
            for j in 0..l {
                let ee = cc(i, j) + ccd(i, j) + g[(i, j)] + f[(i, j)];
                let eo = i1 * (ccd(i, j) - cc(i, j) + f[(i, j)] - g[(i, j)]);
                let oe = i1 * (g[(i, j)] + f[(i, j)] - cc(i, j) - ccd(i, j));
                let oo = -(f[(i, j)] - g[(i, j)] - ccd(i, j) + cc(i, j));
                let entries = [(i, j, ee), (i, j + l, eo), (i + l, j, oe), (i + l, j + l, oo)];
                for (a, b, m) in entries {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    // Γ = i(⟨γγ⟩ − δ)
                    gamma[(a, b)] = (i1 * (m - delta)).re;
                }
            }
        }
        Ok(Self { time: 0.0, gamma })
    }

    /// Largest singular value of Γ (≤ 1 for a physical state).
    pub fn max_singular_value(&self) -> f64 {
        self.gamma.clone().singular_values().max()
    }
}

/// Sampled trajectory: times, plus what is needed to rebuild each state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub length: usize,
    pub protocol: DriveProtocol,
    pub times: Vec<f64>,
    /// Step actually used (divides the snapshot spacing).
    pub dt_used: f64,
    /// max |W̃ᵀW̃ − I| after the drive.
    pub orthogonality_defect: f64,
    modes: NormalModes,
    /// Interaction-picture covariances in the mode basis; `frame[i]` indexes it.
    frames: Vec<DMatrix<f64>>,
    frame: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> CorrelationState {
        let t = self.times[i];
        let g = self.modes.rotate(&self.frames[self.frame[i]], t);
        CorrelationState { time: t, gamma: self.modes.to_site_basis(&g) }
    }
}

/// Drive the ground state of `model` and sample it every `snapshot_dt` up to `t_max`.
///
/// After the window closes the interaction-picture state is frozen and later
/// snapshots are exact free evolution.
pub fn evolve_perturbation(model: &BdgRealSpaceModel, protocol: &DriveProtocol) -> Result<Trajectory> {
    protocol.validate(model.length)?;
    let mut evo = DrivenEvolution::new(model, protocol.window, protocol.lambda0, protocol.site)?;
    let substeps = (protocol.snapshot_dt / protocol.dt).ceil().max(1.0) as usize;
    let dt = protocol.snapshot_dt / substeps as f64;
    let count = (protocol.t_max / protocol.snapshot_dt + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..count).map(|i| i as f64 * protocol.snapshot_dt).collect();

    let mut frames = vec![evo.interaction_state()];
    let mut frame = vec![0];
    let mut steps = 0usize;
    for i in 1..count {
        if times[i - 1] < protocol.window.tau && protocol.lambda0 != 0.0 {
            for _ in 0..substeps {
                // Recompute from the step index to avoid drift in the clock.
                evo.time = steps as f64 * dt;
                evo.step(dt);
                steps += 1;
            }
            frames.push(evo.interaction_state());
        }
        frame.push(frames.len() - 1);
    }
    let defect = evo.orthogonality_defect();
    if steps > 0 && defect / steps as f64 > 1e-10 {
        return Err(Error::StepRejected { defect: defect / steps as f64 });
    }
    Ok(Trajectory {
        length: model.length,
        protocol: *protocol,
        times,
        dt_used: dt,
        orthogonality_defect: defect,
        modes: evo.modes,
        frames,
        frame,
    })
}

fn binary_entropy_half(nu: f64) -> f64 {
    let p = ((1.0 + nu) / 2.0).clamp(CLAMP, 1.0 - CLAMP);
    let m = 1.0 - p;
    -(p * p.ln() + m * m.ln())
}

/// Von Neumann entropy (nats) of the first `cut` sites, 1 ≤ cut ≤ L − 1.
///
/// Uses the smaller side; the eigenvalues of −Γ_A² are ν² (each twice) and
/// S = ½ Σ h((1 + ν)/2) over all of them.
pub fn bond_entropy(state: &CorrelationState, cut: usize) -> Result<f64> {
    let l = state.length();
    if cut == 0 || cut >= l {
        return Err(Error::domain("cut must satisfy 1 <= cut <= L-1"));
    }
    let sites: Vec<usize> = if cut <= l - cut { (0..cut).collect() } else { (cut..l).collect() };
    let m = sites.len();
    let idx = |a: usize| if a < m { sites[a] } else { l + sites[a - m] };
    let ga = DMatrix::from_fn(2 * m, 2 * m, |a, b| state.gamma[(idx(a), idx(b))]);
    let sq = ga.transpose() * &ga;
    let ev = sq.symmetric_eigenvalues();
    Ok(0.5 * ev.iter().map(|&x| binary_entropy_half(x.clamp(0.0, 1.0).sqrt())).sum::<f64>())
}

/// Entropies at every bond b = 0..L−2 (bond b separates sites b and b + 1).
pub fn bond_entropies(state: &CorrelationState) -> Vec<f64> {
    (1..state.length()).map(|cut| bond_entropy(state, cut).expect("cut in range")).collect()
}

/// S(b, t) on the trajectory's time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyField {
    pub times: Vec<f64>,
    /// `values[i][b]` is the entropy of bond b at `times[i]`.
    pub values: Vec<Vec<f64>>,
    pub source_site: usize,
    pub length: usize,
}

impl EntropyField {
    pub fn bonds(&self) -> usize {
        self.length - 1
    }

    pub fn baseline(&self) -> &[f64] {
        &self.values[0]
    }
}

pub fn entropy_field(trajectory: &Trajectory) -> Result<EntropyField> {
    if trajectory.is_empty() {
        return Err(Error::domain("empty trajectory"));
    }
    let values = (0..trajectory.len()).map(|i| bond_entropies(&trajectory.state(i))).collect();
    Ok(EntropyField {
        times: trajectory.times.clone(),
        values,
        source_site: trajectory.protocol.site,
        length: trajectory.length,
    })
}
