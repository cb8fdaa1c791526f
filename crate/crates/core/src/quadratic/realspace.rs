//! Open-chain BdG matrices and finite-size gaps.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by std float methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernel::{build_kernel, CouplingKernel, FractionalOrder};

/// Boundary condition of the real-space chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Open,
    /// Ring with an antiperiodic fermion twist: every coupling is summed over
    /// its periodic images with sign (−1)^n, so the single-particle energies
    /// are E_k at k = π(2m + 1)/L.
    Antiperiodic,
}

/// Periodic images summed on each side for [`Boundary::Antiperiodic`].
const IMAGES: usize = 2048;

/// `H = Σ A_ij c†_i c_j + ½ Σ (B_ij c†_i c†_j + h.c.)` up to a constant, on
/// a chain of `length` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct BdgRealSpaceModel {
    pub order: FractionalOrder,
    pub j0: f64,
    pub g: f64,
    pub length: usize,
    pub boundary: Boundary,
    /// Symmetric: A_ii = 2g, A_ij = −J0 J(|i−j|).
    pub a: DMatrix<f64>,
    /// Antisymmetric: B_ij = −J0 J(|i−j|) sgn(j − i).
    pub b: DMatrix<f64>,
}

impl BdgRealSpaceModel {
    pub fn new(order: FractionalOrder, j0: f64, g: f64, length: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::domain("real-space model needs L >= 2"));
        }
        let kernel = build_kernel(order, j0, length - 1)?;
        Self::from_kernel(&kernel, g, length)
    }

    pub fn from_kernel(kernel: &CouplingKernel, g: f64, length: usize) -> Result<Self> {
        if length < 2 || kernel.max_range < length - 1 {
            return Err(Error::domain("kernel range must cover the chain"));
        }
        if !g.is_finite() {
            return Err(Error::domain("field must be finite"));
        }
        let a = DMatrix::from_fn(length, length, |i, j| if i == j { 2.0 * g } else { -kernel.get(i.abs_diff(j)) });
        let b = DMatrix::from_fn(length, length, |i, j| {
            if i < j {
                -kernel.get(j - i)
            } else if i > j {
                kernel.get(i - j)
            } else {
                0.0
            }
        });
        Ok(Self { order: kernel.order, j0: kernel.j0, g, length, boundary: Boundary::Open, a, b })
    }

    pub fn with_boundary(order: FractionalOrder, j0: f64, g: f64, length: usize, boundary: Boundary) -> Result<Self> {
        match boundary {
            Boundary::Open => Self::new(order, j0, g, length),
            Boundary::Antiperiodic => Self::antiperiodic(order, j0, g, length),
        }
    }

    fn antiperiodic(order: FractionalOrder, j0: f64, g: f64, length: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::domain("real-space model needs L >= 2"));
        }
        if !g.is_finite() {
            return Err(Error::domain("field must be finite"));
        }
        let l = length as i64;
        let cutoff = (IMAGES * length) as i64;
        let kernel = build_kernel(order, j0, IMAGES * length)?;
        // Alternating image sums of J and J·sgn for the offset r = j − i,
        // over images with |r + nL| ≤ cutoff.
        let image_sums = |r: i64| {
            let (mut even, mut odd) = (0.0, 0.0);
            let lo = (-cutoff - r).div_euclid(l) + 1;
            let hi = (cutoff - r).div_euclid(l);
            for n in lo..=hi {
                let d = r + n * l;
                if d == 0 || d.abs() > cutoff {
                    continue;
                }
                let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let j = sign * kernel.get(d.unsigned_abs() as usize);
                even += j;
                odd += j * d.signum() as f64;
            }
            (even, odd)
        };
        // the cutoff is mirror symmetric, so r < 0 follows exactly from −r
        let mut sums: Vec<(f64, f64)> = (0..l).map(image_sums).collect();
        sums[0].1 = 0.0;
        let at = |i: usize, j: usize| if j >= i { sums[j - i] } else { (sums[i - j].0, -sums[i - j].1) };
        let a = DMatrix::from_fn(length, length, |i, j| (if i == j { 2.0 * g } else { 0.0 }) - at(i, j).0);
        let b = DMatrix::from_fn(length, length, |i, j| -at(i, j).1);
        Ok(Self { order, j0, g, length, boundary: Boundary::Antiperiodic, a, b })
    }

    /// Same couplings, different uniform field.
    pub fn with_field(&self, g: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.length {
            out.a[(i, i)] = 2.0 * g;
        }
        out.g = g;
        out
    }

    /// M = A − B; single-particle energies are its singular values.
    pub fn m(&self) -> DMatrix<f64> {
        &self.a - &self.b
    }

    /// Single-particle excitation energies, ascending.
    pub fn single_particle_energies(&self) -> Vec<f64> {
        sorted_singular_values(self.m())
    }

    /// Ground-state energy of the quadratic Hamiltonian, −½ Σ ε (the
    /// constant from normal ordering included: H = Σ_k ε_k (n_k − ½)).
    pub fn ground_energy(&self) -> f64 {
        -0.5 * self.single_particle_energies().iter().sum::<f64>()
    }

    /// Full 2L × 2L BdG matrix `[[A, B], [−B, −A]]` in (c, c†) ordering.
    pub fn bdg_matrix(&self) -> DMatrix<f64> {
        let l = self.length;
        let mut h = DMatrix::zeros(2 * l, 2 * l);
        h.view_mut((0, 0), (l, l)).copy_from(&self.a);
        h.view_mut((0, l), (l, l)).copy_from(&self.b);
        h.view_mut((l, 0), (l, l)).copy_from(&(-&self.b));
        h.view_mut((l, l), (l, l)).copy_from(&(-&self.a));
        h
    }
}

pub(crate) fn sorted_singular_values(m: DMatrix<f64>) -> Vec<f64> {
    let sv: DVector<f64> = m.singular_values();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Lowest single-particle excitation energy.
pub fn finite_gap(model: &BdgRealSpaceModel) -> Result<f64> {
    if model.length < 4 {
        return Err(Error::domain("finite_gap needs L >= 4"));
    }
    Ok(model.single_particle_energies()[0])
}

/// ε₁ + ε₂: the lowest excitation that keeps fermion parity.
pub fn parity_conserving_gap(model: &BdgRealSpaceModel) -> f64 {
    let e = model.single_particle_energies();
    e[0] + e[1]
}

/// Field minimising ε₁ + ε₂ on `bracket`, by golden-section search to `tol`.
///
/// In the ordered phase ε₁ is the exponentially small edge mode and the
/// physical gap is ε₂; the sum has a single minimum near the transition.
pub fn pseudocritical_field(base: &BdgRealSpaceModel, bracket: (f64, f64), tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::domain("bracket must satisfy lo < hi and tol > 0"));
    }
    let f = |g: f64| parity_conserving_gap(&base.with_field(g));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    let g = 0.5 * (lo + hi);
    let (a, b) = bracket;
    if (g - a).abs() < 10.0 * tol || (b - g).abs() < 10.0 * tol {
        return Err(Error::NoInteriorPeak);
    }
    Ok(g)
}
