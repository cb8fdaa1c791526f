//! Matrix-product operator for the exponential-sum Hamiltonian, plus dense
//! Hamiltonians used as validation oracles.
//!
//! The bulk tensor is lower triangular in the virtual index, with bond
//! dimension D = N + 2 for N exponentials. Index D−1 is the "nothing placed
//! yet" state, index 0 "everything placed", and 1..=N carry one open σˣ each:
//!
//! ```text
//! W[D-1][D-1] = I          W[D-1][0] = g σᶻ
//! W[D-1][α]   = c_α σˣ     W[α][α]   = λ_α I      W[α][0] = σˣ      W[0][0] = I
//! ```
//!
//! with λ_α = e^{−b_α} and c_α = −a_α λ_α, so a σˣ pair at distance d picks
//! up −a_α e^{−b_α d}. The first site keeps only row D−1, the last only column 0.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by std float methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expfit::ExpSumApproximation;
use crate::kernel::CouplingKernel;

/// Largest chain for which a dense 2^L × 2^L operator is built.
pub const DENSE_LIMIT: usize = 14;

/// Single-site operators appearing in the MPO.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalOp {
    Identity,
    SigmaX,
    SigmaZ,
}

impl LocalOp {
    /// 2×2 matrix `[out][in]` in the basis (up, down), σᶻ up = +1.
    pub fn matrix(self) -> [[f64; 2]; 2] {
        match self {
            LocalOp::Identity => [[1.0, 0.0], [0.0, 1.0]],
            LocalOp::SigmaX => [[0.0, 1.0], [1.0, 0.0]],
            LocalOp::SigmaZ => [[1.0, 0.0], [0.0, -1.0]],
        }
    }
}

/// One site tensor `W[left][right][out][in]`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    pub left_dim: usize,
    pub right_dim: usize,
    data: Vec<f64>,
}

impl SiteTensor {
    fn zeros(left_dim: usize, right_dim: usize) -> Self {
        Self { left_dim, right_dim, data: vec![0.0; left_dim * right_dim * 4] }
    }

    #[inline]
    fn offset(&self, l: usize, r: usize, out: usize, inp: usize) -> usize {
        ((l * self.right_dim + r) * 2 + out) * 2 + inp
    }

    #[inline]
    pub fn get(&self, l: usize, r: usize, out: usize, inp: usize) -> f64 {
        self.data[self.offset(l, r, out, inp)]
    }

    fn set_op(&mut self, l: usize, r: usize, scale: f64, op: LocalOp) {
        let m = op.matrix();
        for (out, row) in m.iter().enumerate() {
            for (inp, v) in row.iter().enumerate() {
                let o = self.offset(l, r, out, inp);
                self.data[o] = scale * v;
            }
        }
    }

    /// 2×2 block at virtual indices (l, r).
    pub fn block(&self, l: usize, r: usize) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for (out, row) in m.iter_mut().enumerate() {
            for (inp, v) in row.iter_mut().enumerate() {
                *v = self.get(l, r, out, inp);
            }
        }
        m
    }

    fn slice(&self, rows: core::ops::Range<usize>, cols: core::ops::Range<usize>) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (li, l) in rows.clone().enumerate() {
            for (ri, r) in cols.clone().enumerate() {
                for o in 0..2 {
                    for i in 0..2 {
                        let dst = out.offset(li, ri, o, i);
                        out.data[dst] = self.get(l, r, o, i);
                    }
                }
            }
        }
        out
    }
}

/// Per-channel data of the MPO, in the order of the virtual index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpoChannel {
    pub amplitude: f64,
    pub decay: f64,
    /// λ = e^{−b}, the per-site pass-through weight.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpoTensor {
    pub length: usize,
    pub field: f64,
    pub channels: Vec<MpoChannel>,
    pub sites: Vec<SiteTensor>,
    /// Dimensions of the L − 1 internal links.
    pub bond_dims: Vec<usize>,
}

impl MpoTensor {
    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims.iter().copied().max().unwrap_or(1)
    }
}

/// The translation-invariant bulk tensor for the given channels.
pub fn bulk_tensor(channels: &[MpoChannel], g: f64) -> SiteTensor {
    let d = channels.len() + 2;
    let last = d - 1;
    let mut w = SiteTensor::zeros(d, d);
    w.set_op(0, 0, 1.0, LocalOp::Identity);
    w.set_op(last, last, 1.0, LocalOp::Identity);
    w.set_op(last, 0, g, LocalOp::SigmaZ);
    for (k, ch) in channels.iter().enumerate() {
        let alpha = k + 1;
        w.set_op(last, alpha, -ch.amplitude * ch.weight, LocalOp::SigmaX);
        w.set_op(alpha, alpha, ch.weight, LocalOp::Identity);
        w.set_op(alpha, 0, 1.0, LocalOp::SigmaX);
    }
    w
}

/// MPO for `−Σ_{i<j} Σ_α a_α e^{−b_α (j−i)} σˣ_i σˣ_j + g Σ_j σᶻ_j`.
pub fn build_mpo(approx: &ExpSumApproximation, g: f64, length: usize) -> Result<MpoTensor> {
    if length < 2 {
        return Err(Error::domain("MPO needs L >= 2"));
    }
    if approx.terms.is_empty() || approx.terms.iter().all(|t| t.a == 0.0) {
        return Err(Error::domain("MPO needs at least one nonzero exponential term"));
    }
    if approx.terms.iter().any(|t| !(t.b > 0.0) || !t.a.is_finite()) {
        return Err(Error::domain("exponential terms need finite amplitudes and b > 0"));
    }
    let channels: Vec<MpoChannel> = approx
        .terms
        .iter()
        .map(|t| MpoChannel { amplitude: t.a, decay: t.b, weight: (-t.b).exp() })
        .collect();
    let bulk = bulk_tensor(&channels, g);
    let d = bulk.left_dim;
    let mut sites = Vec::with_capacity(length);
    sites.push(bulk.slice(d - 1..d, 0..d));
    for _ in 1..length - 1 {
        sites.push(bulk.clone());
    }
    sites.push(bulk.slice(0..d, 0..1));
    Ok(MpoTensor { length, field: g, channels, sites, bond_dims: vec![d; length - 1] })
}

/// Dense 2^L × 2^L Hamiltonian. Site 0 is the most significant bit; bit 0 is spin up.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHamiltonian {
    pub length: usize,
    pub matrix: DMatrix<f64>,
}

impl DenseHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_abs_diff(&self, other: &DenseHamiltonian) -> f64 {
        (&self.matrix - &other.matrix).amax()
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn check_dense_size(length: usize) -> Result<()> {
    if length > DENSE_LIMIT {
        return Err(Error::SizeLimit { length, limit: DENSE_LIMIT });
    }
    if length == 0 {
        return Err(Error::domain("chain length must be >= 1"));
    }
    Ok(())
}

/// Contract every virtual bond. Built column by column: each input basis
/// state is pushed through the sites, tracking (virtual index, output prefix).
pub fn contract_mpo_dense(mpo: &MpoTensor) -> Result<DenseHamiltonian> {
    let l = mpo.length;
    check_dense_size(l)?;
    let dim = 1usize << l;
    let mut matrix = DMatrix::zeros(dim, dim);
    // Sparse frontier: (virtual index, output prefix, amplitude).
    let mut frontier: Vec<(usize, usize, f64)> = Vec::new();
    let mut next: Vec<(usize, usize, f64)> = Vec::new();
    for col in 0..dim {
        frontier.clear();
        frontier.push((0, 0, 1.0));
        for (site, w) in mpo.sites.iter().enumerate() {
            let inp = (col >> (l - 1 - site)) & 1;
            next.clear();
            for &(left, prefix, amp) in &frontier {
                for right in 0..w.right_dim {
                    for out in 0..2 {
                        let v = w.get(left, right, out, inp);
                        if v != 0.0 {
                            next.push((right, (prefix << 1) | out, amp * v));
                        }
                    }
                }
            }
            // Merge equal (virtual, prefix) keys so the frontier stays small.
            next.sort_unstable_by_key(|a| (a.0, a.1));
            frontier.clear();
            for &(v, p, a) in &next {
                match frontier.last_mut() {
                    Some(last) if last.0 == v && last.1 == p => last.2 += a,
                    _ => frontier.push((v, p, a)),
                }
            }
        }
        for &(_, row, amp) in &frontier {
            matrix[(row, col)] += amp;
        }
    }
    Ok(DenseHamiltonian { length: l, matrix })
}

/// Dense `−Σ_{i<j} c(j−i) σˣ_i σˣ_j + g Σ σᶻ_j` for an arbitrary coupling function.
pub fn dense_from_couplings(couplings: impl Fn(usize) -> f64, g: f64, length: usize) -> Result<DenseHamiltonian> {
    check_dense_size(length)?;
    let dim = 1usize << length;
    let mut matrix = DMatrix::zeros(dim, dim);
    let mut pairs = Vec::new();
    for i in 0..length {
        for j in i + 1..length {
            let c = couplings(j - i);
            if c != 0.0 {
                let mask = (1usize << (length - 1 - i)) | (1usize << (length - 1 - j));
                pairs.push((mask, c));
            }
        }
    }
    for s in 0..dim {
        let down = s.count_ones() as f64;
        matrix[(s, s)] = g * (length as f64 - 2.0 * down);
        for &(mask, c) in &pairs {
            matrix[(s ^ mask, s)] -= c;
        }
    }
    Ok(DenseHamiltonian { length, matrix })
}

/// Exact Hamiltonian with the tabulated kernel couplings.
pub fn build_dense_hamiltonian(kernel: &CouplingKernel, g: f64, length: usize) -> Result<DenseHamiltonian> {
    check_dense_size(length)?;
    if length > 1 && kernel.max_range < length - 1 {
        return Err(Error::domain("kernel range shorter than the chain"));
    }
    dense_from_couplings(|r| kernel.get(r), g, length)
}

/// Dense Hamiltonian whose couplings are the exponential sum itself.
pub fn build_dense_expsum_hamiltonian(approx: &ExpSumApproximation, g: f64, length: usize) -> Result<DenseHamiltonian> {
    dense_from_couplings(|r| crate::expfit::evaluate_expsum(approx, r), g, length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfit::{ExpTerm, SeedStrategy};
    use crate::kernel::{build_kernel, FractionalOrder};

    fn approx(terms: Vec<ExpTerm>) -> ExpSumApproximation {
        ExpSumApproximation {
            terms,
            fitted_range: 10,
            sup_error: 0.0,
            iterations_used: 0,
            escalation: Vec::new(),
            seed_strategy: SeedStrategy::TailSlope,
        }
    }

    #[test]
    fn single_term_is_tfim_shaped() {
        let a = approx(vec![ExpTerm { a: 1.0, b: 30.0 }]);
        let m = build_mpo(&a, 0.5, 6).unwrap();
        assert_eq!(m.bond_dims, vec![3; 5]);
        assert_eq!((m.sites[0].left_dim, m.sites[0].right_dim), (1, 3));
        assert_eq!((m.sites[5].left_dim, m.sites[5].right_dim), (3, 1));
    }

    #[test]
    fn bond_dimension_is_terms_plus_two() {
        let terms = (0..12).map(|k| ExpTerm { a: 1.0, b: 0.1 * (k + 1) as f64 }).collect();
        let m = build_mpo(&approx(terms), 1.0, 100).unwrap();
        assert!(m.bond_dims.iter().all(|&d| d == 14));
    }

    #[test]
    fn boundaries_are_slices_of_bulk() {
        let a = approx(vec![ExpTerm { a: 0.7, b: 0.4 }, ExpTerm { a: -0.2, b: 1.3 }]);
        let m = build_mpo(&a, 0.3, 5).unwrap();
        let bulk = &m.sites[2];
        let d = bulk.left_dim;
        for r in 0..d {
            assert_eq!(m.sites[0].block(0, r), bulk.block(d - 1, r));
            assert_eq!(m.sites[4].block(r, 0), bulk.block(r, 0));
        }
    }

    #[test]
    fn two_sites_match_hand_matrix() {
        let a = approx(vec![ExpTerm { a: 2.0, b: 2f64.ln() }]);
        let h = contract_mpo_dense(&build_mpo(&a, 0.25, 2).unwrap()).unwrap();
        // −(2·½) σˣσˣ + ¼(σᶻ⊗I + I⊗σᶻ)
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[0.5, 0.0, 0.0, -1.0, 0.0, 0.0, -1.0, 0.0, 0.0, -1.0, 0.0, 0.0, -1.0, 0.0, 0.0, -0.5],
        );
        assert!((h.matrix - expected).amax() < 1e-15);
    }

    #[test]
    fn tfim_three_sites_zero_field() {
        let a = approx(vec![ExpTerm { a: 1.0, b: 40.0 }]);
        let h = contract_mpo_dense(&build_mpo(&a, 0.0, 3).unwrap()).unwrap();
        let scale = (-40.0f64).exp();
        // nearest-neighbour pairs carry −e^{−40}; rescale for the pattern check
        let m = &h.matrix / scale;
        assert!((m[(0b000, 0b110)] + 1.0).abs() < 1e-12);
        assert!((m[(0b000, 0b011)] + 1.0).abs() < 1e-12);
        assert!(m[(0b000, 0b000)].abs() < 1e-12);
    }

    #[test]
    fn field_only_part_is_exact() {
        let a = approx(vec![ExpTerm { a: 1e-300, b: 1.0 }]);
        let h = contract_mpo_dense(&build_mpo(&a, 0.9, 4).unwrap()).unwrap();
        for s in 0..16usize {
            let expect = 0.9 * (4.0 - 2.0 * s.count_ones() as f64);
            assert!((h.matrix[(s, s)] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_zero_amplitudes_and_short_chain() {
        assert!(build_mpo(&approx(vec![ExpTerm { a: 0.0, b: 1.0 }]), 1.0, 4).is_err());
        assert!(build_mpo(&approx(vec![ExpTerm { a: 1.0, b: 1.0 }]), 1.0, 1).is_err());
        let m = build_mpo(&approx(vec![ExpTerm { a: 1.0, b: 1.0 }]), 1.0, 15).unwrap();
        assert!(matches!(contract_mpo_dense(&m), Err(Error::SizeLimit { length: 15, limit: 14 })));
    }

    #[test]
    fn dense_examples() {
        let k = build_kernel(FractionalOrder::new(2.0).unwrap(), 1.0, 4).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14);
        let ev = build_dense_hamiltonian(&k, 0.0, 2).unwrap().eigenvalues();
        assert!(close(&ev, &[-1.0, -1.0, 1.0, 1.0]), "{ev:?}");
        let ev = build_dense_hamiltonian(&k, 1.0, 1).unwrap().eigenvalues();
        assert!(close(&ev, &[-1.0, 1.0]), "{ev:?}");
        let k = build_kernel(FractionalOrder::new(1.5).unwrap(), 1.0, 9).unwrap();
        assert!(build_dense_hamiltonian(&k, 1.0, 8).unwrap().asymmetry() == 0.0);
        assert!(matches!(build_dense_hamiltonian(&k, 1.0, 15), Err(Error::SizeLimit { .. })));
    }
}
