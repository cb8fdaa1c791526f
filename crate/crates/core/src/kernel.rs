//! Fractional coupling kernel and its momentum-space sums.
//!
//! J(r) = (-1)^(r+1) binom(q, q/2 + r) is the r-th coefficient of the centred
//! second-order lattice discretisation of the Riesz derivative of order q.
//! Its two-sided Fourier series is |2 sin(k/2)|^q, which gives the cosine sum
//! C_k in closed form. The sine sum S_k has no elementary form and is summed
//! directly with an Euler transform of the tail.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by std float methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest number of directly summed terms in the momentum series.
pub const SERIES_TERM_CAP: usize = 5_000_000;
/// Absolute tolerance the tail estimate of a momentum series must meet.
pub const SERIES_TOLERANCE: f64 = 1e-8;

/// Order q of the Riesz derivative. Always strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::domain("fractional order q must be finite and > 0"));
        }
        Ok(Self(q))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// True when q is an even integer, in which case J(r) vanishes for r > q/2.
    pub fn is_even_integer(self) -> bool {
        let h = self.0 / 2.0;
        h.fract() == 0.0
    }

    /// binom(q, q/2), the r = 0 constant of the two-sided series.
    pub fn central_binomial(self) -> f64 {
        binomial_unchecked(self.0, self.0 / 2.0)
    }
}

fn is_nonpositive_integer(z: f64) -> bool {
    z <= 0.0 && z.fract() == 0.0
}

/// `(ln|Γ(z)|, sign Γ(z))`; `None` at the poles z = 0, -1, -2, ...
fn signed_ln_gamma(z: f64) -> Option<(f64, f64)> {
    if is_nonpositive_integer(z) {
        return None;
    }
    let (ln, sign) = libm::lgamma_r(z);
    Some((ln, if sign < 0 { -1.0 } else { 1.0 }))
}

fn binomial_unchecked(q: f64, x: f64) -> f64 {
    // Exact product for integer arguments keeps C(2,1) = 2 and C(4,2) = 6 bit-exact.
    if q.fract() == 0.0 && x.fract() == 0.0 && q < 64.0 {
        if x < 0.0 || x > q {
            return 0.0;
        }
        let k = x.min(q - x) as u32;
        let mut acc = 1.0;
        for i in 0..k {
            acc = acc * (q - i as f64) / (i as f64 + 1.0);
        }
        return acc.round();
    }
    let Some((ln_num, s_num)) = signed_ln_gamma(q + 1.0) else {
        return f64::NAN;
    };
    // Any pole in the denominator makes the coefficient vanish.
    let Some((ln_a, s_a)) = signed_ln_gamma(x + 1.0) else {
        return 0.0;
    };
    let Some((ln_b, s_b)) = signed_ln_gamma(q - x + 1.0) else {
        return 0.0;
    };
    s_num * s_a * s_b * (ln_num - ln_a - ln_b).exp()
}

/// Generalized binomial coefficient Γ(q+1) / (Γ(x+1) Γ(q-x+1)).
///
/// Evaluated in log space with explicit sign bookkeeping; a pole of either
/// denominator gamma function returns exactly zero.
pub fn generalized_binomial(q: f64, x: f64) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() || !x.is_finite() {
        return Err(Error::domain("generalized binomial needs finite q > 0 and finite x"));
    }
    Ok(binomial_unchecked(q, x))
}

/// J0 · J(r) for r ≥ 1, by direct gamma-function evaluation.
pub fn coupling(order: FractionalOrder, j0: f64, r: usize) -> Result<f64> {
    if r < 1 {
        return Err(Error::domain("coupling distance must be >= 1"));
    }
    let q = order.value();
    if !order.is_even_integer() && r as f64 - q / 2.0 >= STIRLING_MIN {
        return Ok(j0 * large_r_coupling(q, r as f64));
    }
    let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
    Ok(j0 * sign * binomial_unchecked(q, q / 2.0 + r as f64))
}

/// Below this r − q/2 the plain log-gamma path is already accurate.
const STIRLING_MIN: f64 = 16.0;

/// Reflection turns J(r) into Γ(q+1) sin(πq/2)/π · Γ(r − q/2)/Γ(r + q/2 + 1).
/// The gamma ratio comes from a Stirling difference written with ln_1p, so
/// no large log-gamma values cancel.
fn large_r_coupling(q: f64, r: f64) -> f64 {
    let z1 = r - q / 2.0;
    let z2 = r + q / 2.0 + 1.0;
    // z1 − z2 exactly; differencing the rounded z's costs ~1e-13
    let d = -(q + 1.0);
    let ln_ratio = (z1 - 0.5) * (d / z2).ln_1p() + d * z2.ln() - d + stirling_tail(z1) - stirling_tail(z2);
    libm::tgamma(q + 1.0) * (core::f64::consts::FRAC_PI_2 * q).sin() / core::f64::consts::PI * ln_ratio.exp()
}

/// ln Γ(z) − [(z − ½) ln z − z + ½ ln 2π] for z ≥ 16.
fn stirling_tail(z: f64) -> f64 {
    const B: [f64; 6] = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360_360.0];
    let w = 1.0 / (z * z);
    let mut acc = 0.0;
    for c in B.iter().rev() {
        acc = acc * w + c;
    }
    acc / z
}

/// Ratio J(r+1) / J(r) for r ≥ 1.
#[inline]
fn step_ratio(q: f64, r: usize) -> f64 {
    let r = r as f64;
    (r - q / 2.0) / (r + q / 2.0 + 1.0)
}

/// Tabulated couplings `values[r] = J0·J(r)` for `r = 0..=max_range`.
///
/// `values[0]` holds the constant `J0·binom(q, q/2)` used by the momentum
/// sums; it never multiplies a spin pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingKernel {
    pub order: FractionalOrder,
    pub j0: f64,
    pub max_range: usize,
    pub values: Vec<f64>,
}

/// Tabulate the kernel by the ratio recurrence seeded from `J0·binom(q, q/2)`.
pub fn build_kernel(order: FractionalOrder, j0: f64, max_range: usize) -> Result<CouplingKernel> {
    if max_range < 1 {
        return Err(Error::domain("max_range must be >= 1"));
    }
    if !j0.is_finite() {
        return Err(Error::domain("J0 must be finite"));
    }
    let q = order.value();
    let mut values = Vec::with_capacity(max_range + 1);
    values.push(j0 * order.central_binomial());
    // binom(q, q/2 + 1) / binom(q, q/2) = (q/2) / (q/2 + 1)
    values.push(values[0] * (q / 2.0) / (q / 2.0 + 1.0));
    for r in 1..max_range {
        let next = values[r] * step_ratio(q, r);
        values.push(next);
    }
    Ok(CouplingKernel { order, j0, max_range, values })
}

impl CouplingKernel {
    /// J0·J(r); zero beyond the tabulated range.
    #[inline]
    pub fn get(&self, r: usize) -> f64 {
        self.values.get(r).copied().unwrap_or(0.0)
    }

    /// Couplings r = 1..=max_range.
    pub fn tail(&self) -> &[f64] {
        &self.values[1..]
    }

    /// Direct log-gamma value at r, independent of the recurrence.
    pub fn direct(&self, r: usize) -> Result<f64> {
        if r == 0 {
            return Ok(self.j0 * self.order.central_binomial());
        }
        coupling(self.order, self.j0, r)
    }

    /// Running ratio J(r)/J(r-1) for r ≥ 1 (NaN where J(r-1) = 0).
    pub fn running_ratio(&self, r: usize) -> f64 {
        if r == 0 || r > self.max_range {
            return f64::NAN;
        }
        let prev = self.values[r - 1];
        if prev == 0.0 {
            f64::NAN
        } else {
            self.values[r] / prev
        }
    }

    /// Sum over the tabulated tail of |J0·J(r)|.
    pub fn absolute_tail_sum(&self) -> f64 {
        self.tail().iter().map(|v| v.abs()).sum()
    }

    /// Kac normalisation: rescale J0 so that Σ_{r=1}^{max_range} |J0·J(r)| = 1.
    pub fn kac_normalized(&self) -> Result<Self> {
        let s = self.absolute_tail_sum();
        if s == 0.0 {
            return Err(Error::DegenerateKernel);
        }
        let mut out = self.clone();
        out.j0 = self.j0 / s;
        out.values.iter_mut().for_each(|v| *v /= s);
        Ok(out)
    }

    /// True when every tabulated coupling beyond r = 1 is exactly zero.
    pub fn is_nearest_neighbor(&self) -> bool {
        self.values.iter().skip(2).all(|&v| v == 0.0)
    }
}

/// Closed-form cosine sum `C_k = J0 Σ_{r>0} J(r) cos(kr) = ½(J0 binom(q,q/2) - J0 |2 sin(k/2)|^q)`.
pub fn cosine_sum_closed_form(order: FractionalOrder, j0: f64, k: f64) -> f64 {
    let q = order.value();
    0.5 * j0 * (order.central_binomial() - lattice_symbol(q, k))
}

/// |2 sin(k/2)|^q, the lattice Fourier symbol of the discretised derivative.
#[inline]
pub fn lattice_symbol(q: f64, k: f64) -> f64 {
    (2.0 * (0.5 * k).sin()).abs().powf(q)
}

/// `|2 sin(k/2)|^q - |k|^q`: lattice symbol minus the continuum Riesz symbol.
pub fn riesz_multiplier_check(order: FractionalOrder, k: f64) -> f64 {
    let q = order.value();
    lattice_symbol(q, k) - k.abs().powf(q)
}

/// Sum `Σ_{n≥0} c_n z^n` for coefficients produced by `next`, with |z| = 1.
///
/// The first `direct` coefficients are added term by term. The remaining
/// tail is replaced by its Euler transform
/// `z^M Σ_j (Δ^j c)(M) z^j / (1 - z)^(j+1)`, which converges geometrically
/// when the coefficients are smooth and single-signed over the tail.
fn euler_accelerated_series(
    mut next: impl FnMut() -> f64,
    z: Complex64,
    direct: usize,
) -> Result<Complex64> {
    const MAX_DIFF: usize = 40;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut zn = Complex64::new(1.0, 0.0);
    for n in 0..direct {
        let c = next();
        sum += zn * c;
        zn *= z;
        // Renormalise the phase to keep |z^n| = 1 over long runs.
        if n % 4096 == 4095 {
            zn /= zn.norm();
        }
    }
    let mut diffs: Vec<f64> = (0..=MAX_DIFF).map(|_| next()).collect();
    let one_minus_z = Complex64::new(1.0, 0.0) - z;
    let ratio = z / one_minus_z;
    let mut factor = zn / one_minus_z;
    let mut best = f64::INFINITY;
    let mut prev = f64::INFINITY;
    for j in 0..=MAX_DIFF {
        let term = factor * diffs[0];
        let size = term.norm();
        if size > prev && j > 2 {
            // Asymptotic series started to diverge; stop at the smallest term.
            break;
        }
        sum += term;
        best = size;
        prev = size;
        if size < 1e-17 * sum.norm().max(1e-300) || size == 0.0 {
            best = size;
            break;
        }
        for i in 0..diffs.len() - 1 {
            diffs[i] = diffs[i + 1] - diffs[i];
        }
        diffs.pop();
        if diffs.is_empty() {
            break;
        }
        factor *= ratio;
    }
    if best > SERIES_TOLERANCE {
        return Err(Error::ConvergenceFailure { terms: direct, tail: best });
    }
    Ok(sum)
}

/// Number of directly summed terms needed before the Euler tail is reliable at momentum k.
fn direct_terms_for(q: f64, k: f64) -> usize {
    let beyond_sign_change = (q / 2.0).ceil() as usize + 2;
    let wanted = (48.0 / k.abs().max(1e-300)).ceil();
    let wanted = if wanted > SERIES_TERM_CAP as f64 { SERIES_TERM_CAP } else { wanted as usize };
    wanted.max(64).max(beyond_sign_change)
}

/// Wrap k into (-π, π].
fn wrap_momentum(k: f64) -> f64 {
    let mut k = k % (2.0 * PI);
    if k > PI {
        k -= 2.0 * PI;
    } else if k <= -PI {
        k += 2.0 * PI;
    }
    k
}

/// `Σ_{r≥1} J(r) e^{ikr}` (no J0 factor).
fn kernel_fourier_tail(order: FractionalOrder, k: f64) -> Result<Complex64> {
    let q = order.value();
    let z = Complex64::from_polar(1.0, k);
    if order.is_even_integer() {
        // Finite support: r = 1..=q/2.
        let mut sum = Complex64::new(0.0, 0.0);
        for r in 1..=(q / 2.0) as usize {
            sum += z.powu(r as u32) * coupling(order, 1.0, r)?;
        }
        return Ok(sum);
    }
    let mut r = 0usize;
    let mut current = coupling(order, 1.0, 1)?;
    let next = move || {
        r += 1;
        let out = current;
        current *= step_ratio(q, r);
        out
    };
    // Series in z^n with c_n = J(n+1); multiply by z for the shift.
    let direct = direct_terms_for(q, k);
    Ok(z * euler_accelerated_series(next, z, direct)?)
}

/// `S_k = J0 Σ_{r>0} J(r) sin(kr)` by direct summation with an Euler-transformed tail.
pub fn sine_sum(order: FractionalOrder, j0: f64, k: f64) -> Result<f64> {
    let k = wrap_momentum(k);
    if k == 0.0 || k == PI {
        return Ok(0.0);
    }
    Ok(j0 * kernel_fourier_tail(order, k)?.im)
}

/// Direct (non closed-form) evaluation of the cosine sum, same machinery as [`sine_sum`].
pub fn cosine_sum_direct(order: FractionalOrder, j0: f64, k: f64) -> Result<f64> {
    let k = wrap_momentum(k);
    if k == 0.0 {
        return Ok(0.5 * j0 * order.central_binomial());
    }
    Ok(j0 * kernel_fourier_tail(order, k)?.re)
}

/// `F(q, k) = Γ(q+1)/Γ(q/2+1)^2 · ₂F₁(1, -q/2; (q+2)/2; e^{ik})`.
///
/// Summed from the hypergeometric term ratio `(n - q/2)/(n + q/2 + 1)` with
/// the same Euler tail as the kernel sums. `Re F = binom(q,q/2) - C_k/J0`
/// and `Im F = -S_k/J0`.
pub fn hypergeometric_f(order: FractionalOrder, k: f64) -> Result<Complex64> {
    let q = order.value();
    let k = wrap_momentum(k);
    let z = Complex64::from_polar(1.0, k);
    let a = -q / 2.0;
    let c = (q + 2.0) / 2.0;
    let prefactor = (libm::lgamma(q + 1.0) - 2.0 * libm::lgamma(q / 2.0 + 1.0)).exp();
    if k == 0.0 {
        // Gauss: ₂F₁(1, a; c; 1) = Γ(c)Γ(c-1-a) / (Γ(c-1)Γ(c-a)) = (c-1)/(c-1-a).
        return Ok(Complex64::new(prefactor * (c - 1.0) / (c - 1.0 - a), 0.0));
    }
    let mut n = 0usize;
    let mut term = prefactor;
    let next = move || {
        let out = term;
        // (1)_n (a)_n / ((c)_n n!) recurrence: t_{n+1}/t_n = (n + a)/(n + c).
        term *= (n as f64 + a) / (n as f64 + c);
        n += 1;
        out
    };
    euler_accelerated_series(next, z, direct_terms_for(q, k))
}

/// C_k, S_k and the Bogoliubov energy E_k at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumSums {
    pub k: f64,
    pub c_k: f64,
    pub s_k: f64,
    pub e_k: f64,
}

impl MomentumSums {
    pub fn new(order: FractionalOrder, j0: f64, g: f64, k: f64) -> Result<Self> {
        let c_k = cosine_sum_closed_form(order, j0, k);
        let s_k = sine_sum(order, j0, k)?;
        let xi = 2.0 * g - 2.0 * c_k;
        let delta = 2.0 * s_k;
        Ok(Self { k, c_k, s_k, e_k: xi.hypot(delta) })
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // oracle digits kept verbatim
mod tests {
    use super::*;

    fn q(v: f64) -> FractionalOrder {
        FractionalOrder::new(v).unwrap()
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(generalized_binomial(2.0, 1.0).unwrap(), 2.0);
        assert_eq!(generalized_binomial(2.0, 3.0).unwrap(), 0.0);
        let v = generalized_binomial(1.0, 1.5).unwrap();
        assert!((v - 0.424_413_181_578_387_56).abs() < 1e-15);
        // gamma pole in Γ(q - x + 1) at non-integer q
        assert_eq!(generalized_binomial(1.5, 3.5).unwrap(), 0.0);
        assert!(generalized_binomial(0.0, 1.0).is_err());
        assert!(generalized_binomial(-1.0, 1.0).is_err());
    }

    #[test]
    fn rejects_bad_order() {
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(-0.5).is_err());
        assert!(FractionalOrder::new(f64::NAN).is_err());
    }

    #[test]
    fn coupling_examples() {
        assert_eq!(coupling(q(2.0), 1.0, 1).unwrap(), 1.0);
        assert_eq!(coupling(q(2.0), 1.0, 2).unwrap(), 0.0);
        let v = coupling(q(1.0), 1.0, 1).unwrap();
        assert!((v - 0.424_413_181_578_387_56).abs() < 1e-15);
        assert!(coupling(q(1.0), 1.0, 0).is_err());
    }

    #[test]
    fn kernel_examples() {
        let k = build_kernel(q(2.0), 1.0, 5).unwrap();
        assert_eq!(k.values, [2.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(k.is_nearest_neighbor());

        let k = build_kernel(q(4.0), 1.0, 4).unwrap();
        assert_eq!(k.values[0], 6.0);
        assert_eq!(k.values[1], 4.0);
        assert_eq!(k.values[2], -1.0);
        assert_eq!(k.values[3], 0.0);
        assert_eq!(k.values[4], 0.0);

        let k = build_kernel(q(1.5), 1.0, 1000).unwrap();
        let ratio = k.values[1000] / k.values[500];
        let expected = 2f64.powf(-2.5);
        assert!((ratio / expected - 1.0).abs() < 0.02, "{ratio} vs {expected}");
    }

    #[test]
    fn sign_structure_between_two_and_four() {
        for &qq in &[2.2, 2.5, 3.0, 3.7] {
            let k = build_kernel(q(qq), 1.0, 200).unwrap();
            assert!(k.values[1] > 0.0);
            assert!(k.tail()[1..].iter().all(|&v| v < 0.0), "q={qq}");
        }
    }

    #[test]
    fn kac_normalisation_sums_to_one() {
        let k = build_kernel(q(1.5), 1.0, 300).unwrap().kac_normalized().unwrap();
        assert!((k.absolute_tail_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_closed_form_examples() {
        assert_eq!(cosine_sum_closed_form(q(2.0), 1.0, PI), -1.0);
        for &qq in &[0.5, 1.0, 2.5] {
            let c0 = cosine_sum_closed_form(q(qq), 1.3, 0.0);
            assert!((c0 - 0.5 * 1.3 * q(qq).central_binomial()).abs() < 1e-15);
        }
    }

    #[test]
    fn sine_sum_examples() {
        assert_eq!(sine_sum(q(1.5), 1.0, 0.0).unwrap(), 0.0);
        let s = sine_sum(q(2.0), 1.0, PI / 2.0).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        // Frozen from an arbitrary-precision hypergeometric evaluation.
        let s = sine_sum(q(1.5), 1.0, 1.0).unwrap();
        assert!((s - 0.615_294_252_331_406_996_56).abs() < 1e-10, "{s}");
    }

    #[test]
    fn hypergeometric_examples() {
        let f = hypergeometric_f(q(2.0), PI).unwrap();
        assert!((f.re - 3.0).abs() < 1e-14 && f.im.abs() < 1e-14);
        let f = hypergeometric_f(q(1.0), PI / 3.0).unwrap();
        assert!((f.re - 1.136_619_772_367_581_343_1).abs() < 1e-10);
        assert!((f.im + 0.419_200_718_278_982_733_36).abs() < 1e-10);
        let f0 = hypergeometric_f(q(1.5), 0.0).unwrap();
        assert!((f0.norm() - 0.5 * q(1.5).central_binomial()).abs() < 1e-14);
        let f = hypergeometric_f(q(1.5), 1e-4).unwrap();
        assert!((f.norm() - 0.5 * q(1.5).central_binomial()).abs() < 1e-3);
    }

    #[test]
    fn riesz_examples() {
        assert_eq!(riesz_multiplier_check(q(2.0), 0.0), 0.0);
        assert!((riesz_multiplier_check(q(2.0), PI) - (4.0 - PI * PI)).abs() < 1e-12);
        assert!(riesz_multiplier_check(q(1.0), 0.01).abs() < 1e-7);
    }

    #[test]
    fn momentum_sums_energy_nonnegative() {
        let m = MomentumSums::new(q(1.5), 1.0, 0.5, 0.7).unwrap();
        assert!(m.e_k >= 0.0);
    }
}
