//! Downstream computations built on the lattice Gaussian sums: Gaussian Gabor
//! frame bounds, heat kernels on flat tori, completely monotone and Riesz
//! lattice energies, Born charge energies and the Landau-constant identities.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dual_lattice, in_d_plus, lattice_from_tau, Lattice, PhasePoint, ScaledLattice};
use crate::optimize::{minimize_over_cell_with, minimize_torus_function};
use crate::special::gamma;
use crate::sum::Neumaier;
use crate::theta::{
    lattice_gaussian_sum, theta_charged_direct, theta_shifted, theta_shifted_direct, theta_shifted_split, CertifiedValue,
    Form, TruncationPolicy,
};
use num_complex::Complex64;

const GRID_N: usize = 16;

fn scaled(v: CertifiedValue, c: f64) -> CertifiedValue {
    CertifiedValue {
        value: v.value * c,
        tail_bound: v.tail_bound * c.abs(),
        terms_used: v.terms_used,
    }
}

fn coords(l: &Lattice, z: &PhasePoint) -> PhasePoint {
    let (u, v) = l.to_lattice_coords(z);
    PhasePoint::lattice(u, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower_a: f64,
    pub upper_b: f64,
    pub ratio: f64,
    /// `vol(Lambda)^{-1}`.
    pub density: u32,
    /// Minimizing phase, in lattice coordinates of the shape.
    pub argmin_z: PhasePoint,
}

/// Frame bounds of the Gaussian Gabor system over the lattice of shape `shape`
/// and density `2n`.
///
/// The adjoint lattice is `sqrt(2n)` times the shape, so
/// `A = 2n min_b theta_hat(b; n)` and `B = 2n theta_hat(0; n)`; the minimum is
/// taken through `theta_hat(b; n) = theta(b; 1/n) / n`.
pub fn gabor_frame_bounds(shape: &Lattice, density: u32, pol: &TruncationPolicy) -> Result<FrameBounds> {
    if density == 0 || density % 2 != 0 {
        return Err(Error::UnsupportedDensity(density));
    }
    let n = f64::from(density / 2);
    let m = minimize_over_cell_with(shape, 1.0 / n, GRID_N, pol)?;
    let lower_a = 2.0 * m.value.value;
    let upper_b = 2.0 * n * theta_charged_direct(shape, &PhasePoint::lattice(0.0, 0.0), n, pol)?.value;
    Ok(FrameBounds {
        lower_a,
        upper_b,
        ratio: upper_b / lower_a,
        density,
        argmin_z: m.argmin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub x: f64,
    pub y: f64,
    pub lower_a: f64,
    pub upper_b: f64,
    pub ratio: f64,
}

/// `B/A` over the `(x, y)` grid points in `D_+`, ordered by x then y.
pub fn strohmer_beaver_sweep(density: u32, xs: &[f64], ys: &[f64]) -> Result<Vec<FrameRecord>> {
    if density == 0 || density % 2 != 0 {
        return Err(Error::UnsupportedDensity(density));
    }
    let mut cells = Vec::new();
    for &x in xs {
        for &y in ys {
            if in_d_plus(Complex64::new(x, y), 1e-12) {
                cells.push((x, y));
            }
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let pol = TruncationPolicy::default();
    cells
        .par_iter()
        .map(|&(x, y)| {
            let f = gabor_frame_bounds(&lattice_from_tau(x, y)?, density, &pol)?;
            Ok(FrameRecord {
                x,
                y,
                lower_a: f.lower_a,
                upper_b: f.upper_b,
                ratio: f.ratio,
            })
        })
        .collect()
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveT(t));
    }
    Ok(())
}

/// `k_L(z; t) = (1/(4 pi t)) E_L(z; 1/(4 pi t))`.
pub fn heat_kernel_torus(l: &Lattice, z: &PhasePoint, t: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    check_t(t)?;
    let c = 1.0 / (4.0 * PI * t);
    let inner = TruncationPolicy {
        target_tol: pol.target_tol / c,
        ..*pol
    };
    Ok(scaled(lattice_gaussian_sum(l, z, c, &inner)?, c))
}

/// The heat kernel summed in space (images) and, independently, over the dual
/// lattice `sum_mu exp(-4 pi^2 t |mu|^2) cos(2 pi mu . z)`.
pub fn heat_kernel_torus_routes(
    l: &Lattice,
    z: &PhasePoint,
    t: f64,
    pol: &TruncationPolicy,
) -> Result<(CertifiedValue, CertifiedValue)> {
    check_t(t)?;
    let c = 1.0 / (4.0 * PI * t);
    let inner = TruncationPolicy {
        target_tol: pol.target_tol / c,
        ..*pol
    };
    let zc = coords(l, z);
    let images = scaled(theta_shifted_direct(l, &zc, c, &inner)?, c);
    // mu = M^{-T} m gives mu . z = m . (u, v); the charge c gives cos(2 pi (k c2 - l c1))
    let spectral = theta_charged_direct(&dual_lattice(l), &PhasePoint::lattice(-zc.v, zc.u), 4.0 * PI * t, pol)?;
    Ok((images, spectral))
}

/// `(A_t, B_t) = (min_z k(z; t), k(0; t))`.
pub fn temperature_extremes(l: &Lattice, t: f64) -> Result<(f64, f64)> {
    check_t(t)?;
    let c = 1.0 / (4.0 * PI * t);
    let pol = TruncationPolicy::default();
    let m = minimize_over_cell_with(l, c, GRID_N, &pol)?;
    let top = theta_shifted(l, &PhasePoint::lattice(0.0, 0.0), c, &pol)?;
    Ok((c * m.value.value, c * top.value))
}

/// `p(r^2) = sum_j w_j exp(-pi alpha_j r^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMPotential {
    pub quadrature_nodes: Vec<(f64, f64)>,
    pub label: String,
    /// Added once to every lattice energy, not per point: the part of the
    /// mixture's integral that a covolume-1 lattice sum turns into a constant.
    /// Zero for a pure mixture.
    pub lattice_offset: f64,
}

impl CMPotential {
    pub fn gaussian(alpha: f64) -> Self {
        Self {
            quadrature_nodes: vec![(alpha, 1.0)],
            label: format!("gaussian({alpha})"),
            lattice_offset: 0.0,
        }
    }

    pub fn mixture(nodes: Vec<(f64, f64)>, label: &str) -> Self {
        Self {
            quadrature_nodes: nodes,
            label: label.to_string(),
            lattice_offset: 0.0,
        }
    }

    fn check(&self) -> Result<()> {
        if self.quadrature_nodes.is_empty() {
            return Err(Error::EmptyQuadrature);
        }
        for &(a, w) in &self.quadrature_nodes {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::NonPositiveAlpha(a));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!("negative or non-finite weight {w}")));
            }
        }
        Ok(())
    }

    /// `p(r2)` at a squared distance.
    pub fn eval(&self, r2: f64) -> f64 {
        self.quadrature_nodes
            .iter()
            .map(|&(a, w)| w * (-PI * a * r2).exp())
            .sum::<f64>()
    }
}

/// `sum_lambda p(|lambda + z|^2)`.
pub fn cm_lattice_energy(p: &CMPotential, l: &Lattice, z: &PhasePoint, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    p.check()?;
    let zc = coords(l, z);
    let total_w: f64 = p.quadrature_nodes.iter().map(|n| n.1).sum();
    let inner = TruncationPolicy {
        target_tol: pol.target_tol / total_w.max(1.0),
        ..*pol
    };
    let mut acc = Neumaier::new();
    acc.add(p.lattice_offset);
    let mut tail = 0.0;
    let mut terms = 0;
    for &(a, w) in &p.quadrature_nodes {
        let v = theta_shifted(l, &zc, a, &inner)?;
        acc.add(w * v.value);
        tail += w * v.tail_bound;
        terms += v.terms_used;
    }
    Ok(CertifiedValue {
        value: acc.value(),
        tail_bound: tail,
        terms_used: terms,
    })
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("s = {s} must exceed 1")));
    }
    Ok(())
}

fn riesz_prefactor(s: f64) -> f64 {
    PI.powf(s) / gamma(s)
}

const RIESZ_STEP: f64 = 0.2;

fn riesz_range(s: f64, alpha_max: f64) -> (f64, f64) {
    // integrand behaves like alpha^s near 0
    (-38.0 / s, alpha_max.ln())
}

/// Quadrature of `r^{-2s} = (pi^s/Gamma(s)) int_0^inf alpha^{s-1} exp(-pi alpha r^2) d alpha`
/// as a Gaussian mixture, trapezoidal in `log alpha` after removing
/// `exp(-alpha)/alpha` (integrated in closed form into `lattice_offset`).
///
/// Accurate for `r >= d_min`; closer points are underweighted.
pub fn riesz_potential(s: f64, d_min: f64) -> Result<CMPotential> {
    check_s(s)?;
    if !(d_min > 0.0) {
        return Err(Error::InvalidArgument(format!("d_min = {d_min} must be positive")));
    }
    let c = riesz_prefactor(s);
    let (lo, hi) = riesz_range(s, 40.0 / (PI * d_min * d_min));
    let mut nodes = Vec::new();
    let mut sub = Neumaier::new();
    let mut u = lo;
    while u <= hi {
        let a = u.exp();
        nodes.push((a, c * RIESZ_STEP * a.powf(s)));
        sub.add(RIESZ_STEP * a.powf(s - 1.0) * (-a).exp());
        u += RIESZ_STEP;
    }
    Ok(CMPotential {
        quadrature_nodes: nodes,
        label: format!("riesz(s={s})"),
        lattice_offset: c * (gamma(s - 1.0) - sub.value()),
    })
}

fn pole_check(l: &Lattice, z: &PhasePoint) -> Result<PhasePoint> {
    let zc = coords(l, z);
    let (du, dv) = (zc.u - zc.u.round(), zc.v - zc.v.round());
    let p = l.point(du, dv);
    if p[0].hypot(p[1]) < 1e-12 {
        return Err(Error::PoleAtLatticePoint);
    }
    Ok(zc)
}

/// `sum_lambda |lambda + z|^{-2s}` by the Gaussian-mixture route with
/// step-halving: the reported bound is the change between steps `0.2` and `0.1`
/// plus the truncation of both ends (an estimate, not a certificate).
pub fn epstein_zeta_quadrature(l: &Lattice, z: &PhasePoint, s: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    check_s(s)?;
    let zc = pole_check(l, z)?;
    let c = riesz_prefactor(s);
    let inner = TruncationPolicy::with_tol(1e-15);
    let g = |u: f64| -> Result<f64> {
        let a = u.exp();
        let sv = theta_shifted_split(l, &zc, a, &inner)?;
        let rest = if sv.constant != 0.0 {
            -(-a).exp_m1() / a + sv.varying.value
        } else {
            sv.varying.value - (-a).exp() / a
        };
        Ok(a.powf(s) * rest)
    };
    let h = 0.5 * RIESZ_STEP;
    let (lo, _) = riesz_range(s, 1.0);
    let mut fine = Neumaier::new();
    let mut coarse = Neumaier::new();
    let mut j = 0usize;
    let mut last = f64::INFINITY;
    loop {
        let u = lo + j as f64 * h;
        let v = g(u)?;
        fine.add(v);
        if j % 2 == 0 {
            coarse.add(v);
        }
        // the upper end decays doubly exponentially once past the peak
        if u > 1.0 && v.abs() < 1e-18 && v.abs() <= last {
            break;
        }
        last = v.abs();
        j += 1;
        if j > 100_000 {
            return Err(Error::NoConvergence(j));
        }
    }
    let head = gamma(s - 1.0);
    let vf = c * (head + h * fine.value());
    let vc = c * (head + 2.0 * h * coarse.value());
    let bound = (vf - vc).abs() + c * h * 2e-18;
    if bound > pol.target_tol.max(1e-14 * vf.abs()) {
        return Err(Error::TailNotMet {
            value: vf,
            tail_bound: bound,
            terms_used: j + 1,
        });
    }
    Ok(CertifiedValue {
        value: vf,
        tail_bound: bound,
        terms_used: j + 1,
    })
}

/// `sum_lambda |lambda + z|^{-2s}` summed directly over a ball of radius `R`,
/// plus `pi R^{2-2s} / ((s-1) vol)` for the outside. The bound covers the
/// difference between that integral and the true remainder, using
/// `|#{|p| <= r} - pi r^2 / vol| <= pi (2 d r + d^2) / vol`.
pub fn epstein_zeta_shifted(l: &Lattice, z: &PhasePoint, s: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    epstein_zeta_scaled(&ScaledLattice { shape: *l, scale: 1.0 }, z, s, pol)
}

/// `q^{-s}`, through `powi` and one square root when `2s` is an integer.
#[inline]
fn inv_pow(q: f64, s: f64, half_int: bool) -> f64 {
    if half_int {
        let k = (2.0 * s) as i32;
        let p = q.powi(-(k / 2));
        if k % 2 == 1 {
            p / q.sqrt()
        } else {
            p
        }
    } else {
        q.powf(-s)
    }
}

fn epstein_discrepancy(r: f64, s: f64, d: f64, vol: f64) -> f64 {
    let f = r.powf(-2.0 * s);
    (PI * f * (2.0 * d * r + d * d)
        + 2.0 * PI * s * (2.0 * d * r.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0) + d * d * f / (2.0 * s)))
        / vol
}

/// As [`epstein_zeta_shifted`] on `scale * shape`; `z` is in lattice coordinates
/// (or Cartesian coordinates of the scaled lattice).
pub fn epstein_zeta_scaled(sl: &ScaledLattice, z: &PhasePoint, s: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    check_s(s)?;
    let shape = &sl.shape;
    let c = sl.scale;
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("scale = {c} must be positive")));
    }
    let zl = match z.frame {
        crate::lattice::Frame::LatticeCoords => *z,
        crate::lattice::Frame::Cartesian => PhasePoint::cartesian(z.u / c, z.v / c),
    };
    let zc = pole_check(shape, &zl)?;
    let f0 = Form::of(shape);
    let form = Form {
        g11: c * c * f0.g11,
        g12: c * c * f0.g12,
        g22: c * c * f0.g22,
        d: c * f0.d,
    };
    let vol = c * c;
    let mut r = form.d.max(1.0);
    while epstein_discrepancy(r, s, form.d, vol) > pol.target_tol {
        r *= 1.1;
    }
    // rows |m| <= r sqrt(g11 / det) meet the ball
    let row_scale = (form.g11 / (vol * vol)).sqrt();
    if r * row_scale > pol.max_radius as f64 {
        let r_cap = pol.max_radius as f64 / row_scale;
        return Err(Error::TailNotMet {
            value: f64::NAN,
            tail_bound: epstein_discrepancy(r_cap, s, form.d, vol),
            terms_used: 0,
        });
    }
    let shift = [zc.u - zc.u.round(), zc.v - zc.v.round()];
    let half_int = (2.0 * s).fract() == 0.0 && s < 64.0;
    let r2 = r * r;
    let m_max = r * row_scale;
    let l_lo = (-shift[1] - m_max).ceil() as i64;
    let l_hi = (-shift[1] + m_max).floor() as i64;
    let rows: Vec<(f64, usize)> = (l_lo..=l_hi)
        .into_par_iter()
        .map(|li| {
            let m = li as f64 + shift[1];
            let rem = r2 - m * m / (row_scale * row_scale);
            let mut acc = Neumaier::new();
            let mut n = 0;
            if rem >= 0.0 {
                let half = (rem / form.g11).sqrt();
                let cc = -form.g12 * m / form.g11 - shift[0];
                for k in ((cc - half).ceil() as i64)..=((cc + half).floor() as i64) {
                    let q = form.q(k as f64 + shift[0], m);
                    if q <= r2 {
                        acc.add(inv_pow(q, s, half_int));
                        n += 1;
                    }
                }
            }
            (acc.value(), n)
        })
        .collect();
    let mut acc = Neumaier::new();
    let mut n = 0;
    for (v, k) in rows {
        acc.add(v);
        n += k;
    }
    acc.add(PI * r.powf(2.0 - 2.0 * s) / ((s - 1.0) * vol));
    Ok(CertifiedValue {
        value: acc.value(),
        tail_bound: epstein_discrepancy(r, s, form.d, vol),
        terms_used: n,
    })
}

/// `min_z sum_lambda |lambda + z|^{-2s}` through [`riesz_potential`].
pub fn epstein_min_over_cell(l: &Lattice, s: f64, grid_n: usize) -> Result<(PhasePoint, f64)> {
    let p = riesz_potential(s, 0.05)?;
    let pol = TruncationPolicy::default();
    let f = |u, v| Ok(cm_lattice_energy(&p, l, &PhasePoint::lattice(u, v), &pol)?.value);
    let (u, v, val, _) = minimize_torus_function(f, grid_n)?;
    Ok((PhasePoint::lattice(u, v), val))
}

/// Periodic charges `eps[(m1 mod N) * N + (m2 mod N)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeDistribution {
    pub period_n: usize,
    pub weights: Vec<f64>,
}

impl ChargeDistribution {
    pub fn new(period_n: usize, weights: Vec<f64>) -> Result<Self> {
        let d = Self { period_n, weights };
        d.validate()?;
        Ok(d)
    }

    pub fn weight(&self, m1: i64, m2: i64) -> f64 {
        let n = self.period_n as i64;
        self.weights[(m1.rem_euclid(n) * n + m2.rem_euclid(n)) as usize]
    }

    /// Neutrality and `sum eps^2 = N^2`, both to `1e-12 N^2`.
    pub fn validate(&self) -> Result<()> {
        let n = self.period_n;
        if n == 0 || self.weights.len() != n * n {
            return Err(Error::ConstraintViolated(format!(
                "expected {} weights for period {n}, got {}",
                n * n,
                self.weights.len()
            )));
        }
        let n2 = (n * n) as f64;
        let sum: f64 = self.weights.iter().sum();
        let sq: f64 = self.weights.iter().map(|w| w * w).sum();
        if sum.abs() > 1e-12 * n2 {
            return Err(Error::ConstraintViolated(format!("charges sum to {sum}, not 0")));
        }
        if (sq - n2).abs() > 1e-12 * n2 {
            return Err(Error::ConstraintViolated(format!("squared charges sum to {sq}, not {n2}")));
        }
        Ok(())
    }
}

/// `K[d] = sum_{m in Z^2} p(N^2 |M(d/N + m)|^2)` for `d` in `(Z/N)^2`, flattened like the weights.
pub fn born_kernel(l: &Lattice, n: usize, p: &CMPotential, pol: &TruncationPolicy) -> Result<Vec<CertifiedValue>> {
    p.check()?;
    if p.lattice_offset != 0.0 {
        return Err(Error::InvalidArgument("born energy needs a pure Gaussian mixture".into()));
    }
    let nf = n as f64;
    let mut out = Vec::with_capacity(n * n);
    for d1 in 0..n {
        for d2 in 0..n {
            let z = PhasePoint::lattice(d1 as f64 / nf, d2 as f64 / nf);
            let scaled_nodes = p
                .quadrature_nodes
                .iter()
                .map(|&(a, w)| (a * nf * nf, w))
                .collect();
            out.push(cm_lattice_energy(&CMPotential::mixture(scaled_nodes, &p.label), l, &z, pol)?);
        }
    }
    Ok(out)
}

/// `(1/N^2) sum_{c, c'} eps_c eps_c' K[c' - c]`.
pub fn born_energy_with_kernel(eps: &ChargeDistribution, kernel: &[CertifiedValue]) -> CertifiedValue {
    let n = eps.period_n;
    let mut acc = Neumaier::new();
    let mut tail = 0.0;
    for c1 in 0..n {
        for c2 in 0..n {
            let e = eps.weights[c1 * n + c2];
            for d1 in 0..n {
                for d2 in 0..n {
                    let f = eps.weights[((c1 + d1) % n) * n + (c2 + d2) % n];
                    let k = &kernel[d1 * n + d2];
                    acc.add(e * f * k.value);
                    tail += (e * f).abs() * k.tail_bound;
                }
            }
        }
    }
    let n2 = (n * n) as f64;
    CertifiedValue {
        value: acc.value() / n2,
        tail_bound: tail / n2,
        terms_used: kernel.iter().map(|k| k.terms_used).sum(),
    }
}

/// Charge energy per point on the unit-covolume lattice `l`; the `x = y`
/// self-interaction `eps^2 p(0)` is included.
pub fn born_energy(l: &Lattice, eps: &ChargeDistribution, p: &CMPotential, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    eps.validate()?;
    let k = born_kernel(l, eps.period_n, p, pol)?;
    Ok(born_energy_with_kernel(eps, &k))
}

/// [`born_energy`] without the self-interaction, i.e. minus `p(0)` (the squared
/// charges average to 1).
pub fn born_interaction_energy(
    l: &Lattice,
    eps: &ChargeDistribution,
    p: &CMPotential,
    pol: &TruncationPolicy,
) -> Result<CertifiedValue> {
    let e = born_energy(l, eps, p, pol)?;
    Ok(CertifiedValue {
        value: e.value - p.eval(0.0),
        ..e
    })
}

/// `sqrt 2` where `m2 - m1 = 0 mod 3`, `-1/sqrt 2` elsewhere.
pub fn epsilon_opt_hexagonal(n: usize) -> Result<ChargeDistribution> {
    if n == 0 || n % 3 != 0 {
        return Err(Error::NotMultipleOfThree(n));
    }
    let mut w = Vec::with_capacity(n * n);
    for m1 in 0..n {
        for m2 in 0..n {
            w.push(if (m2 + 3 * n - m1) % 3 == 0 {
                std::f64::consts::SQRT_2
            } else {
                -std::f64::consts::FRAC_1_SQRT_2
            });
        }
    }
    Ok(ChargeDistribution {
        period_n: n,
        weights: w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauConstants {
    pub l_hex: f64,
    pub a_hex: f64,
    pub product: f64,
    pub l_square: f64,
}

pub fn landau_constants() -> Result<LandauConstants> {
    let l_hex = gamma(1.0 / 3.0) * gamma(5.0 / 6.0) / gamma(1.0 / 6.0);
    let pol = TruncationPolicy::default();
    let a_hex = minimize_over_cell_with(&Lattice::hexagonal(), 1.0, GRID_N, &pol)?.value.value;
    let a_sq = minimize_over_cell_with(&Lattice::square(), 1.0, GRID_N, &pol)?.value.value;
    Ok(LandauConstants {
        l_hex,
        a_hex,
        product: l_hex * a_hex,
        l_square: 1.0 / (2.0 * a_sq),
    })
}
