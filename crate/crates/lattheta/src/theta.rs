//! One-dimensional theta functions, Montgomery's Q, and certified lattice
//! Gaussian sums.
//!
//! Shifted sums `theta(b; alpha) = sum_n exp(-pi alpha |M(n + b)|^2)` and charged
//! sums `theta_hat(b; alpha) = sum_n exp(-pi alpha |M n|^2) cos(2 pi sigma(n, b))`
//! are truncated to a Euclidean ball whose radius is chosen from a closed-form
//! bound on the Gaussian tail outside it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Frame, Lattice, PhasePoint};
use crate::sum::{neumaier_sum, Neumaier};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub target_tol: f64,
    /// Cap on the summation radius, counted in index shells.
    pub max_radius: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            target_tol: 1e-12,
            max_radius: 10_000,
        }
    }
}

impl TruncationPolicy {
    pub fn with_tol(target_tol: f64) -> Self {
        Self {
            target_tol,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.target_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "target_tol must be positive, got {}",
                self.target_tol
            )));
        }
        Ok(())
    }
}

impl CertifiedValue {
    fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            tail_bound: self.tail_bound * c.abs(),
            terms_used: self.terms_used,
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveT(t));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    Ok(())
}

/// Representative of `beta` mod 1 in `[-1/2, 1/2]`.
fn centered(beta: f64) -> f64 {
    beta - beta.round()
}

/// `2 sum_{j>=0} exp(-pi t (r+j)^2)` bounded by a geometric series.
fn gauss_tail_1d(r: f64, t: f64) -> f64 {
    2.0 * (-PI * t * r * r).exp() / (1.0 - (-2.0 * PI * t * r).exp())
}

fn finish(value: f64, tail_bound: f64, terms_used: usize, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    if tail_bound > pol.target_tol {
        return Err(Error::TailNotMet {
            value,
            tail_bound,
            terms_used,
        });
    }
    Ok(CertifiedValue {
        value,
        tail_bound,
        terms_used,
    })
}

/// `sum_k exp(-pi t (k + beta)^2)`.
pub fn theta1d(beta: f64, t: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    check_t(t)?;
    pol.check()?;
    let b = centered(beta);
    let mut k_max = 0usize;
    while gauss_tail_1d(k_max as f64 + 0.5, t) > pol.target_tol && k_max < pol.max_radius {
        k_max += 1;
    }
    let tail = gauss_tail_1d(k_max as f64 + 0.5, t);
    let km = k_max as i64;
    let value = neumaier_sum((-km..=km).map(|k| {
        let s = k as f64 + b;
        (-PI * t * s * s).exp()
    }));
    finish(value, tail, 2 * k_max + 1, pol)
}

/// `sum_k exp(-pi t k^2) cos(2 pi k beta)`.
pub fn theta1d_hat(beta: f64, t: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    check_t(t)?;
    pol.check()?;
    let b = centered(beta);
    let mut k_max = 0usize;
    while gauss_tail_1d(k_max as f64 + 1.0, t) > pol.target_tol && k_max < pol.max_radius {
        k_max += 1;
    }
    let tail = gauss_tail_1d(k_max as f64 + 1.0, t);
    let mut acc = Neumaier::new();
    for k in (1..=k_max).rev() {
        let kf = k as f64;
        acc.add(2.0 * (-PI * t * kf * kf).exp() * (2.0 * PI * kf * b).cos());
    }
    acc.add(1.0);
    finish(acc.value(), tail, 2 * k_max + 1, pol)
}

/// Value, first and second `beta`-derivatives of `theta1d` (uncertified, summed
/// until terms underflow relative to the leading one).
pub fn theta1d_derivatives(beta: f64, t: f64) -> Result<(f64, f64, f64)> {
    check_t(t)?;
    let b = centered(beta);
    let k_max = ((40.0 / (PI * t)).sqrt().ceil() as i64) + 2;
    let (mut v, mut d1, mut d2) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for k in -k_max..=k_max {
        let s = k as f64 + b;
        let e = (-PI * t * s * s).exp();
        let w = 2.0 * PI * t * s;
        v.add(e);
        d1.add(-w * e);
        d2.add((w * w - 2.0 * PI * t) * e);
    }
    Ok((v.value(), d1.value(), d2.value()))
}

/// Partial Jacobi triple product for `theta1d_hat` with `n_factors` factors.
pub fn product_rep_theta1d_hat(beta: f64, t: f64, n_factors: usize) -> Result<f64> {
    check_t(t)?;
    if n_factors == 0 {
        return Err(Error::InvalidArgument("n_factors must be at least 1".into()));
    }
    let c = (2.0 * PI * beta).cos();
    let q = (-PI * t).exp();
    let mut p = 1.0;
    for k in 1..=n_factors {
        p *= product_factor(q, c, k);
    }
    Ok(p)
}

fn product_factor(q: f64, c: f64, k: usize) -> f64 {
    let q2k = q.powi(2 * k as i32);
    let qo = q.powi(2 * k as i32 - 1);
    (1.0 - q2k) * (1.0 + 2.0 * c * qo + qo * qo)
}

/// `-d/dbeta theta1d_hat(beta; t) / sin(2 pi beta)`, evaluated through the
/// differentiated product so that half-integer `beta` needs no special case.
pub fn montgomery_q_hat(beta: f64, t: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    check_t(t)?;
    pol.check()?;
    let q = (-PI * t).exp();
    let c = (2.0 * PI * beta).cos();
    let one_m_q2 = -(-2.0 * PI * t).exp_m1();
    // stop once the next omitted factor is below the relative target
    let mut k_max = 1usize;
    loop {
        let eps = q.powi(2 * k_max as i32 + 1);
        if eps / (one_m_q2 * (1.0 - eps)) < 0.01 * pol.target_tol || k_max >= pol.max_radius {
            break;
        }
        k_max += 1;
    }
    let mut log_p = 0.0;
    let mut s = Neumaier::new();
    for l in 1..=k_max {
        let f = product_factor(q, c, l);
        log_p += f.ln();
        let w = (1.0 - q.powi(2 * l as i32)) * q.powi(2 * l as i32 - 1);
        s.add(w / f);
    }
    let p = log_p.exp();
    let s = s.value();
    let value = 4.0 * PI * p * s;
    let eps = q.powi(2 * k_max as i32 + 1);
    let delta = 3.0 * eps / (one_m_q2 * (1.0 - eps));
    let ds = eps / (one_m_q2 * (1.0 - eps) * (1.0 - eps));
    let tail = 4.0 * PI * p * (s * delta.exp_m1() + delta.exp() * ds);
    finish(value, tail, k_max, pol)
}

/// `-d/dbeta theta1d(beta; t) / sin(2 pi beta)`, via `Q(beta;t) = t^{-1/2} Q_hat(beta; 1/t)`.
pub fn montgomery_q(beta: f64, t: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    check_t(t)?;
    let scale = 1.0 / t.sqrt();
    let inner = TruncationPolicy {
        target_tol: pol.target_tol / scale,
        ..*pol
    };
    let v = montgomery_q_hat(beta, 1.0 / t, &inner).map_err(|e| match e {
        Error::TailNotMet {
            value,
            tail_bound,
            terms_used,
        } => Error::TailNotMet {
            value: value * scale,
            tail_bound: tail_bound * scale,
            terms_used,
        },
        other => other,
    })?;
    Ok(v.scaled(scale))
}

pub fn montgomery_a(t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(if t <= 1.0 {
        t.powf(-1.5) * (-PI / (4.0 * t)).exp()
    } else {
        (1.0 - 1.0 / 3000.0) * 4.0 * PI * (-PI * t).exp()
    })
}

pub fn montgomery_b(t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(if t <= 1.0 {
        t.powf(-1.5)
    } else {
        (1.0 + 1.0 / 3000.0) * 4.0 * PI * (-PI * t).exp()
    })
}

/// Upper bound on `sum exp(-pi alpha |p|^2)` over the points `p` of a shifted
/// unit-covolume lattice with `|p| > r`, where `d` is half the cell diameter.
/// Uses `#{|p| <= s} <= pi (s + d)^2`.
pub fn gaussian_ball_tail(r: f64, alpha: f64, d: f64) -> f64 {
    let pa = PI * alpha;
    PI * (-pa * r * r).exp() * (r * r + 1.0 / pa + 2.0 * d * (r + 1.0 / (2.0 * pa * r)) + d * d)
}

/// Smallest radius (up to a 1% step) whose ball tail is below `tol`.
pub fn ball_radius(alpha: f64, d: f64, tol: f64) -> f64 {
    let mut r = ((1.0f64 / tol).ln().max(1.0) / (PI * alpha)).sqrt();
    while gaussian_ball_tail(r, alpha, d) > tol {
        r *= 1.01;
    }
    r
}

/// Quadratic form data of a lattice needed for ball enumeration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Form {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub d: f64,
}

impl Form {
    pub fn of(l: &Lattice) -> Self {
        let (g11, g12, g22) = l.gram();
        let a = (g11 + 2.0 * g12 + g22).max(0.0).sqrt();
        let b = (g11 - 2.0 * g12 + g22).max(0.0).sqrt();
        Self {
            g11,
            g12,
            g22,
            d: 0.5 * a.max(b),
        }
    }

    #[inline]
    pub fn q(&self, a: f64, m: f64) -> f64 {
        self.g11 * a * a + 2.0 * self.g12 * a * m + self.g22 * m * m
    }

    /// Calls `f(k, l, |M(n + shift)|^2)` for every index with `|M(n + shift)| <= r`.
    pub fn for_each_in_ball(&self, shift: [f64; 2], r: f64, mut f: impl FnMut(i64, i64, f64)) {
        let r2 = r * r;
        // rows |m| <= r sqrt(g11 / det) meet the ball
        let det = self.g11 * self.g22 - self.g12 * self.g12;
        let m_max = r * (self.g11 / det).sqrt();
        let l_lo = (-shift[1] - m_max).ceil() as i64;
        let l_hi = (-shift[1] + m_max).floor() as i64;
        for l in l_lo..=l_hi {
            let m = l as f64 + shift[1];
            let rem = r2 - m * m * det / self.g11;
            if rem < 0.0 {
                continue;
            }
            let half = (rem / self.g11).sqrt();
            let c = -self.g12 * m / self.g11 - shift[0];
            let k_lo = (c - half).ceil() as i64;
            let k_hi = (c + half).floor() as i64;
            for k in k_lo..=k_hi {
                let a = k as f64 + shift[0];
                let q = self.q(a, m);
                if q <= r2 {
                    f(k, l, q);
                }
            }
        }
    }
}

/// Raw ball-truncated sum `sum exp(-pi alpha |M(n+shift)|^2) cos(2 pi (k c2 - l c1))`.
pub(crate) fn ball_sum(
    form: &Form,
    shift: [f64; 2],
    charge: Option<[f64; 2]>,
    alpha: f64,
    skip_origin: bool,
    pol: &TruncationPolicy,
) -> Result<CertifiedValue> {
    check_alpha(alpha)?;
    pol.check()?;
    let shift = [centered(shift[0]), centered(shift[1])];
    let mut r = ball_radius(alpha, form.d, pol.target_tol);
    let r_cap = pol.max_radius as f64 / form.g11.sqrt();
    let capped = r > r_cap;
    if capped {
        r = r_cap;
    }
    let tail = gaussian_ball_tail(r, alpha, form.d);
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(64);
    form.for_each_in_ball(shift, r, |k, l, q| {
        if skip_origin && k == 0 && l == 0 {
            return;
        }
        let mut w = (-PI * alpha * q).exp();
        if let Some(c) = charge {
            w *= (2.0 * PI * (k as f64 * c[1] - l as f64 * c[0])).cos();
        }
        terms.push((q, w));
    });
    terms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    // accumulate smallest terms first
    let value = neumaier_sum(terms.iter().rev().map(|t| t.1));
    let n = terms.len().max(1);
    if capped {
        return Err(Error::TailNotMet {
            value,
            tail_bound: tail,
            terms_used: n,
        });
    }
    finish(value, tail, n, pol)
}

fn lattice_coords(l: &Lattice, b: &PhasePoint) -> [f64; 2] {
    let (u, v) = match b.frame {
        Frame::LatticeCoords => (b.u, b.v),
        Frame::Cartesian => l.to_lattice_coords(b),
    };
    [u, v]
}

fn map_tail_err(e: Error, c: f64) -> Error {
    match e {
        Error::TailNotMet {
            value,
            tail_bound,
            terms_used,
        } => Error::TailNotMet {
            value: value * c,
            tail_bound: tail_bound * c,
            terms_used,
        },
        other => other,
    }
}

/// Shifted sum evaluated directly in space, whatever the size of `alpha`.
pub fn theta_shifted_direct(l: &Lattice, b: &PhasePoint, alpha: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    ball_sum(&Form::of(l), lattice_coords(l, b), None, alpha, false, pol)
}

/// Charged sum evaluated directly, whatever the size of `alpha`.
pub fn theta_charged_direct(l: &Lattice, b: &PhasePoint, alpha: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    ball_sum(&Form::of(l), [0.0, 0.0], Some(lattice_coords(l, b)), alpha, false, pol)
}

/// A sum written as `constant + varying`, with the whole tail carried by `varying`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitValue {
    pub constant: f64,
    pub varying: CertifiedValue,
}

impl SplitValue {
    pub fn total(&self) -> CertifiedValue {
        CertifiedValue {
            value: self.constant + self.varying.value,
            ..self.varying
        }
    }
}

/// `theta_shifted` with the shift-independent origin term of the dual
/// representation split off (only nonzero for `alpha < 1`). Useful when
/// comparing values that differ far below the size of that constant.
pub fn theta_shifted_split(l: &Lattice, b: &PhasePoint, alpha: f64, pol: &TruncationPolicy) -> Result<SplitValue> {
    check_alpha(alpha)?;
    if alpha >= 1.0 {
        return Ok(SplitValue {
            constant: 0.0,
            varying: theta_shifted_direct(l, b, alpha, pol)?,
        });
    }
    let inner = TruncationPolicy {
        target_tol: pol.target_tol * alpha,
        ..*pol
    };
    let v = ball_sum(&Form::of(l), [0.0, 0.0], Some(lattice_coords(l, b)), 1.0 / alpha, true, &inner)
        .map_err(|e| map_tail_err(e, 1.0 / alpha))?;
    Ok(SplitValue {
        constant: 1.0 / alpha,
        varying: v.scaled(1.0 / alpha),
    })
}

/// `sum_n exp(-(pi alpha / y)((k+b1)^2 + 2x(k+b1)(l+b2) + (x^2+y^2)(l+b2)^2))`.
/// For `alpha < 1` it is evaluated as `(1/alpha) theta_hat(b; 1/alpha)`.
pub fn theta_shifted(l: &Lattice, b: &PhasePoint, alpha: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    Ok(theta_shifted_split(l, b, alpha, pol)?.total())
}

/// `sum_n exp(-(pi alpha / y)(k^2 + 2xkl + (x^2+y^2)l^2)) cos(2 pi (k b2 - l b1))`.
/// For `alpha < 1` it is evaluated as `(1/alpha) theta(b; 1/alpha)`.
pub fn theta_charged(l: &Lattice, b: &PhasePoint, alpha: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    check_alpha(alpha)?;
    if alpha >= 1.0 {
        return theta_charged_direct(l, b, alpha, pol);
    }
    let inner = TruncationPolicy {
        target_tol: pol.target_tol * alpha,
        ..*pol
    };
    let v = theta_shifted_direct(l, b, 1.0 / alpha, &inner).map_err(|e| map_tail_err(e, 1.0 / alpha))?;
    Ok(v.scaled(1.0 / alpha))
}

/// `E_L(z; alpha) = sum_{lambda} exp(-pi alpha |lambda + z|^2)`.
pub fn lattice_gaussian_sum(l: &Lattice, z: &PhasePoint, alpha: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    let [u, v] = lattice_coords(l, z);
    theta_shifted(l, &PhasePoint::lattice(u, v), alpha, pol)
}

/// `|theta(b; alpha) - theta_hat(b; 1/alpha) / alpha|` with both sides summed directly.
pub fn functional_equation_residual(l: &Lattice, b: &PhasePoint, alpha: f64, pol: &TruncationPolicy) -> Result<f64> {
    let lhs = theta_shifted_direct(l, b, alpha, pol)?;
    let rhs = theta_charged_direct(l, b, 1.0 / alpha, pol)?;
    Ok((lhs.value - rhs.value / alpha).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_tail_is_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let t = gaussian_ball_tail(0.25 * i as f64, 1.0, 0.7);
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn product_factor_positive() {
        for &t in &[0.05, 0.5, 3.0] {
            let q = (-PI * t).exp();
            for k in 1..30 {
                let lo = (1.0 - q.powi(2 * k as i32 - 1)).powi(2) * (1.0 - q.powi(2 * k as i32));
                for &c in &[-1.0, -0.3, 0.0, 1.0] {
                    assert!(product_factor(q, c, k) >= lo * (1.0 - 1e-12));
                }
            }
        }
    }
}
