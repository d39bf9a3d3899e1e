//! Minimization of `E_L(.; alpha)` over the torus, fundamental-domain sweeps and
//! finite-difference probes along the special points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{in_d_plus, lattice_from_tau, special_point_a, special_point_b, Lattice, PhasePoint};
use crate::sum::Neumaier;
use crate::theta::{ball_radius, Form, theta_charged, theta_shifted, theta_shifted_split, CertifiedValue, TruncationPolicy};
use num_complex::Complex64;

const STARTS: usize = 5;
const MIN_STEP: f64 = 1e-9;
const MAX_STEPS: usize = 1_000_000;
const MAX_STARTS: usize = 64;
const BAND: f64 = 0.01;
const MAX_ESCAPES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinResult {
    pub argmin: PhasePoint,
    pub value: CertifiedValue,
    pub grid_resolution: usize,
    pub refinement_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    pub min_value: f64,
    pub argmin_u: f64,
    pub argmin_v: f64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointRule {
    PointA,
    PointB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RidgeFamily {
    F,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XDerivative {
    pub x: f64,
    pub shifted: f64,
    pub charged: f64,
}

fn wrap(t: f64) -> f64 {
    let r = t - t.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Of the two equivalent minimizers `p` and `-p` (E is even in z) pick the
/// lexicographically smaller one.
fn canonical_sign(u: f64, v: f64) -> (f64, f64) {
    let (u, v) = (wrap(u), wrap(v));
    let (nu, nv) = (wrap(-u), wrap(-v));
    if (nu, nv) < (u, v) {
        (nu, nv)
    } else {
        (u, v)
    }
}

fn pattern_search<F>(f_eval: &F, u0: f64, v0: f64, f0: f64, h0: f64) -> Result<(f64, f64, f64, usize)>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (-1.0, -1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
    ];
    let (mut u, mut v, mut f) = (u0, v0, f0);
    let mut h = h0;
    let mut steps = 0;
    while h >= MIN_STEP {
        // best of the 8 moves; first improvement drifts along flat ridges
        let mut next = (u, v, f);
        for (du, dv) in DIRS {
            let (cu, cv) = (u + du * h, v + dv * h);
            let fc = f_eval(cu, cv)?;
            if fc < next.2 {
                next = (cu, cv, fc);
            }
        }
        if next.2 < f {
            (u, v, f) = next;
            steps += 1;
            h = (2.0 * h).min(h0);
        } else {
            h *= 0.5;
        }
        if steps > MAX_STEPS {
            return Err(Error::NoConvergence(steps));
        }
    }
    Ok((u, v, f, steps))
}

/// Pattern search that restarts along the negative-curvature direction when it
/// stops at a saddle (compass moves miss narrow descent cones).
fn descend<F>(f_eval: &F, u0: f64, v0: f64, f0: f64, h0: f64) -> Result<(f64, f64, f64, usize)>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    const E: f64 = 1e-4;
    let (mut u, mut v, mut f, mut steps) = pattern_search(f_eval, u0, v0, f0, h0)?;
    for _ in 0..MAX_ESCAPES {
        let fuu = (f_eval(u + E, v)? - 2.0 * f + f_eval(u - E, v)?) / (E * E);
        let fvv = (f_eval(u, v + E)? - 2.0 * f + f_eval(u, v - E)?) / (E * E);
        let fuv = (f_eval(u + E, v + E)? - f_eval(u + E, v - E)? - f_eval(u - E, v + E)? + f_eval(u - E, v - E)?)
            / (4.0 * E * E);
        let mean = 0.5 * (fuu + fvv);
        let rad = (0.25 * (fuu - fvv).powi(2) + fuv * fuv).sqrt();
        let lmin = mean - rad;
        if !(lmin < -1e-6 * rad.max(mean.abs())) {
            break;
        }
        // eigenvector of the smaller eigenvalue
        let (eu, ev) = if fuv.abs() > 0.0 { (fuv, lmin - fuu) } else if fuu < fvv { (1.0, 0.0) } else { (0.0, 1.0) };
        let n = eu.hypot(ev);
        let (eu, ev) = (eu / n, ev / n);
        let mut found = None;
        let mut t = 1e-3;
        while t <= 0.25 && found.is_none() {
            for sgn in [1.0, -1.0] {
                let (cu, cv) = (u + sgn * t * eu, v + sgn * t * ev);
                let fc = f_eval(cu, cv)?;
                if fc < f {
                    found = Some((cu, cv, fc));
                    break;
                }
            }
            t *= 2.0;
        }
        let Some((cu, cv, fc)) = found else { break };
        let (nu, nv, nf, s) = pattern_search(f_eval, cu, cv, fc, h0)?;
        (u, v, f) = (nu, nv, nf);
        steps += s + 1;
    }
    Ok((u, v, f, steps))
}

/// Minimizes a 1-periodic, even function of lattice coordinates `(u, v)`:
/// coarse `grid_n x grid_n` scan, then pattern search from the low grid points
/// and the discrete local minima.
/// Returns `(u, v, value, refinement_steps)` with `(u, v)` in `[0,1)^2`.
pub fn minimize_torus_function<F>(f: F, grid_n: usize) -> Result<(f64, f64, f64, usize)>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if grid_n < 8 {
        return Err(Error::InvalidArgument(format!("grid_n must be at least 8, got {grid_n}")));
    }
    let h = 1.0 / grid_n as f64;
    let mut vals = vec![0.0; grid_n * grid_n];
    for i in 0..grid_n {
        for j in 0..grid_n {
            vals[i * grid_n + j] = f(i as f64 * h, j as f64 * h)?;
        }
    }
    // starts: the lowest few grid points, all points in the bottom 1% of the
    // value range (flat valleys), and every periodic discrete local minimum
    let at = |i: usize, j: usize| vals[(i % grid_n) * grid_n + j % grid_n];
    let mut order: Vec<usize> = (0..grid_n * grid_n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let (lo, hi) = (vals[order[0]], vals[order[order.len() - 1]]);
    let band = lo + BAND * (hi - lo);
    let mut starts: Vec<usize> = order
        .iter()
        .copied()
        .enumerate()
        .take_while(|&(k, idx)| k < STARTS || (vals[idx] <= band && k < MAX_STARTS))
        .map(|(_, idx)| idx)
        .collect();
    for idx in 0..grid_n * grid_n {
        let (i, j) = (idx / grid_n, idx % grid_n);
        let c = vals[idx];
        let is_min = [(1, 0), (grid_n - 1, 0), (0, 1), (0, grid_n - 1), (1, 1), (grid_n - 1, grid_n - 1), (1, grid_n - 1), (grid_n - 1, 1)]
            .iter()
            .all(|&(di, dj)| at(i + di, j + dj) >= c);
        if is_min && !starts.contains(&idx) {
            starts.push(idx);
        }
    }
    starts.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let mut best: Option<(f64, f64, f64)> = None;
    let mut steps = 0;
    for idx in starts {
        let (u0, v0) = ((idx / grid_n) as f64 * h, (idx % grid_n) as f64 * h);
        let (u, v, fv, s) = descend(&f, u0, v0, vals[idx], 0.5 * h)?;
        steps += s;
        let (u, v) = canonical_sign(u, v);
        let better = match best {
            None => true,
            Some((bf, bu, bv)) => fv < bf || (fv == bf && (u, v) < (bu, bv)),
        };
        if better {
            best = Some((fv, u, v));
        }
    }
    let (fv, u, v) = best.expect("at least one start");
    Ok((u, v, fv, steps))
}

pub fn minimize_over_cell(l: &Lattice, alpha: f64, grid_n: usize) -> Result<MinResult> {
    minimize_over_cell_with(l, alpha, grid_n, &TruncationPolicy::default())
}

pub fn minimize_over_cell_with(l: &Lattice, alpha: f64, grid_n: usize, pol: &TruncationPolicy) -> Result<MinResult> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    // the shift-independent part is dropped while searching
    let obj = |u, v| Ok(theta_shifted_split(l, &PhasePoint::lattice(u, v), alpha, pol)?.varying.value);
    let (u, v, _, steps) = minimize_torus_function(obj, grid_n)?;
    let value = theta_shifted_split(l, &PhasePoint::lattice(u, v), alpha, pol)?.total();
    Ok(MinResult {
        argmin: PhasePoint::lattice(u, v),
        value,
        grid_resolution: grid_n,
        refinement_steps: steps,
    })
}

pub const VERIFY_SEED: u64 = 0x5eed_0001;

/// Checks `E(z) <= E(0) + 2 tails` at `samples` random shifts (fixed seed).
pub fn verify_max_at_origin(l: &Lattice, alpha: f64, samples: usize) -> Result<bool> {
    let pol = TruncationPolicy::default();
    let e0 = theta_shifted(l, &PhasePoint::lattice(0.0, 0.0), alpha, &pol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    for _ in 0..samples {
        let z = PhasePoint::lattice(rng.gen(), rng.gen());
        let e = theta_shifted(l, &z, alpha, &pol)?;
        if e.value > e0.value + e0.tail_bound + e.tail_bound {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One record per `(x, y, alpha)` with `(x, y)` in `D_+`; cells outside are skipped.
/// Rows are ordered by x, then y, then alpha.
pub fn sweep_fundamental_domain(alphas: &[f64], xs: &[f64], ys: &[f64], grid_n: usize) -> Result<Vec<SweepRecord>> {
    sweep_with(alphas, xs, ys, grid_n, true, &TruncationPolicy::default())
}

/// Like [`sweep_fundamental_domain`] but keeps every grid point with `y > 0`.
pub fn sweep_grid(alphas: &[f64], xs: &[f64], ys: &[f64], grid_n: usize) -> Result<Vec<SweepRecord>> {
    sweep_with(alphas, xs, ys, grid_n, false, &TruncationPolicy::default())
}

/// Sweep with an explicit truncation policy; `d_plus_only` drops cells outside `D_+`.
pub fn sweep_with(
    alphas: &[f64],
    xs: &[f64],
    ys: &[f64],
    grid_n: usize,
    d_plus_only: bool,
    pol: &TruncationPolicy,
) -> Result<Vec<SweepRecord>> {
    let mut cells = Vec::new();
    for &x in xs {
        for &y in ys {
            if d_plus_only && !in_d_plus(Complex64::new(x, y), 1e-12) {
                continue;
            }
            for &alpha in alphas {
                cells.push((x, y, alpha));
            }
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    cells
        .par_iter()
        .map(|&(x, y, alpha)| {
            let l = lattice_from_tau(x, y)?;
            let m = minimize_over_cell_with(&l, alpha, grid_n, pol)?;
            Ok(SweepRecord {
                x,
                y,
                alpha,
                min_value: m.value.value,
                argmin_u: m.argmin.u,
                argmin_v: m.argmin.v,
                tail_bound: m.value.tail_bound,
            })
        })
        .collect()
}

fn rule_point(rule: PointRule, x: f64, y: f64) -> Result<PhasePoint> {
    match rule {
        PointRule::PointA => special_point_a(x, y),
        PointRule::PointB => special_point_b(x, y),
    }
}

fn theta_at_rule(rule: PointRule, x: f64, y: f64, alpha: f64, charged: bool) -> Result<f64> {
    let pol = TruncationPolicy::with_tol(1e-15);
    let l = lattice_from_tau(x, y)?;
    let p = rule_point(rule, x, y)?;
    Ok(if charged {
        theta_charged(&l, &p, alpha, &pol)?.value
    } else {
        theta_shifted(&l, &p, alpha, &pol)?.value
    })
}

/// Central-difference gradient in `(x, y)` of `theta_L(c(x,y); alpha)`, the
/// point `c` moving with the lattice.
pub fn gradient_at_point(rule: PointRule, x: f64, y: f64, alpha: f64, h: f64) -> Result<(f64, f64)> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::InvalidArgument(format!("step h = {h} outside [1e-7, 1e-3]")));
    }
    let f = |x, y| theta_at_rule(rule, x, y, alpha, false);
    let gx = (f(x + h, y)? - f(x - h, y)?) / (2.0 * h);
    let gy = (f(x, y + h)? - f(x, y - h)?) / (2.0 * h);
    Ok((gx, gy))
}

fn richardson_dx(x: f64, y: f64, alpha: f64, charged: bool, h: f64) -> Result<f64> {
    let f = |x| theta_at_rule(PointRule::PointB, x, y, alpha, charged);
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let d1 = d(h)?;
    let d2 = d(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// `d/dx` of both `theta_L(b; alpha)` and `theta_hat_L(b; alpha)` at `b = b(x, y)`.
pub fn x_derivative_sign_scan(alpha: f64, y: f64, xs: &[f64]) -> Result<Vec<XDerivative>> {
    if y < std::f64::consts::FRAC_1_SQRT_2 - 1e-12 {
        return Err(Error::InvalidArgument(format!("y = {y} below 1/sqrt(2)")));
    }
    xs.iter()
        .map(|&x| {
            if !(x > 0.0 && x < 0.5) {
                return Err(Error::InvalidArgument(format!("x = {x} outside (0, 1/2)")));
            }
            let h = 1e-5f64.min(0.5 * x).min(0.5 * (0.5 - x));
            Ok(XDerivative {
                x,
                shifted: richardson_dx(x, y, alpha, false, h)?,
                charged: richardson_dx(x, y, alpha, true, h)?,
            })
        })
        .collect()
}

/// Closed-form `d/dx` of `theta_L(b; alpha)` and `theta_hat_L(b; alpha)` at `b = b(x, y)`,
/// summed termwise over a ball much larger than the value tolerance requires.
pub fn x_derivative_analytic(alpha: f64, x: f64, y: f64) -> Result<XDerivative> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    let l = lattice_from_tau(x, y)?;
    let b = special_point_b(x, y)?;
    let db1 = (1.0 - 4.0 * y * y) / (8.0 * y * y);
    let form = Form::of(&l);
    let pa = std::f64::consts::PI * alpha;
    let r = 1.5 * ball_radius(alpha, form.d, 1e-20);
    let mut shifted = Neumaier::new();
    form.for_each_in_ball([b.u, b.v], r, |k, li, q| {
        let a = k as f64 + b.u;
        let m = li as f64 + b.v;
        let dq = 2.0 * a * m + 2.0 * x * m * m + (2.0 * a + 2.0 * x * m) * db1;
        shifted.add(-pa * dq * (-pa * q).exp());
    });
    let mut charged = Neumaier::new();
    form.for_each_in_ball([0.0, 0.0], r, |k, li, q| {
        let (k, li) = (k as f64, li as f64);
        let ph = 2.0 * std::f64::consts::PI * (k * b.v - li * b.u);
        let e = (-pa * q).exp();
        let dq = (2.0 * k * li + 2.0 * x * li * li) / y;
        charged.add(e * (-pa * dq * ph.cos() + ph.sin() * 2.0 * std::f64::consts::PI * li * db1));
    });
    Ok(XDerivative {
        x,
        shifted: shifted.value() / y,
        charged: charged.value(),
    })
}

/// `f_alpha(y) = theta(a; alpha)` or `g_alpha(y) = theta_hat(a; alpha)` on the line `x = 1/2`.
pub fn ridge_profile(family: RidgeFamily, alpha: f64, ys: &[f64]) -> Result<Vec<f64>> {
    let pol = TruncationPolicy::default();
    ys.iter()
        .map(|&y| {
            let l = lattice_from_tau(0.5, y)?;
            let a = special_point_a(0.5, y)?;
            Ok(match family {
                RidgeFamily::F => theta_shifted(&l, &a, alpha, &pol)?.value,
                RidgeFamily::G => theta_charged(&l, &a, alpha, &pol)?.value,
            })
        })
        .collect()
}

/// Shift rules for the exploratory stability sweep: `a + s (b - a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRule {
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    pub rule_s: f64,
    /// `theta_hex(a; alpha) - theta_L(z~; alpha)`; no sign is asserted.
    pub gap: f64,
}

/// Exploratory only: compares the hexagonal minimum with the value at a
/// perturbed point that moves with the lattice.
pub fn stability_sweep(alphas: &[f64], xs: &[f64], ys: &[f64], rules: &[StabilityRule]) -> Result<Vec<StabilityRecord>> {
    let pol = TruncationPolicy::default();
    let hex = Lattice::hexagonal();
    let third = PhasePoint::lattice(1.0 / 3.0, 1.0 / 3.0);
    let mut out = Vec::new();
    for &x in xs {
        for &y in ys {
            if !in_d_plus(Complex64::new(x, y), 1e-12) {
                continue;
            }
            let l = lattice_from_tau(x, y)?;
            let a = special_point_a(x, y)?;
            let b = special_point_b(x, y)?;
            for &alpha in alphas {
                let top = theta_shifted(&hex, &third, alpha, &pol)?.value;
                for r in rules {
                    let z = PhasePoint::lattice(a.u + r.s * (b.u - a.u), a.v + r.s * (b.v - a.v));
                    let v = theta_shifted(&l, &z, alpha, &pol)?.value;
                    out.push(StabilityRecord {
                        x,
                        y,
                        alpha,
                        rule_s: r.s,
                        gap: top - v,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Uniform random `(x, y)` in `D_+` with `y <= y_max`.
pub fn random_d_plus(rng: &mut impl Rng, y_max: f64) -> (f64, f64) {
    loop {
        let x: f64 = rng.gen_range(0.0..=0.5);
        let y: f64 = rng.gen_range(std::f64::consts::FRAC_1_SQRT_2..=y_max);
        if x * x + y * y >= 1.0 {
            return (x, y);
        }
    }
}
