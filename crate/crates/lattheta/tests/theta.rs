use std::f64::consts::PI;

use lattheta::lattice::lattice_from_tau;
use lattheta::special::gamma;
use lattheta::theta::{
    functional_equation_residual, lattice_gaussian_sum, montgomery_a, montgomery_b, montgomery_q, montgomery_q_hat,
    product_rep_theta1d_hat, theta1d, theta1d_derivatives, theta1d_hat, theta_charged, theta_shifted,
    theta_shifted_split,
};
use lattheta::{Error, Lattice, PhasePoint, TruncationPolicy};
use proptest::prelude::*;

fn naive(l: &Lattice, b: (f64, f64), alpha: f64, charged: bool) -> f64 {
    let (g11, g12, g22) = l.gram();
    let r = 70;
    let mut s = 0.0;
    for k in -r..=r {
        for m in -r..=r {
            let (k, m) = (k as f64, m as f64);
            if charged {
                let q = g11 * k * k + 2.0 * g12 * k * m + g22 * m * m;
                s += (-PI * alpha * q).exp() * (2.0 * PI * (k * b.1 - m * b.0)).cos();
            } else {
                let (a, c) = (k + b.0, m + b.1);
                let q = g11 * a * a + 2.0 * g12 * a * c + g22 * c * c;
                s += (-PI * alpha * q).exp();
            }
        }
    }
    s
}

#[test]
fn square_origin_matches_closed_form() {
    // theta_3(e^{-pi})^2 = sqrt(pi) / Gamma(3/4)^2
    let want = PI.sqrt() / gamma(0.75).powi(2);
    let v = theta_shifted(&Lattice::square(), &PhasePoint::lattice(0.0, 0.0), 1.0, &TruncationPolicy::default())
        .unwrap();
    assert!((v.value - want).abs() < 1e-13, "{} vs {want}", v.value);
}

#[test]
fn hexagonal_min_value() {
    let v = theta_shifted(
        &Lattice::hexagonal(),
        &PhasePoint::lattice(1.0 / 3.0, 1.0 / 3.0),
        1.0,
        &TruncationPolicy::default(),
    )
    .unwrap();
    assert!((v.value - 0.920371).abs() < 5e-7);
}

#[test]
fn rejects_bad_arguments() {
    let l = Lattice::square();
    let o = PhasePoint::lattice(0.0, 0.0);
    let pol = TruncationPolicy::default();
    assert_eq!(theta_shifted(&l, &o, 0.0, &pol), Err(Error::NonPositiveAlpha(0.0)));
    assert!(theta_shifted(&l, &o, -1.0, &pol).is_err());
    assert!(theta_shifted(&l, &o, 1.0, &TruncationPolicy::with_tol(0.0)).is_err());
    assert!(theta1d(0.1, 0.0, &pol).is_err());
}

#[test]
fn tail_not_met_is_reported() {
    let pol = TruncationPolicy {
        target_tol: 1e-15,
        max_radius: 2,
    };
    let r = theta_shifted(&Lattice::square(), &PhasePoint::lattice(0.2, 0.1), 1.0, &pol);
    assert!(matches!(r, Err(Error::TailNotMet { .. })), "{r:?}");
}

#[test]
fn split_parts_add_up() {
    let l = lattice_from_tau(0.2, 1.4).unwrap();
    let b = PhasePoint::lattice(0.3, 0.6);
    let pol = TruncationPolicy::default();
    for &a in &[0.3, 0.9, 1.0, 2.5] {
        let s = theta_shifted_split(&l, &b, a, &pol).unwrap();
        let t = theta_shifted(&l, &b, a, &pol).unwrap();
        assert_eq!(s.total().value, t.value);
        assert_eq!(s.constant, if a < 1.0 { 1.0 / a } else { 0.0 });
    }
}

#[test]
fn cartesian_shift_agrees_with_lattice_shift() {
    let l = lattice_from_tau(0.35, 1.2).unwrap();
    let p = PhasePoint::lattice(0.27, 0.81);
    let c = l.to_cartesian(&p);
    let pol = TruncationPolicy::default();
    let a = lattice_gaussian_sum(&l, &PhasePoint::cartesian(c[0], c[1]), 0.7, &pol).unwrap();
    let b = theta_shifted(&l, &p, 0.7, &pol).unwrap();
    assert!((a.value - b.value).abs() < 1e-13);
}

#[test]
fn montgomery_sandwich_holds() {
    let pol = TruncationPolicy::default();
    for &t in &[0.3, 0.7, 1.0, 1.5, 3.0] {
        let (a, b) = (montgomery_a(t).unwrap(), montgomery_b(t).unwrap());
        for i in 0..=20 {
            let beta = 0.5 * i as f64 / 20.0;
            let q = montgomery_q_hat(beta, t, &pol).unwrap().value;
            assert!(a <= q && q <= b, "t={t} beta={beta}: {a} {q} {b}");
        }
    }
}

#[test]
fn montgomery_q_matches_finite_difference() {
    let pol = TruncationPolicy::default();
    for &t in &[0.4, 1.0, 2.0] {
        for &beta in &[0.05, 0.2, 0.37, 0.49] {
            let (_, d1, _) = theta1d_derivatives(beta, t).unwrap();
            let want = -d1 / (2.0 * PI * beta).sin();
            let q = montgomery_q(beta, t, &pol).unwrap().value;
            assert!((q - want).abs() < 1e-10 * want.abs().max(1.0), "t={t} beta={beta}");
        }
    }
}

proptest! {
    #[test]
    fn shifted_matches_naive(x in 0.0f64..0.5, y in 0.87f64..2.5, u in 0.0f64..1.0, v in 0.0f64..1.0, a in 0.2f64..5.0) {
        let l = lattice_from_tau(x, y).unwrap();
        let pol = TruncationPolicy::default();
        let got = theta_shifted(&l, &PhasePoint::lattice(u, v), a, &pol).unwrap();
        let want = naive(&l, (u, v), a, false);
        prop_assert!((got.value - want).abs() <= got.tail_bound + 1e-12 * want.max(1.0));
    }

    #[test]
    fn charged_matches_naive(x in 0.0f64..0.5, y in 0.87f64..2.5, u in 0.0f64..1.0, v in 0.0f64..1.0, a in 0.2f64..5.0) {
        let l = lattice_from_tau(x, y).unwrap();
        let pol = TruncationPolicy::default();
        let got = theta_charged(&l, &PhasePoint::lattice(u, v), a, &pol).unwrap();
        let want = naive(&l, (u, v), a, true);
        prop_assert!((got.value - want).abs() <= got.tail_bound + 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn functional_equation(x in -1.0f64..1.0, y in 0.5f64..3.0, u in -1.0f64..1.0, v in -1.0f64..1.0, a in 0.2f64..5.0) {
        let l = lattice_from_tau(x, y).unwrap();
        let r = functional_equation_residual(&l, &PhasePoint::lattice(u, v), a, &TruncationPolicy::default()).unwrap();
        prop_assert!(r < 1e-10);
    }

    #[test]
    fn periodic_and_even_in_shift(u in 0.0f64..1.0, v in 0.0f64..1.0, a in 0.3f64..3.0) {
        let l = lattice_from_tau(0.21, 1.3).unwrap();
        let pol = TruncationPolicy::default();
        let f = |p, q| theta_shifted(&l, &PhasePoint::lattice(p, q), a, &pol).unwrap().value;
        let base = f(u, v);
        prop_assert!((f(u + 1.0, v - 2.0) - base).abs() < 1e-12 * base);
        prop_assert!((f(-u, -v) - base).abs() < 1e-12 * base);
        prop_assert!(base <= f(0.0, 0.0) * (1.0 + 1e-12));
    }

    #[test]
    fn one_dim_poisson(beta in -1.0f64..1.0, t in 0.05f64..20.0) {
        let pol = TruncationPolicy::default();
        let a = theta1d(beta, t, &pol).unwrap().value;
        let b = theta1d_hat(beta, 1.0 / t, &pol).unwrap().value / t.sqrt();
        prop_assert!((a - b).abs() < 1e-11 * a.max(1.0));
    }

    #[test]
    fn triple_product(beta in 0.0f64..1.0, t in 0.2f64..5.0) {
        let pol = TruncationPolicy::with_tol(1e-15);
        let s = theta1d_hat(beta, t, &pol).unwrap().value;
        let p = product_rep_theta1d_hat(beta, t, 200).unwrap();
        prop_assert!((s - p).abs() < 1e-12 * s.abs().max(1e-3));
    }

    #[test]
    fn derivatives_match_finite_differences(beta in -0.5f64..0.5, t in 0.2f64..5.0) {
        let h = 1e-4;
        let (v, d1, d2) = theta1d_derivatives(beta, t).unwrap();
        let (vp, _, _) = theta1d_derivatives(beta + h, t).unwrap();
        let (vm, _, _) = theta1d_derivatives(beta - h, t).unwrap();
        prop_assert!((d1 - (vp - vm) / (2.0 * h)).abs() < 1e-6 * (1.0 + d1.abs()));
        prop_assert!((d2 - (vp - 2.0 * v + vm) / (h * h)).abs() < 1e-4 * (1.0 + d2.abs()));
    }
}
