use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use lattheta::applications::*;
use lattheta::lattice::{lattice_from_tau, ScaledLattice, SQRT3_2};
use lattheta::optimize::random_d_plus;
use lattheta::theta::theta_shifted;
use lattheta::{Error, Lattice, PhasePoint, TruncationPolicy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CATALAN: f64 = 0.915_965_594_177_219_015;
const ZETA3: f64 = 1.202_056_903_159_594_285;

fn charged_naive(l: &Lattice, alpha: f64) -> f64 {
    let (g11, g12, g22) = l.gram();
    let mut s = 0.0;
    for k in -40i32..=40 {
        for m in -40i32..=40 {
            let (k, m) = (k as f64, m as f64);
            s += (-PI * alpha * (g11 * k * k + 2.0 * g12 * k * m + g22 * m * m)).exp();
        }
    }
    s
}

#[test]
fn frame_bounds_square_and_hexagonal() {
    let pol = TruncationPolicy::default();
    let sq = gabor_frame_bounds(&Lattice::square(), 2, &pol).unwrap();
    assert!((sq.ratio - SQRT_2).abs() < 1e-9);
    assert!((sq.upper_b - 2.0 * charged_naive(&Lattice::square(), 1.0)).abs() < 1e-12);
    let hx = gabor_frame_bounds(&Lattice::hexagonal(), 2, &pol).unwrap();
    assert!((hx.ratio - 2f64.cbrt()).abs() < 1e-6);
    assert!((hx.argmin_z.u - 1.0 / 3.0).abs() < 1e-6);
    for d in [4, 6] {
        let s = gabor_frame_bounds(&Lattice::square(), d, &pol).unwrap();
        let h = gabor_frame_bounds(&Lattice::hexagonal(), d, &pol).unwrap();
        assert!(0.0 < s.lower_a && s.lower_a <= s.upper_b);
        assert!(h.ratio < s.ratio, "density {d}");
        let n = f64::from(d / 2);
        assert!((s.upper_b - d as f64 * charged_naive(&Lattice::square(), n)).abs() < 1e-11 * s.upper_b);
    }
    assert_eq!(gabor_frame_bounds(&Lattice::square(), 3, &pol), Err(Error::UnsupportedDensity(3)));
    assert!(gabor_frame_bounds(&Lattice::square(), 0, &pol).is_err());
}

#[test]
fn frame_sweep_is_minimized_by_hexagon() {
    let recs = strohmer_beaver_sweep(2, &[0.0, 0.25, 0.5], &[SQRT3_2, 1.2, 1.8]).unwrap();
    let best = recs.iter().min_by(|a, b| a.ratio.total_cmp(&b.ratio)).unwrap();
    assert_eq!((best.x, best.y), (0.5, SQRT3_2));
    // (0, sqrt(3)/2) and (1/4, sqrt(3)/2) fall outside D_+
    assert_eq!(recs.len(), 7);
}

#[test]
fn heat_kernel_has_unit_mass() {
    let l = lattice_from_tau(0.3, 1.4).unwrap();
    let pol = TruncationPolicy::default();
    let n = 48;
    for &t in &[0.02, 0.1, 0.5] {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let z = PhasePoint::lattice(i as f64 / n as f64, j as f64 / n as f64);
                s += heat_kernel_torus(&l, &z, t, &pol).unwrap().value;
            }
        }
        let mean = s / (n * n) as f64;
        assert!((mean - 1.0).abs() < 1e-10, "t={t}: {mean}");
    }
    assert!(heat_kernel_torus(&l, &PhasePoint::lattice(0.0, 0.0), 0.0, &pol).is_err());
}

#[test]
fn heat_routes_agree_on_random_probes() {
    let pol = TruncationPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let (x, y) = random_d_plus(&mut rng, 3.0);
        let l = lattice_from_tau(x, y).unwrap();
        let z = PhasePoint::lattice(rng.gen(), rng.gen());
        let t = rng.gen_range(0.01..2.0);
        let (g, s) = heat_kernel_torus_routes(&l, &z, t, &pol).unwrap();
        let allowed = g.tail_bound + s.tail_bound + 64.0 * f64::EPSILON * g.value.abs().max(1.0);
        assert!((g.value - s.value).abs() <= allowed, "{x} {y} {t}");
    }
}

#[test]
fn temperature_extremes_flatten() {
    let (a, b) = temperature_extremes(&Lattice::hexagonal(), 5.0).unwrap();
    assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    let (ah, bh) = temperature_extremes(&Lattice::hexagonal(), 0.1).unwrap();
    let (as_, bs) = temperature_extremes(&Lattice::square(), 0.1).unwrap();
    assert!(as_ < ah && ah < 1.0 && 1.0 < bh && bh < bs);
}

#[test]
fn mixture_energy_is_weighted_theta() {
    let pol = TruncationPolicy::default();
    let l = lattice_from_tau(0.1, 1.3).unwrap();
    let z = PhasePoint::lattice(0.4, 0.2);
    let p = CMPotential::mixture(vec![(0.5, 2.0), (3.0, 0.25)], "two");
    let got = cm_lattice_energy(&p, &l, &z, &pol).unwrap().value;
    let want = 2.0 * theta_shifted(&l, &z, 0.5, &pol).unwrap().value + 0.25 * theta_shifted(&l, &z, 3.0, &pol).unwrap().value;
    assert!((got - want).abs() < 1e-11);
    assert!(cm_lattice_energy(&CMPotential::mixture(vec![], "none"), &l, &z, &pol).is_err());
    assert!(cm_lattice_energy(&CMPotential::mixture(vec![(1.0, -1.0)], "neg"), &l, &z, &pol).is_err());
}

#[test]
fn riesz_mixture_reproduces_power() {
    for &s in &[1.5, 2.0, 3.0] {
        let p = riesz_potential(s, 0.1).unwrap();
        for &r in &[0.1f64, 0.3, 1.0, 2.5, 10.0] {
            let want = r.powf(-2.0 * s);
            assert!((p.eval(r * r) - want).abs() < 1e-9 * want, "s={s} r={r}");
        }
    }
    assert!(riesz_potential(1.0, 0.1).is_err());
    assert!(riesz_potential(2.0, 0.0).is_err());
}

#[test]
fn square_lattice_half_period_closed_forms() {
    let z = PhasePoint::lattice(0.5, 0.5);
    let pol = TruncationPolicy::with_tol(1e-8);
    let want2 = 2.0 * PI * PI * CATALAN;
    let want3 = 7.0 * ZETA3 * PI.powi(3) / 8.0;
    let sq = Lattice::square();
    for (s, want) in [(2.0, want2), (3.0, want3)] {
        let d = epstein_zeta_shifted(&sq, &z, s, &pol).unwrap();
        assert!((d.value - want).abs() < 1e-8 * want, "direct s={s}: {} vs {want}", d.value);
        let q = epstein_zeta_quadrature(&sq, &z, s, &pol).unwrap();
        assert!((q.value - want).abs() < 1e-8 * want, "quadrature s={s}: {} vs {want}", q.value);
    }
}

#[test]
fn epstein_poles_and_arguments() {
    let pol = TruncationPolicy::default();
    let o = PhasePoint::lattice(1.0, -2.0);
    assert_eq!(epstein_zeta_quadrature(&Lattice::square(), &o, 2.0, &pol), Err(Error::PoleAtLatticePoint));
    assert_eq!(epstein_zeta_shifted(&Lattice::square(), &o, 2.0, &pol), Err(Error::PoleAtLatticePoint));
    assert!(epstein_zeta_shifted(&Lattice::square(), &PhasePoint::lattice(0.5, 0.5), 0.9, &pol).is_err());
}

#[test]
fn hexagonal_epstein_minimum_beats_square() {
    let (p, h) = epstein_min_over_cell(&Lattice::hexagonal(), 2.0, 16).unwrap();
    assert!((p.u - 1.0 / 3.0).abs() < 1e-5 && (p.v - 1.0 / 3.0).abs() < 1e-5);
    let (_, s) = epstein_min_over_cell(&Lattice::square(), 2.0, 16).unwrap();
    assert!(s < h);
}

#[test]
fn born_invariances() {
    let l = Lattice::hexagonal();
    let p = CMPotential::gaussian(1.0);
    let pol = TruncationPolicy::default();
    let k = born_kernel(&l, 3, &p, &pol).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut w: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = w.iter().sum::<f64>() / 9.0;
    w.iter_mut().for_each(|x| *x -= mean);
    let norm = (9.0 / w.iter().map(|x| x * x).sum::<f64>()).sqrt();
    w.iter_mut().for_each(|x| *x *= norm);
    let eps = ChargeDistribution::new(3, w.clone()).unwrap();
    let e = born_energy_with_kernel(&eps, &k).value;
    let flipped = ChargeDistribution::new(3, w.iter().map(|x| -x).collect()).unwrap();
    assert!((born_energy_with_kernel(&flipped, &k).value - e).abs() < 1e-13);
    for (s1, s2) in [(1, 0), (0, 2), (2, 1)] {
        let t: Vec<f64> = (0..9).map(|i| eps.weight(i / 3 + s1, i % 3 + s2)).collect();
        let shifted = ChargeDistribution::new(3, t).unwrap();
        assert!((born_energy_with_kernel(&shifted, &k).value - e).abs() < 1e-13);
    }
    let opt = epsilon_opt_hexagonal(3).unwrap();
    let e_opt = born_energy(&l, &opt, &p, &pol).unwrap().value;
    assert!(e_opt <= e + 1e-12);
    let inter = born_interaction_energy(&l, &opt, &p, &pol).unwrap().value;
    assert!((e_opt - inter - 1.0).abs() < 1e-15);
}

#[test]
fn born_constraints() {
    let e = epsilon_opt_hexagonal(6).unwrap();
    assert!(e.validate().is_ok());
    assert_eq!(e.weight(0, 0), SQRT_2);
    assert_eq!(e.weight(1, 0), -FRAC_1_SQRT_2);
    assert_eq!(e.weight(-1, 2), SQRT_2);
    assert_eq!(epsilon_opt_hexagonal(4), Err(Error::NotMultipleOfThree(4)));
    assert!(ChargeDistribution::new(2, vec![1.0, 1.0, -1.0, -1.0]).is_ok());
    assert!(ChargeDistribution::new(2, vec![2.0, 0.0, -2.0, 0.0]).is_err());
    assert!(ChargeDistribution::new(2, vec![1.0, 1.0, 1.0, -1.0]).is_err());
    assert!(ChargeDistribution::new(2, vec![1.0, -1.0, 1.0]).is_err());
    let mut p = riesz_potential(2.0, 0.1).unwrap();
    p.lattice_offset = 1.0;
    assert!(born_kernel(&Lattice::square(), 3, &p, &TruncationPolicy::default()).is_err());
}

#[test]
fn square_alternating_charges() {
    let w = vec![1.0, -1.0, -1.0, 1.0];
    let eps = ChargeDistribution::new(2, w).unwrap();
    let p = CMPotential::gaussian(1.0);
    let pol = TruncationPolicy::default();
    let inter = born_interaction_energy(&Lattice::square(), &eps, &p, &pol).unwrap().value;
    // the alternating lattice sum: sum (-1)^{k+l} e^{-pi (k^2+l^2)} - 1
    let t: f64 = (-30i32..=30).map(|k| (if k % 2 == 0 { 1.0 } else { -1.0 }) * (-PI * (k * k) as f64).exp()).sum();
    assert!((inter - (t * t - 1.0)).abs() < 1e-12);
    assert!(inter < 0.0);
}

#[test]
fn landau_identity() {
    let c = landau_constants().unwrap();
    assert!((c.l_hex - 0.543259).abs() < 1e-6);
    assert!((c.product - 0.5).abs() < 1e-10);
    assert!(c.l_square > c.l_hex);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn epstein_homogeneity(scale in 0.5f64..2.0, u in 0.1f64..0.9, v in 0.1f64..0.9, s in 2.0f64..3.0) {
        let shape = lattice_from_tau(0.2, 1.1).unwrap();
        let pol = TruncationPolicy::with_tol(1e-7);
        let z = PhasePoint::lattice(u, v);
        let a = epstein_zeta_scaled(&ScaledLattice { shape, scale }, &z, s, &pol).unwrap();
        let b = epstein_zeta_shifted(&shape, &z, s, &pol).unwrap();
        let f = scale.powf(-2.0 * s);
        prop_assert!((a.value - f * b.value).abs() <= a.tail_bound + f * b.tail_bound + 1e-12 * a.value);
    }

    #[test]
    fn two_epstein_routes(u in 0.15f64..0.85, v in 0.15f64..0.85, s in 2.0f64..3.0) {
        let l = lattice_from_tau(0.4, 1.3).unwrap();
        let pol = TruncationPolicy::with_tol(1e-7);
        let z = PhasePoint::lattice(u, v);
        let q = epstein_zeta_quadrature(&l, &z, s, &pol).unwrap();
        let d = epstein_zeta_shifted(&l, &z, s, &pol).unwrap();
        prop_assert!((q.value - d.value).abs() <= q.tail_bound + d.tail_bound + 1e-12 * d.value);
    }

    #[test]
    fn cm_energy_favours_hexagon(w1 in 0.0f64..2.0, w2 in 0.0f64..2.0, a1 in 0.3f64..3.0) {
        prop_assume!(w1 + w2 > 0.1);
        let p = CMPotential::mixture(vec![(a1, w1), (a1 * 2.5, w2)], "mix");
        let pol = TruncationPolicy::default();
        let hex = cm_lattice_energy(&p, &Lattice::hexagonal(), &PhasePoint::lattice(1.0 / 3.0, 1.0 / 3.0), &pol).unwrap().value;
        let sq = cm_lattice_energy(&p, &Lattice::square(), &PhasePoint::lattice(0.5, 0.5), &pol).unwrap().value;
        prop_assert!(sq < hex);
    }
}
