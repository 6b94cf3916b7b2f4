mod common;

use common::*;
use hqtc_core::robust::{
    adaptive_sigma, c_loss, compute_residuals, converged, gaussian_kernel, hq_conjugate, quantile_sorted,
    update_weights,
};
use hqtc_core::solver::init_factors;
use hqtc_core::tensor::t_product;
use hqtc_core::{sample_mask, Error, KernelSchedule, ObservationMask, Tensor3};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn kernel_at_one_width() {
    for &s in &[0.1, 1.0, 3.7] {
        let g = gaussian_kernel(s, s).unwrap();
        assert!((g - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g - 0.60653).abs() < 1e-5);
        assert_eq!(gaussian_kernel(-s, s).unwrap(), g);
    }
    assert!(gaussian_kernel(1e3, 1.0).unwrap() < 1e-300);
    assert!(matches!(gaussian_kernel(1.0, 0.0), Err(Error::NonPositiveSigma(_))));
    assert!(gaussian_kernel(1.0, -2.0).is_err());
}

#[test]
fn kernel_decreases_in_magnitude() {
    let mut prev = 1.0;
    for t in 1..200 {
        let g = gaussian_kernel(t as f64 * 0.05, 1.3).unwrap();
        assert!(g < prev && g > 0.0);
        prev = g;
    }
}

#[test]
fn c_loss_of_single_residual() {
    let v = c_loss(&[1.0], 1.0).unwrap();
    assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
    assert!((v - 0.39347).abs() < 1e-5);
    assert_eq!(c_loss(&[0.0; 5], 0.7).unwrap(), 0.0);
    let big = c_loss(&[1e6, -1e6, 1e8], 0.5).unwrap();
    assert!((big - 3.0 * 0.25).abs() < 1e-15);
}

#[test]
fn c_loss_tends_to_half_square() {
    for &sigma in &[2.0, 5.0, 20.0, 100.0] {
        for t in -40..=40 {
            let e = t as f64 * 0.1;
            let v = c_loss(&[e], sigma).unwrap();
            let bound = e.powi(4) / (8.0 * sigma * sigma);
            assert!((v - 0.5 * e * e).abs() <= bound + 1e-15, "e = {e}, sigma = {sigma}");
        }
    }
}

#[test]
fn weights_on_a_grid_of_widths() {
    let sigma = 0.8;
    let mut r = Tensor3::zeros(3, 1, 2);
    r.set(0, 0, 0, 0.0);
    r.set(1, 0, 0, sigma);
    r.set(2, 0, 0, 2.0 * sigma);
    r.set(0, 0, 1, -2.0 * sigma);
    let mask = ObservationMask::from_indices(3, 1, 2, [(0, 0, 0), (1, 0, 0), (2, 0, 0), (0, 0, 1)]).unwrap();
    let w = update_weights(&r, &mask, sigma).unwrap();
    let expect = [1.0, (-0.5f64).exp(), (-2.0f64).exp()];
    for (i, e) in expect.iter().enumerate() {
        assert!((w.get(i, 0, 0) - e).abs() < 1e-15);
    }
    assert!((w.get(0, 0, 1) - (-2.0f64).exp()).abs() < 1e-15);
    assert_eq!(w.get(1, 0, 1), 0.0);
    assert_eq!(w.get(2, 0, 1), 0.0);
}

#[test]
fn outlier_weight_is_negligible() {
    let mut r = Tensor3::from_fn(4, 4, 1, |i, j, _| 0.01 * (i as f64 - j as f64));
    r.set(2, 3, 0, 10.0);
    let mask = ObservationMask::full(4, 4, 1);
    let w = update_weights(&r, &mask, 1.0).unwrap();
    assert!(w.get(2, 3, 0) <= (-50.0f64).exp());
    assert!(w.get(0, 0, 0) == 1.0);
}

#[test]
fn zero_residual_gives_indicator() {
    let mask = sample_mask(5, 4, 3, 0.4, 2).unwrap();
    let w = update_weights(&Tensor3::zeros(5, 4, 3), &mask, 0.3).unwrap();
    assert_eq!(&w, mask.indicator());
}

#[test]
fn weights_ignore_enumeration_order() {
    let mut g = rng(11);
    let mut idx: Vec<(usize, usize, usize)> = (0..30)
        .map(|_| (g.random_range(0..6), g.random_range(0..5), g.random_range(0..3)))
        .collect();
    idx.sort();
    idx.dedup();
    let r = random_tensor(&mut g, 6, 5, 3);
    let a = ObservationMask::from_indices(6, 5, 3, idx.iter().copied()).unwrap();
    idx.shuffle(&mut g);
    let b = ObservationMask::from_indices(6, 5, 3, idx.iter().copied()).unwrap();
    let pr = r.hadamard(a.indicator()).unwrap();
    assert_eq!(
        update_weights(&pr, &a, 0.5).unwrap(),
        update_weights(&pr, &b, 0.5).unwrap()
    );
}

#[test]
fn sigma_examples() {
    let s = KernelSchedule::synthetic();
    assert_eq!(adaptive_sigma(&[0.0; 9], &s).unwrap(), 0.3);
    assert_eq!(adaptive_sigma(&[-1.0, -1.0, 1.0, 1.0], &s).unwrap(), 6.0);
    assert_eq!(adaptive_sigma(&[-2.0; 7], &s).unwrap(), 0.3);
    assert!(matches!(adaptive_sigma(&[], &s), Err(Error::EmptyResiduals)));
    let fixed = s.with_fixed_sigma(0.9).unwrap();
    assert_eq!(adaptive_sigma(&[5.0, -3.0], &fixed).unwrap(), 0.9);
    assert_eq!(adaptive_sigma(&[], &fixed).unwrap(), 0.9);
    assert!(KernelSchedule::new(0.0, 1.0).is_err());
    assert!(KernelSchedule::new(1.0, 0.0).is_err());
    assert!(s.with_fixed_sigma(-1.0).is_err());
}

#[test]
fn sigma_matches_sorted_quantiles() {
    let mut g = rng(12);
    for _ in 0..300 {
        let n = g.random_range(1..60);
        let v: Vec<f64> = (0..n).map(|_| g.random_range(-3.0..3.0)).collect();
        let s = KernelSchedule::new(g.random_range(0.5..8.0), g.random_range(0.01..1.0)).unwrap();
        let q = quantile_oracle(&v, 0.25).max(quantile_oracle(&v, 0.75));
        assert_eq!(adaptive_sigma(&v, &s).unwrap(), (s.eta * q).max(s.sigma_min));
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(quantile_sorted(&sorted, 0.75).unwrap(), quantile_oracle(&v, 0.75));
    }
}

#[test]
fn residuals_match_triple_loop() {
    let mut g = rng(13);
    let (n1, n2, n3, r) = (5, 4, 3, 2);
    let (x, y) = init_factors(n1, n2, n3, r, 4).unwrap();
    let m = random_tensor(&mut g, n1, n2, n3);
    let mask = sample_mask(n1, n2, n3, 0.6, 5).unwrap();
    let w = Tensor3::from_fn(n1, n2, n3, |_, _, _| g.random_range(0.0..1.0)).hadamard(mask.indicator()).unwrap();
    let stats = compute_residuals(&m, &mask, &x, &y, &w).unwrap();
    let est = bcirc_product(&x, &y);
    let mut sq = 0.0;
    let mut observed = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                let e = m.get(i, j, k) - est.get(i, j, k);
                if mask.is_observed(i, j, k) {
                    sq += w.get(i, j, k) * e * e;
                    observed.push(e);
                    assert!((stats.residual.get(i, j, k) - e).abs() < 1e-12);
                } else {
                    assert_eq!(stats.residual.get(i, j, k), 0.0);
                }
            }
        }
    }
    assert!((stats.weighted_norm - sq.sqrt()).abs() < 1e-12);
    assert_eq!(stats.observed.len(), observed.len());
    for (a, b) in stats.observed.iter().zip(&observed) {
        assert!((a - b).abs() < 1e-12);
    }
    // unit weights give the plain masked norm
    let ones = mask.indicator().clone();
    let plain = compute_residuals(&m, &mask, &x, &y, &ones).unwrap();
    assert!((plain.weighted_norm - plain.residual.frobenius_norm()).abs() < 1e-12);
}

#[test]
fn exact_factorisation_has_zero_residual() {
    let (x, y) = init_factors(4, 5, 2, 2, 1).unwrap();
    let m = t_product(&x, &y).unwrap();
    let mask = ObservationMask::full(4, 5, 2);
    let s = compute_residuals(&m, &mask, &x, &y, mask.indicator()).unwrap();
    assert!(s.weighted_norm < 1e-13);
    assert!(compute_residuals(&m, &mask, &y, &x, mask.indicator()).is_err());
}

#[test]
fn stop_rule_examples() {
    assert!(converged(0.7, 0.7, 1e-300));
    assert!(!converged(1.0, 0.5, 1e-9));
    assert!(converged(1.0, 1.0 + 5e-10, 1e-9));
    assert!(!converged(1.0, 1.0 + 2e-9, 1e-9));
    assert!(!converged(1.0 + 2e-9, 1.0, 1e-9));
}

#[test]
fn weight_update_minimises_the_half_quadratic_bound() {
    let mut g = rng(14);
    for _ in 0..100 {
        let sigma = g.random_range(0.1..3.0);
        let e: Vec<f64> = (0..20).map(|_| g.random_range(-4.0..4.0)).collect();
        let target = c_loss(&e, sigma).unwrap();
        let surrogate = |w: &[f64]| -> f64 {
            e.iter().zip(w).map(|(e, &w)| 0.5 * w * e * e + hq_conjugate(w, sigma)).sum()
        };
        let best: Vec<f64> = e.iter().map(|&v| gaussian_kernel(v, sigma).unwrap()).collect();
        assert!((surrogate(&best) - target).abs() <= 1e-12 * target.max(1.0));
        for _ in 0..10 {
            let w: Vec<f64> = (0..20).map(|_| g.random_range(1e-6..1.0)).collect();
            assert!(surrogate(&w) >= target - 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn sigma_is_scale_covariant_above_the_clamp(
        v in prop::collection::vec(-5.0f64..5.0, 4..40), c in 0.2f64..5.0,
    ) {
        let s = KernelSchedule::new(6.0, 1e-3).unwrap();
        let base = adaptive_sigma(&v, &s).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        prop_assume!(base > s.sigma_min && c * base > s.sigma_min);
        let got = adaptive_sigma(&scaled, &s).unwrap();
        prop_assert!((got - c * base).abs() <= 1e-12 * got);
    }

    #[test]
    fn c_loss_is_bounded(v in prop::collection::vec(-1e3f64..1e3, 1..50), sigma in 0.01f64..10.0) {
        let l = c_loss(&v, sigma).unwrap();
        prop_assert!(l >= 0.0);
        prop_assert!(l <= v.len() as f64 * sigma * sigma * (1.0 + 1e-15));
        prop_assert_eq!(l == 0.0, v.iter().all(|&e| e * e / (2.0 * sigma * sigma) == 0.0));
    }
}
