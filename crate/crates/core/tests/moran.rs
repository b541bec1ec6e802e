use prf_core::diffusion::{dual_entrance_cdf, green_kernel, heat_apply, ultimate_fixation, ScaleSpeed};
use prf_core::moran::{
    absorption_profile, chain_green, discretize_measure, dual_hitting_cdf, expected_site_counts, moran_step_matrix,
    simulate_absorption, simulate_dual_hitting, simulate_field,
};
use prf_core::{FiniteParams, Grid, InitialMeasure, ScaledParams};
use proptest::prelude::*;

fn midpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cells: usize) -> f64 {
    let h = (b - a) / cells as f64;
    (0..cells).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

#[test]
fn weak_selection_ruin_matches_monte_carlo() {
    let fp = FiniteParams::new(100, 0.01, 0.0, 0).unwrap();
    let exact = absorption_profile(&fp, 1, 100).unwrap();
    assert!((exact - 0.015708).abs() < 5e-6, "{exact}");
    let mc = simulate_absorption(&fp, 1, 100, 1_000_000, 11).unwrap();
    assert!((mc.estimate - exact).abs() <= 3.0 * mc.std_error, "{mc:?} vs {exact}");
}

#[test]
fn neutral_ruin_on_a_subinterval() {
    let fp = FiniteParams::new(20, 0.0, 0.0, 0).unwrap();
    assert_eq!(absorption_profile(&fp, 3, 7).unwrap(), 3.0 / 7.0);
}

#[test]
fn midpoint_fixation_converges_to_the_scale_limit() {
    let limit = ultimate_fixation(0.5, 2.0);
    assert!((limit - 0.731059).abs() < 1e-6);
    let fp = FiniteParams::from_scaled(400, &ScaledParams::new(0.0, 0.0, 2.0).unwrap()).unwrap();
    let exact = absorption_profile(&fp, 200, 400).unwrap();
    assert!((exact - limit).abs() < 2e-3, "{exact}");
    let mc = simulate_absorption(&fp, 200, 400, 4000, 5).unwrap();
    assert!((mc.estimate - exact).abs() <= 3.0 * mc.std_error, "{mc:?} vs {exact}");
}

#[test]
fn green_kernel_is_the_time_integral_of_the_semigroup() {
    let (gamma, x) = (2.0, 0.3);
    assert!((green_kernel(0.3, 0.7, gamma) - 0.029029).abs() < 1e-6);
    // f m = 1, so the occupation integral is ∫ G(x,y) dy.
    let f = |y: f64| y * (1.0 - y) * (-gamma * y).exp();
    let target = midpoint(|y| green_kernel(x, y, gamma), 0.0, 1.0, 100_000);
    let surface = heat_apply(f, 10.0, gamma, &Grid::chebyshev(400, 1e-3).unwrap()).unwrap();
    let path: Vec<f64> = (0..surface.times.len()).map(|k| surface.at(k).eval(x)).collect();
    let integral: f64 = surface
        .times
        .windows(2)
        .zip(path.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    assert!((integral - target).abs() <= 1e-3 * target, "{integral} vs {target}");
}

#[test]
fn local_limit_of_single_mutant_fixation() {
    let gamma = 1.0;
    let s1 = ScaleSpeed::new(gamma).s1();
    for &n in &[100usize, 200, 400] {
        let fp = FiniteParams::new(n, gamma / n as f64, 0.0, 0).unwrap();
        let green = chain_green(&fp).unwrap();
        let dev = (n as f64 * green.h[1] * s1 - 1.0).abs();
        assert!(dev <= 5.0 / n as f64, "N={n}: {dev}");
    }
}

#[test]
fn dual_absorption_time_matches_the_diffusion() {
    let (n, gamma) = (200usize, 1.0);
    let sc = ScaleSpeed::new(gamma);
    let fp = FiniteParams::new(n, gamma / n as f64, 0.0, 0).unwrap();
    let green = chain_green(&fp).unwrap();
    for &i in &[1usize, 50, 100, 150] {
        let x = i as f64 / n as f64;
        let chain = green.dual_absorption_steps(i) / (n * n) as f64;
        let diffusion = midpoint(|y| sc.dual_green_kernel(x, y) * sc.dual_speed_density(y), 0.0, 1.0, 200_000);
        assert!((chain - diffusion).abs() <= 0.05 * diffusion, "i={i}: {chain} vs {diffusion}");
    }
}

#[test]
fn simulated_field_is_poisson_with_the_exact_means() {
    let scaled = ScaledParams::new(0.2, 10.0, 0.0).unwrap();
    let fp = FiniteParams::from_scaled(50, &scaled).unwrap();
    let omega = discretize_measure(&InitialMeasure::equilibrium(10.0, 0.0).unwrap(), 50);
    let exact = expected_site_counts(&fp, &omega).unwrap();
    let reps = 10_000;
    let sim = simulate_field(&fp, &omega, 3, reps).unwrap();
    let var = sim.variance.as_ref().unwrap();
    let mut checked = 0;
    for ((m, v), e) in sim.expected.iter().zip(var).zip(&exact.expected) {
        let se = (v / reps as f64).sqrt();
        assert!((m - e).abs() <= 3.0 * se, "mean {m} vs {e} (se {se})");
        if *m >= 1.0 {
            let ratio = v / m;
            assert!((0.9..=1.1).contains(&ratio), "variance/mean {ratio} at mean {m}");
            checked += 1;
        }
    }
    assert!(checked >= 5);
}

#[test]
fn conditioned_chain_hitting_matches_entrance_cdf() {
    let (n, gamma, t) = (200usize, 1.0, 0.5);
    let fp = FiniteParams::from_scaled(n, &ScaledParams::new(t, 0.0, gamma).unwrap()).unwrap();
    let exact = *dual_hitting_cdf(&fp).unwrap().last().unwrap();
    let mc = simulate_dual_hitting(&fp, 20_000, 9).unwrap();
    assert!((mc.estimate - exact).abs() <= 3.0 * mc.std_error, "{mc:?} vs chain {exact}");
    let diffusion = dual_entrance_cdf(t, gamma, &Grid::chebyshev(800, 1e-3).unwrap()).unwrap();
    assert!(diffusion.monotone);
    assert!((mc.estimate - diffusion.value).abs() <= 3.0 * mc.std_error, "{mc:?} vs diffusion {diffusion:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_matrix_rows_are_stochastic(n in 2usize..120, sigma in -0.5f64..2.0) {
        let p = moran_step_matrix(&FiniteParams::new(n, sigma, 0.0, 0).unwrap()).unwrap();
        for i in 0..=n {
            let row: f64 = (0..=n).map(|j| p.prob(i, j)).sum();
            prop_assert!((row - 1.0).abs() < 1e-12);
        }
        prop_assert_eq!(p.prob(0, 0), 1.0);
        prop_assert_eq!(p.prob(n, n), 1.0);
    }

    #[test]
    fn green_h_is_the_ruin_probability(n in 10usize..200, gamma in -5.0f64..5.0) {
        let fp = FiniteParams::new(n, gamma / n as f64, 0.0, 0).unwrap();
        let green = chain_green(&fp).unwrap();
        for i in 0..=n {
            let ruin = absorption_profile(&fp, i.max(1), n).unwrap();
            let h = if i == 0 { 0.0 } else { ruin };
            prop_assert!((green.h[i] - h).abs() < 1e-10 * h.max(1e-300).max(1.0));
        }
    }

    #[test]
    fn scale_map_round_trips(n in 50usize..1000, t in 0.0f64..5.0, theta in 0.0f64..50.0, gamma in -20.0f64..20.0) {
        let scaled = ScaledParams::new(t, theta, gamma).unwrap();
        let fp = FiniteParams::from_scaled(n, &scaled).unwrap();
        let back = prf_core::scale_map(&fp);
        prop_assert!((back.gamma - gamma).abs() <= 1e-12 * gamma.abs().max(1.0));
        prop_assert!((back.theta - theta).abs() <= 1e-12 * theta.max(1.0));
        prop_assert!((back.t - t).abs() <= 0.5 / (n * n) as f64 + 1e-15);
    }
}
