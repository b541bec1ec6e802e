use prf_core::prf::{equilibrium_density, fixation_mean, fixation_mean_by_density, prf_density};
use prf_core::sampling::{class_components, legacy_means, new_spectrum, sample_fates, table_means};
use prf_core::{Grid, InitialMeasure, Layout, ScaledParams};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::chebyshev(200, 2e-3).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn equilibrium_density_endpoints() {
    assert!(equilibrium_density(1.0, 2.0, 1.0).abs() < 1e-15);
    assert!((equilibrium_density(1e-9, 2.0, 1.0) - 2.0).abs() < 1e-6);
}

#[test]
fn equilibrium_is_a_fixed_point_for_test_payoffs() {
    let (theta, gamma, t) = (1.5, 1.0, 0.4);
    let beta = ScaledParams::new(t, theta, gamma).unwrap();
    let nu = InitialMeasure::equilibrium(theta, gamma).unwrap();
    let dens = prf_density(&beta, &nu, &Grid::chebyshev(400, 1e-3).unwrap()).unwrap();
    let s = |y: f64| (1.0 - (-gamma * y).exp()) / gamma;
    let payoffs: [&dyn Fn(f64) -> f64; 3] = [&|y| y * (1.0 - y), &|y| s(y) * (1.0 - y), &|y| y * (1.0 - y).powi(2)];
    let total = dens.total_fn();
    let speed = |y: f64| (gamma * y).exp() / (y * (1.0 - y));
    for f in payoffs {
        let got = total.integrate(|y| f(y) * speed(y));
        let cells = 200_000;
        let want: f64 = (0..cells)
            .map(|i| {
                let y = (i as f64 + 0.5) / cells as f64;
                f(y) * equilibrium_density(y, theta, gamma) * speed(y)
            })
            .sum::<f64>()
            / cells as f64;
        assert!(rel(got, want) <= 1e-3, "{got} vs {want}");
    }
}

#[test]
fn fixation_mean_representations_agree() {
    for &gamma in &[-1.0, 0.0, 2.0] {
        for &t in &[0.1, 1.0] {
            let beta = ScaledParams::new(t, 1.0, gamma).unwrap();
            let nu = InitialMeasure::equilibrium(1.0, gamma).unwrap();
            let g = Grid::chebyshev(400, 1e-3).unwrap();
            let a = fixation_mean(&beta, &nu, &g).unwrap();
            let b = fixation_mean_by_density(&beta, &nu, &g).unwrap();
            assert!(a.legacy >= 0.0 && a.new >= 0.0, "γ={gamma} t={t}: {a:?}");
            assert!((a.total - a.legacy - a.new).abs() < 1e-15);
            // The density form of G_N cancels two terms of size θt.
            assert!((a.legacy - b.legacy).abs() <= 1e-3 * b.legacy.abs().max(1e-2), "legacy γ={gamma} t={t}: {a:?} {b:?}");
            assert!((a.new - b.new).abs() <= 1e-3 * b.new.abs().max(t), "new γ={gamma} t={t}: {a:?} {b:?}");
        }
    }
}

#[test]
fn long_run_fixation_flux() {
    let g = Grid::chebyshev(400, 1e-2).unwrap();
    for &(gamma, rate) in &[(0.0, 1.0), (2.0, 2.3130)] {
        let at = |t: f64| fixation_mean(&ScaledParams::new(t, 1.0, gamma).unwrap(), &InitialMeasure::Zero, &g).unwrap().new;
        let slope = (at(5.0) - at(3.0)) / 2.0;
        assert!(rel(slope, rate) <= 0.02, "γ={gamma}: {slope}");
    }
}

#[test]
fn fates_are_normalised_on_a_parameter_grid() {
    for &t in &[0.05, 0.3, 1.0, 2.5] {
        for &n in &[1usize, 2, 5, 9, 20] {
            for &gamma in &[-3.0, 0.0, 4.0] {
                let f = sample_fates(n, &ScaledParams::new(t, 1.0, gamma).unwrap(), &grid()).unwrap();
                for i in 0..10 {
                    let x = (i as f64 + 0.5) / 10.0;
                    let s = f.at(x);
                    assert!((s.i + s.j + s.k - 1.0).abs() <= 1e-5);
                    assert!(s.i >= -1e-5 && s.j >= -1e-5 && s.k >= -1e-5, "t={t} n={n} γ={gamma} x={x}: {s:?}");
                }
            }
        }
    }
}

#[test]
fn single_sample_fates_reduce_to_absorption() {
    let (t, x) = (0.4, 0.3);
    let beta = ScaledParams::new(t, 1.0, 0.0).unwrap();
    let f = sample_fates(1, &beta, &grid()).unwrap().at(x);
    let a = prf_core::diffusion::DiffusionKernel::new(0.0, grid()).unwrap().absorption(t).unwrap();
    let survive_as_mutant = prf_core::diffusion::heat_apply(|y| y, t, 0.0, &grid()).unwrap().final_level().eval(x);
    assert!(f.j.abs() < 1e-12);
    assert!((f.k - (a.fixed.eval(x) + survive_as_mutant)).abs() < 1e-6);
    assert!((f.k + f.i - 1.0).abs() < 1e-9);
}

#[test]
fn two_forms_of_the_one_sided_legacy_mean() {
    let beta = ScaledParams::new(0.3, 1.0, 1.0).unwrap();
    let nu = InitialMeasure::equilibrium(1.0, 1.0).unwrap();
    let l = legacy_means(5, 7, &beta, &nu, &grid()).unwrap();
    assert!((l.c2 - l.c2_symmetric).abs() <= 1e-6, "{l:?}");
    assert!(l.c2_consistent);
}

#[test]
fn zero_ancestor_has_no_shared_polymorphism() {
    let beta = ScaledParams::new(0.3, 2.0, 1.0).unwrap();
    let c = class_components(4, 6, &beta, &InitialMeasure::Zero, &grid()).unwrap();
    assert_eq!(c.means()[2], 0.0);
    assert!(c.means()[0] > 0.0 && c.means()[1] > 0.0);
}

#[test]
fn shared_cell_is_the_legacy_term_and_dprs_collapses() {
    let e = table_means(
        5,
        7,
        &ScaledParams::new(0.3, 4.0, 0.0).unwrap(),
        &ScaledParams::new(0.3, 2.0, 1.0).unwrap(),
        &InitialMeasure::equilibrium(4.0, 0.0).unwrap(),
        &InitialMeasure::equilibrium(2.0, 1.0).unwrap(),
        &grid(),
    )
    .unwrap();
    let m = e.means();
    assert_eq!(m[2], e.silent.legacy.c3);
    assert_eq!(m[5], e.replacement.legacy.c3);
    let d = e.to_dprs(false);
    assert_eq!(d.layout, Layout::Dprs);
    let v = d.values();
    assert!((v[1] - (m[1] + m[2])).abs() < 1e-12);
    assert!((v[3] - (m[4] + m[5])).abs() < 1e-12);
}

#[test]
fn means_are_linear_in_theta() {
    let g = grid();
    let at = |theta: f64| {
        class_components(
            3,
            5,
            &ScaledParams::new(0.5, theta, -1.0).unwrap(),
            &InitialMeasure::equilibrium(theta, -1.0).unwrap(),
            &g,
        )
        .unwrap()
        .means()
    };
    let (one, three) = (at(1.0), at(3.0));
    for (a, b) in one.iter().zip(three) {
        assert!(rel(b, 3.0 * a) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn new_mutation_means_grow_with_time(n in 2usize..12, gamma in -3.0f64..3.0, t in 0.05f64..1.5, dt in 0.05f64..1.0) {
        let g = grid();
        let a = new_spectrum(n, &ScaledParams::new(t, 1.0, gamma).unwrap(), &g).unwrap();
        let b = new_spectrum(n, &ScaledParams::new(t + dt, 1.0, gamma).unwrap(), &g).unwrap();
        prop_assert!(b.polymorphic >= a.polymorphic - 1e-9);
        prop_assert!(b.fixed >= a.fixed - 1e-9);
        prop_assert!(b.monomorphic_mutant >= a.monomorphic_mutant - 1e-9);
    }
}
