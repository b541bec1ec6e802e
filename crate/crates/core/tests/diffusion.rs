use prf_core::diffusion::{heat_apply, spectral_apply, spectral_density, BackwardSolver, Dirichlet, DiffusionKernel};
use prf_core::{Grid, GridConfig};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::chebyshev(200, 1e-3).unwrap()
}

#[test]
fn neutral_eigenfunction_at_the_midpoint() {
    let f = |y: f64| y * (1.0 - y);
    let want = (-1.0f64).exp() * 0.25;
    assert!((want - 0.091970).abs() < 1e-6);
    let solver = heat_apply(f, 0.5, 0.0, &Grid::chebyshev(400, 1e-3).unwrap()).unwrap();
    assert!((solver.final_level().eval(0.5) - want).abs() < 1e-6);
    assert!((spectral_apply(f, 0.5, 0.5, 0.0, 40).unwrap() - want).abs() < 1e-9);
}

#[test]
fn neutral_duality_against_the_series() {
    // Q̃_t f = N(t, s f)/s with s(x) = x.
    let f = |y: f64| 1.0 + y;
    let sf = |y: f64| y * (1.0 - y) * f(y);
    let t = 0.3;
    let surface = heat_apply(sf, t, 0.0, &Grid::chebyshev(400, 1e-3).unwrap()).unwrap();
    let solved = surface.final_level();
    for &x in &[0.05, 0.2, 0.5, 0.8, 0.95] {
        let a = solved.eval(x) / x;
        let b = spectral_apply(sf, t, x, 0.0, 60).unwrap() / x;
        assert!((a - b).abs() < 1e-4, "x={x}: {a} vs {b}");
    }
}

#[test]
fn grid_refinement_changes_absorption_little() {
    let (gamma, t) = (2.0, 0.5);
    let base = GridConfig::default();
    let coarse = DiffusionKernel::for_horizon(gamma, t, &base).unwrap().absorption(t).unwrap();
    let fine = DiffusionKernel::for_horizon(gamma, t, &base.refined()).unwrap().absorption(t).unwrap();
    for &x in &[0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
        for (a, b) in [(&coarse.lost, &fine.lost), (&coarse.fixed, &fine.fixed), (&coarse.surviving, &fine.surviving)] {
            assert!((a.eval(x) - b.eval(x)).abs() < 1e-5, "x={x}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn absorption_and_survival_sum_to_one(gamma in -6.0f64..6.0, t in 0.01f64..2.0) {
        let a = DiffusionKernel::new(gamma, grid()).unwrap().absorption(t).unwrap();
        for ((l, s), f) in a.lost.values().iter().zip(a.surviving.values()).zip(a.fixed.values()) {
            prop_assert!((l + s + f - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn semigroup_property(gamma in -4.0f64..4.0, a in 1usize..60, b in 1usize..60) {
        let (t1, t2) = (a as f64 * 0.01, b as f64 * 0.01);
        let solver = BackwardSolver::new(grid(), gamma).unwrap();
        let payoff: Vec<f64> = grid().nodes.iter().map(|&x| x * (1.0 - x) * (1.0 + x)).collect();
        let once = &solver.evolve(vec![payoff.clone()], &[Dirichlet::KILLED], t1 + t2).unwrap()[0];
        let half = solver.evolve(vec![payoff], &[Dirichlet::KILLED], t1).unwrap().remove(0);
        let twice = &solver.evolve(vec![half.into_values()], &[Dirichlet::KILLED], t2).unwrap()[0];
        let sup = once.values().iter().zip(twice.values()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(sup <= 1e-5, "sup {}", sup);
    }

    #[test]
    fn neutral_density_is_symmetric(t in 0.05f64..2.0, x in 0.01f64..0.99, y in 0.01f64..0.99) {
        let p = spectral_density(t, x, y, 0.0, 60).unwrap();
        let q = spectral_density(t, y, x, 0.0, 60).unwrap();
        prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
    }
}
