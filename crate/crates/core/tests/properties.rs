//! Property suites: gradients, integrator structure, Sturm counts,
//! difference spectra and worker-count independence.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use isoperiod::integrate::{stepper_for, StepperConfig, TripleJumpMidpoint};
use isoperiod::period::{PhaseSpace, Populations};
use isoperiod::semiclassical::{
    cluster_verdict, difference_spectrum, discretize_1d, eig_tridiagonal, ClusterConfig, Grid1D,
    SpectralWindow, Tridiagonal,
};
use isoperiod::systems::{
    eval_gradient, lv_embed, Hamiltonian, HarmonicOscillator, Kepler, Potential1D,
};

use common::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x150_9e21),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn gradient_matches_finite_differences(raw in prop::collection::vec(-1.5f64..1.5, 8)) {
        for (name, sys) in systems() {
            let pt = point(sys.as_ref(), &raw);
            let (gq, gp) = eval_gradient(sys.as_ref(), &pt).unwrap();
            let g: Vec<f64> = gq.into_iter().chain(gp).collect();
            for (a, b) in g.iter().zip(fd_gradient(sys.as_ref(), &pt)) {
                prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{name}: {a} vs {b} at {pt:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(config(40))]

    #[test]
    fn steppers_are_symplectic(raw in prop::collection::vec(-1.0f64..1.0, 8)) {
        let cases: Vec<(Arc<dyn Hamiltonian>, StepperConfig)> = vec![
            (Arc::new(Kepler::new(1.0, 1.0, 1.0).unwrap()), StepperConfig::verlet(0.05)),
            (Arc::new(Kepler::new(1.0, 1.0, 1.0).unwrap()), StepperConfig::implicit_midpoint(0.05)),
            (Arc::new(lv()), StepperConfig::implicit_midpoint(0.05)),
            (Arc::new(lv4()), StepperConfig {
                method: TripleJumpMidpoint::NAME.into(),
                ..StepperConfig::implicit_midpoint(0.05)
            }),
        ];
        for (sys, cfg) in cases {
            let pt = point(sys.as_ref(), &raw);
            let defect = symplectic_defect(sys.as_ref(), &cfg, &pt);
            prop_assert!(defect < 1e-7, "{} {}: {defect:e}", sys.kind(), cfg.method);
        }
    }

    #[test]
    fn verlet_is_reversible(raw in prop::collection::vec(-1.0f64..1.0, 8), steps in 1usize..200) {
        let list: Vec<Arc<dyn Hamiltonian>> = vec![
            Arc::new(HarmonicOscillator::new(1.0, 2.0, 3).unwrap()),
            Arc::new(Kepler::new(1.0, 1.0, 1.0).unwrap()),
            Arc::new(Potential1D::parse("x^4 - x^2", 1.0, (-10.0, 10.0)).unwrap()),
        ];
        for sys in list {
            let pt0 = point(sys.as_ref(), &raw);
            let cfg = StepperConfig::verlet(1e-3);
            let s = stepper_for(sys.as_ref(), &cfg).unwrap();
            let mut pt = pt0.clone();
            for _ in 0..steps {
                pt = s.step(sys.as_ref(), &pt, cfg.h).unwrap();
            }
            for _ in 0..steps {
                pt = s.step(sys.as_ref(), &pt, -cfg.h).unwrap();
            }
            prop_assert!(pt.distance(&pt0) < 1e-12, "{}: {:e}", sys.kind(), pt.distance(&pt0));
        }
    }
}

#[test]
fn integrators_are_second_order() {
    for make in [StepperConfig::verlet, StepperConfig::implicit_midpoint] {
        for h in [0.1, 0.05, 0.02] {
            let ratio = ho_error(&make(h)) / ho_error(&make(h / 2.0));
            let name = make(h).method;
            println!("order ratio {name} h={h}: {ratio:.4}");
            assert!((3.5..=4.5).contains(&ratio), "{name} h={h}: {ratio}");
        }
    }
}

#[test]
fn finite_difference_eigenvalues_are_second_order() {
    let sys = Potential1D::parse("x^2", 1.0, (-10.0, 10.0)).unwrap();
    let hbar = 0.1;
    let level = |n: usize| {
        let op = discretize_1d(&sys, hbar, &Grid1D::new(5.0, n).unwrap()).unwrap();
        eig_tridiagonal(&op, (0.0, 1.2))
    };
    // halving the spacing: N + 1 doubles
    let (a, b) = (level(199), level(399));
    for k in 0..5 {
        let exact = (2 * k + 1) as f64 * hbar;
        let ratio = (a[k] - exact).abs() / (b[k] - exact).abs();
        println!("FD eigenvalue order ratio k={k}: {ratio:.4}");
        assert!((3.5..=4.5).contains(&ratio), "k={k}: {ratio}");
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn sturm_count_is_exact(
        (diag, off) in (2usize..40).prop_flat_map(|n| (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-2.0f64..2.0, n - 1),
        )),
        probes in prop::collection::vec(-12.0f64..12.0, 20),
    ) {
        let op = Tridiagonal::new(diag.clone(), off.clone()).unwrap();
        let eigs = dense_eigs(&diag, &off);
        for x in probes {
            if eigs.iter().any(|e| (e - x).abs() < 1e-9) {
                continue;
            }
            let expect = eigs.iter().filter(|e| **e < x).count();
            prop_assert_eq!(op.count_below(x), expect);
        }
        let got = eig_tridiagonal(&op, (-100.0, 100.0));
        prop_assert_eq!(got.len(), eigs.len());
        for (a, b) in got.iter().zip(&eigs) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn difference_spectrum_symmetry_and_cardinality(
        mut eigs in prop::collection::vec(0.5f64..1.5, 0..40),
        hbar in 0.001f64..0.2,
    ) {
        eigs.sort_by(f64::total_cmp);
        let n = eigs.len();
        let win = SpectralWindow { hbar, energy: 1.0, c: 1.0, delta: 0.25, eigenvalues: eigs };
        let mut d = difference_spectrum(&win);
        prop_assert_eq!(d.len(), n * n.saturating_sub(1));
        let mut neg: Vec<f64> = d.iter().map(|x| -x).collect();
        d.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        prop_assert_eq!(d, neg);
    }

    #[test]
    fn fill_fraction_is_monotone_in_the_data(
        base in prop::collection::vec(0.0f64..10.0, 0..200),
        extra in prop::collection::vec(-10.0f64..10.0, 0..200),
    ) {
        let mut more = base.clone();
        more.extend(&extra);
        let mut most = more.clone();
        most.extend(extra.iter().map(|x| x * 0.5 + 3.0));
        let out = cluster_verdict(&[0.1, 0.05, 0.02], &[base, more, most], &ClusterConfig::default()).unwrap();
        prop_assert!(out.fill_fractions.windows(2).all(|w| w[0] <= w[1]), "{:?}", out.fill_fractions);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn period_is_the_same_along_an_orbit(raw in prop::collection::vec(-1.0f64..1.0, 8), t in 0.3f64..5.0) {
        let ho = HarmonicOscillator::new(1.0, 1.0, 2).unwrap();
        let pt0 = point(&ho, &raw);
        prop_assume!(pt0.norm() > 0.1);
        let cfg = StepperConfig::verlet(1e-3);
        let space = PhaseSpace(&ho);
        let (ta, tb) = periods_along(&ho, &space, &pt0, &cfg, t);
        prop_assert!((ta - tb).abs() / ta < 1e-8, "oscillator: {ta} vs {tb}");

        let lv = lv();
        let x0 = [1.0 + 0.5 * raw[0].abs(), 1.0 + 0.5 * raw[1].abs()];
        prop_assume!(x0.iter().any(|x| *x > 1.05));
        let pt0 = lv_embed(&x0, &lv).unwrap().phase_point();
        let cfg = StepperConfig::implicit_midpoint(1e-3);
        let (ta, tb) = periods_along(&lv, &Populations(&lv), &pt0, &cfg, t);
        prop_assert!((ta - tb).abs() / ta < 1e-8, "lotka-volterra: {ta} vs {tb}");
    }
}


#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    for (name, patch) in rerun_cases() {
        let runs: Vec<String> = [1, 2, 8].iter().map(|w| run_with_workers(name, *w, &patch)).collect();
        assert!(runs.windows(2).all(|w| w[0] == w[1]), "{name} differs across worker counts");
    }
}
