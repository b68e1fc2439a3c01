//! Helpers shared by the property suites and the acceptance run.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use isoperiod::experiments::{run_recipe, RecipeRegistry};
use isoperiod::integrate::{integrate, stepper_for, StepperConfig};
use isoperiod::period::{detect_period_in, SectionSpace};
use isoperiod::systems::{
    AnisotropicOscillator2D, Hamiltonian, HarmonicOscillator, Kepler, LotkaVolterra, Potential1D,
};
use isoperiod::PhasePoint;

pub fn lv() -> LotkaVolterra {
    LotkaVolterra::new(vec![1.0, -1.0], vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()
}

pub fn lv4() -> LotkaVolterra {
    LotkaVolterra::new(
        vec![1.0, -0.5, 0.3, -0.2],
        vec![
            vec![0.0, -1.0, 0.5, 0.2],
            vec![1.0, 0.0, -0.7, 0.3],
            vec![-0.5, 0.7, 0.0, -1.0],
            vec![-0.2, -0.3, 1.0, 0.0],
        ],
    )
    .unwrap()
}

pub fn systems() -> Vec<(&'static str, Arc<dyn Hamiltonian>)> {
    vec![
        ("ho", Arc::new(HarmonicOscillator::new(1.3, 0.7, 2).unwrap())),
        ("kepler", Arc::new(Kepler::new(1.0, 2.0, 0.5).unwrap())),
        ("lv", Arc::new(lv())),
        ("lv4", Arc::new(lv4())),
        ("quartic", Arc::new(Potential1D::parse("x^4 - 2x^2 + 0.5x", 0.5, (-10.0, 10.0)).unwrap())),
        ("aniso", Arc::new(AnisotropicOscillator2D::new(1.0, 2f64.sqrt()).unwrap())),
    ]
}

pub fn point(sys: &dyn Hamiltonian, raw: &[f64]) -> PhasePoint {
    let n = sys.dof();
    let mut q = raw[..n].to_vec();
    let p = raw[4..4 + n].to_vec();
    if sys.kind() == Kepler::KIND {
        // keep away from the singularity
        q[0] = q[0].abs() + 0.3;
    }
    PhasePoint::new(q, p).unwrap()
}

pub fn fd_gradient(sys: &dyn Hamiltonian, pt: &PhasePoint) -> Vec<f64> {
    let z = pt.to_vec();
    (0..z.len())
        .map(|i| {
            let h = 1e-5 * (1.0 + z[i].abs());
            let mut a = z.clone();
            let mut b = z.clone();
            a[i] += h;
            b[i] -= h;
            let ea = sys.energy(&PhasePoint::from_slice(&a)).unwrap();
            let eb = sys.energy(&PhasePoint::from_slice(&b)).unwrap();
            (ea - eb) / (2.0 * h)
        })
        .collect()
}

/// `JᵀΩJ − Ω` for the one-step map, with `J` by central differences.
pub fn symplectic_defect(sys: &dyn Hamiltonian, cfg: &StepperConfig, pt: &PhasePoint) -> f64 {
    let stepper = stepper_for(sys, cfg).unwrap();
    let z = pt.to_vec();
    let d = z.len();
    let n = d / 2;
    let mut jac = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let e = 1e-6;
        let mut a = z.clone();
        let mut b = z.clone();
        a[j] += e;
        b[j] -= e;
        let fa = stepper.step(sys, &PhasePoint::from_slice(&a), cfg.h).unwrap().to_vec();
        let fb = stepper.step(sys, &PhasePoint::from_slice(&b), cfg.h).unwrap().to_vec();
        for i in 0..d {
            jac[(i, j)] = (fa[i] - fb[i]) / (2.0 * e);
        }
    }
    let mut omega = DMatrix::<f64>::zeros(d, d);
    for i in 0..n {
        omega[(i, n + i)] = 1.0;
        omega[(n + i, i)] = -1.0;
    }
    (jac.transpose() * &omega * &jac - omega).amax()
}

/// Global error after `t = 1` against the exact oscillator flow.
pub fn ho_error(cfg: &StepperConfig) -> f64 {
    let sys = HarmonicOscillator::new(1.0, 1.0, 1).unwrap();
    let pt0 = PhasePoint::new(vec![0.8], vec![0.3]).unwrap();
    let traj = integrate(&sys, &pt0, cfg, 1.0, None).unwrap();
    let t = *traj.times.last().unwrap();
    let exact = PhasePoint::new(
        vec![0.8 * t.cos() + 0.3 * t.sin()],
        vec![-0.8 * t.sin() + 0.3 * t.cos()],
    )
    .unwrap();
    traj.states.last().unwrap().distance(&exact)
}

pub fn dense_eigs(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = off[i];
            m[(i + 1, i)] = off[i];
        }
    }
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn periods_along(
    sys: &dyn Hamiltonian,
    space: &dyn SectionSpace,
    pt0: &PhasePoint,
    cfg: &StepperConfig,
    t: f64,
) -> (f64, f64) {
    let a = detect_period_in(sys, space, pt0, cfg, None, None).unwrap();
    let traj = integrate(sys, pt0, cfg, t, None).unwrap();
    let b = detect_period_in(sys, space, traj.states.last().unwrap(), cfg, None, None).unwrap();
    (a.period.unwrap(), b.period.unwrap())
}
pub fn run_with_workers(name: &str, workers: usize, patch: impl Fn(&mut serde_json::Value)) -> String {
    let mut r = RecipeRegistry::builtin().get(name).unwrap();
    patch(&mut r.parameters);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
    pool.install(|| {
        let doc = run_recipe(&r).unwrap();
        doc.to_json().unwrap() + &doc.summary_csv
    })
}


/// Recipes checked for worker-count independence, shrunk to test size.
pub fn rerun_cases() -> Vec<(&'static str, Box<dyn Fn(&mut serde_json::Value)>)> {
    vec![
        ("ho-survey", Box::new(|p| p["count"] = 24.into())),
        ("kepler-iso-energy", Box::new(|p| {
            p["count"] = 4.into();
            p["h"] = 1e-3.into();
        })),
        ("lv-hlevel", Box::new(|p| {
            p["levels"] = serde_json::json!([-3.0]);
            p["count_per_level"] = 2.into();
            p["drift_periods"] = 2.0.into();
        })),
        ("aniso-dense", Box::new(|p| p["grid_n"] = 800.into())),
        ("x4-bohr-sommerfeld", Box::new(|_| {})),
    ]
}
