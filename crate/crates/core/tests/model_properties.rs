use proptest::prelude::*;
use switchprune::linalg::{self, Matrix};
use switchprune::models::{
    augmented_solver_matrix, cosim_step_matrix, cosim_step_matrix_exact, error_system, hybrid_magnitude,
    pendulum_pair, solver_matrix, stability_domain_grid, CosimConfig, CoupledLinearPair, LinearSimulator,
    PendulumParams, SolverMethod,
};
use switchprune::Word;

const METHODS: [SolverMethod; 4] = [
    SolverMethod::ForwardEuler,
    SolverMethod::Midpoint,
    SolverMethod::RungeKutta4,
    SolverMethod::RungeKutta4Literal,
];

fn method() -> impl Strategy<Value = SolverMethod> {
    prop::sample::select(METHODS.to_vec())
}

proptest! {
    #[test]
    fn scalar_solver_matrix_is_the_stability_function(m in method(), re in -3.0..1.0f64, im in -2.0..2.0f64) {
        // The real 2×2 form of re + i·im.
        let z = Matrix::from_rows(&[[re, -im], [im, re]]).unwrap();
        let r = solver_matrix(m, 1.0, &z).unwrap();
        let (a, b) = m.stability_function((re, im));
        prop_assert!((r[(0, 0)] - a).abs() < 1e-9 * (1.0 + a.abs()));
        prop_assert!((r[(1, 0)] - b).abs() < 1e-9 * (1.0 + b.abs()));
        prop_assert!((hybrid_magnitude(&[m], (re, im)) - a.hypot(b)).abs() < 1e-9 * (1.0 + a.hypot(b)));
    }

    #[test]
    fn zero_order_hold_keeps_the_input(m in method(), h in 0.001..0.5f64) {
        let p = pendulum_pair(&PendulumParams::default()).unwrap();
        let a = augmented_solver_matrix(&p.s2, m, h).unwrap();
        let (n, k) = (p.s2.states(), p.s2.inputs());
        let bottom = a.block(n, n + k, 0, n + k);
        let mut want = Matrix::zeros(k, n + k);
        want.set_block(0, n, &Matrix::identity(k));
        prop_assert_eq!(bottom, want);
    }

    #[test]
    fn controller_solver_does_not_change_the_spectrum(m in method(), h2 in prop::sample::select(vec![0.01, 0.02, 0.1])) {
        let p = pendulum_pair(&PendulumParams::default()).unwrap();
        let base = CosimConfig { method1: SolverMethod::ForwardEuler, h1: 0.1, method2: SolverMethod::Midpoint, h2, big_h: 0.1 };
        let other = CosimConfig { method1: m, h1: 0.05, ..base };
        let a = linalg::spectral_radius(&cosim_step_matrix(&p, &base).unwrap()).unwrap();
        let b = linalg::spectral_radius(&cosim_step_matrix(&p, &other).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn exact_cosimulation_converges_to_the_monolithic_flow() {
    let p = pendulum_pair(&PendulumParams::default()).unwrap();
    let flow_gap = |h: f64| {
        let cosim = cosim_step_matrix_exact(&p, h).unwrap();
        let exact = linalg::mat_exp(&p.monolithic(), h).unwrap();
        cosim.sub(&exact).unwrap().norm_2()
    };
    let (e1, e2) = (flow_gap(1e-2), flow_gap(1e-3));
    let order = (e1 / e2).log10();
    assert!(order >= 0.9, "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn decoupled_pair_gives_block_diagonal_solver_powers() {
    let a1 = Matrix::from_rows(&[[-1.0, 0.5], [0.0, -2.0]]).unwrap();
    let a2 = Matrix::from_rows(&[[-0.5]]).unwrap();
    let sim = |a: &Matrix| LinearSimulator {
        a: a.clone(),
        b: Matrix::zeros(a.rows(), 1),
        c: Matrix::zeros(1, a.rows()),
        d: Matrix::zeros(1, 1),
    };
    let pair = CoupledLinearPair::new(sim(&a1), sim(&a2)).unwrap();
    let cfg = CosimConfig { method1: SolverMethod::Midpoint, h1: 0.05, method2: SolverMethod::RungeKutta4, h2: 0.1, big_h: 0.2 };
    let got = cosim_step_matrix(&pair, &cfg).unwrap();
    let p1 = solver_matrix(SolverMethod::Midpoint, 0.05, &a1).unwrap().powi(4).unwrap();
    let p2 = solver_matrix(SolverMethod::RungeKutta4, 0.1, &a2).unwrap().powi(2).unwrap();
    let mut want = Matrix::zeros(3, 3);
    want.set_block(0, 0, &p1);
    want.set_block(2, 2, &p2);
    assert!(got.max_abs_diff(&want) < 1e-15);
}

#[test]
fn alternating_solvers_stabilize_where_one_alone_does_not() {
    // Forward Euler with h = 0.25 puts z = -2.5 outside its domain; a
    // Midpoint step at z = -1 damps enough to bring the pair back.
    let a_bar = Matrix::diag(&[-10.0, -1.0]);
    let sys = error_system(&a_bar, &[(SolverMethod::ForwardEuler, 0.25), (SolverMethod::Midpoint, 0.1)]).unwrap();
    let s = &sys.css;
    let one = s.growth(&Word::new(vec![1])).unwrap();
    let alt = s.growth(&Word::new(vec![1, 2])).unwrap();
    assert!(one > 1.0, "FE alone: {one}");
    assert!(alt < 1.0, "alternation: {alt}");
}

#[test]
fn hybrid_domain_extends_forward_euler() {
    let grid = |ms: &[SolverMethod]| stability_domain_grid(ms, (-3.0, 1.0), (-2.0, 2.0), 81).unwrap();
    let fe = grid(&[SolverMethod::ForwardEuler, SolverMethod::ForwardEuler]);
    let md_fe = grid(&[SolverMethod::ForwardEuler, SolverMethod::Midpoint]);
    let gained = fe.iter().zip(&md_fe).filter(|(a, b)| !a.stable && b.stable).count();
    assert!(gained > 0);
}
