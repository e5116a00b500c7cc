//! Builders for solver switching systems, co-simulation step matrices, the
//! inverted-pendulum instance, and small fixture languages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Automaton, AutomatonError, Edge, Symbol};
use crate::css::{Css, CssError};
use crate::linalg::{self, LinalgError, Matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("step size must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("communication step {big} is not an integer multiple of internal step {small}")]
    NotDivisible { big: f64, small: f64 },
    #[error("{what}: expected {expected:?}, got {got:?}")]
    Shape {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("D2 must be zero to rule out algebraic loops")]
    FeedthroughLoop,
    #[error("need at least one mode")]
    NoModes,
    #[error("resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("k must be at least 2, got {0}")]
    RunLength(usize),
    #[error("reconstruction check failed: {0}")]
    Reconstruction(String),
    #[error("invalid mode map fixture: {0}")]
    Fixture(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Css(#[from] CssError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// Single-step integration scheme for `ẋ = Āx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    ForwardEuler,
    Midpoint,
    RungeKutta4,
    /// Fourth-order polynomial with `z²/12` in place of `z²/2`, kept for
    /// comparison with the published formula.
    RungeKutta4Literal,
}

impl SolverMethod {
    /// Coefficients of the stability polynomial `R(z) = Σ c_i z^i`.
    pub fn coefficients(self) -> &'static [f64] {
        match self {
            SolverMethod::ForwardEuler => &[1.0, 1.0],
            SolverMethod::Midpoint => &[1.0, 1.0, 0.5],
            SolverMethod::RungeKutta4 => &[1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0],
            SolverMethod::RungeKutta4Literal => &[1.0, 1.0, 1.0 / 12.0, 1.0 / 6.0, 1.0 / 24.0],
        }
    }

    pub fn degree(self) -> usize {
        self.coefficients().len() - 1
    }

    pub fn short_name(self) -> &'static str {
        match self {
            SolverMethod::ForwardEuler => "fe",
            SolverMethod::Midpoint => "md",
            SolverMethod::RungeKutta4 => "rk4",
            SolverMethod::RungeKutta4Literal => "rk4-literal",
        }
    }

    pub fn parse(s: &str) -> Option<SolverMethod> {
        match s.to_ascii_lowercase().as_str() {
            "fe" | "forward_euler" | "euler" => Some(SolverMethod::ForwardEuler),
            "md" | "midpoint" => Some(SolverMethod::Midpoint),
            "rk4" | "rk" | "runge_kutta4" => Some(SolverMethod::RungeKutta4),
            "rk4-literal" | "rk4_literal" | "runge_kutta4_literal" => Some(SolverMethod::RungeKutta4Literal),
            _ => None,
        }
    }

    /// `R(z)` for complex `z = (re, im)`.
    pub fn stability_function(self, z: (f64, f64)) -> (f64, f64) {
        let mut acc = (0.0, 0.0);
        for c in self.coefficients().iter().rev() {
            acc = (acc.0 * z.0 - acc.1 * z.1 + c, acc.0 * z.1 + acc.1 * z.0);
        }
        acc
    }
}

fn check_step(h: f64) -> Result<(), ModelError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(ModelError::BadStep(h))
    }
}

/// One step of `method` with step `h` applied to `ẋ = Āx`: `R(Āh)`.
pub fn solver_matrix(method: SolverMethod, h: f64, a_bar: &Matrix) -> Result<Matrix, ModelError> {
    check_step(h)?;
    if !a_bar.is_square() {
        return Err(LinalgError::NotSquare {
            op: "solver_matrix",
            rows: a_bar.rows(),
            cols: a_bar.cols(),
        }
        .into());
    }
    let z = a_bar.scale(h);
    let n = a_bar.rows();
    let mut out = Matrix::zeros(n, n);
    let mut power = Matrix::identity(n);
    for (i, c) in method.coefficients().iter().enumerate() {
        if i > 0 {
            power = z.matmul(&power)?;
        }
        out = out.add(&power.scale(*c))?;
    }
    Ok(out)
}

/// Switched system of the global error of a variable-step, variable-method
/// simulation, with the local error matrices `A_σ - exp(Āh)`.
#[derive(Debug, Clone)]
pub struct ErrorSystem {
    pub css: Css,
    pub local_errors: Vec<Matrix>,
}

pub fn error_system(a_bar: &Matrix, modes: &[(SolverMethod, f64)]) -> Result<ErrorSystem, ModelError> {
    if modes.is_empty() {
        return Err(ModelError::NoModes);
    }
    let mut mats = Vec::with_capacity(modes.len());
    let mut local_errors = Vec::with_capacity(modes.len());
    for (method, h) in modes {
        let a = solver_matrix(*method, *h, a_bar)?;
        local_errors.push(a.sub(&linalg::mat_exp(a_bar, *h)?)?);
        mats.push(a);
    }
    Ok(ErrorSystem {
        css: Css::unconstrained(mats)?,
        local_errors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
    pub stable: bool,
}

/// Samples `|R_r(z) ⋯ R_1(z)|^{1/r}` of the hybrid method that applies
/// `methods` in order, on a `resolution × resolution` grid.
pub fn stability_domain_grid(
    methods: &[SolverMethod],
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: usize,
) -> Result<Vec<GridPoint>, ModelError> {
    if resolution < 2 {
        return Err(ModelError::Resolution(resolution));
    }
    if methods.is_empty() {
        return Err(ModelError::NoModes);
    }
    let at = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let im = at(im_range, i);
        for j in 0..resolution {
            let re = at(re_range, j);
            let magnitude = hybrid_magnitude(methods, (re, im));
            out.push(GridPoint {
                re,
                im,
                magnitude,
                stable: magnitude < 1.0,
            });
        }
    }
    Ok(out)
}

pub fn hybrid_magnitude(methods: &[SolverMethod], z: (f64, f64)) -> f64 {
    let mut log = 0.0;
    for m in methods {
        let (a, b) = m.stability_function(z);
        log += a.hypot(b).ln();
    }
    (log / methods.len() as f64).exp()
}

/// Integration settings of both simulators for one communication step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosimConfig {
    pub method1: SolverMethod,
    pub h1: f64,
    pub method2: SolverMethod,
    pub h2: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
}

impl CosimConfig {
    /// Internal step counts `(k1, k2)`.
    pub fn steps(&self) -> Result<(u32, u32), ModelError> {
        Ok((internal_steps(self.big_h, self.h1)?, internal_steps(self.big_h, self.h2)?))
    }
}

fn internal_steps(big: f64, small: f64) -> Result<u32, ModelError> {
    check_step(big)?;
    check_step(small)?;
    let k = (big / small).round();
    if k < 1.0 || ((big / small) - k).abs() > 1e-9 * k.max(1.0) {
        return Err(ModelError::NotDivisible { big, small });
    }
    Ok(k as u32)
}

/// Linear simulator `ẋ = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSimulator {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl LinearSimulator {
    pub fn states(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    fn check(&self, what: [&'static str; 4]) -> Result<(), ModelError> {
        let (n, m, p) = (self.states(), self.inputs(), self.outputs());
        for (w, mat, want) in [
            (what[0], &self.a, (n, n)),
            (what[1], &self.b, (n, m)),
            (what[2], &self.c, (p, n)),
            (what[3], &self.d, (p, m)),
        ] {
            if mat.shape() != want {
                return Err(ModelError::Shape {
                    what: w,
                    expected: want,
                    got: mat.shape(),
                });
            }
        }
        Ok(())
    }

    /// `[[A, B], [0, 0]]`: the dynamics with the input held constant.
    pub fn augmented(&self) -> Matrix {
        let (n, m) = (self.states(), self.inputs());
        let mut out = Matrix::zeros(n + m, n + m);
        out.set_block(0, 0, &self.a);
        out.set_block(0, n, &self.b);
        out
    }
}

/// Two simulators in feedback, `u1 = y2` and `u2 = y1`, with `D2 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledLinearPair {
    pub s1: LinearSimulator,
    pub s2: LinearSimulator,
}

impl CoupledLinearPair {
    pub fn new(s1: LinearSimulator, s2: LinearSimulator) -> Result<Self, ModelError> {
        s1.check(["A1", "B1", "C1", "D1"])?;
        s2.check(["A2", "B2", "C2", "D2"])?;
        if s1.inputs() != s2.outputs() {
            return Err(ModelError::Shape {
                what: "B1 columns vs C2 rows",
                expected: (s1.states(), s2.outputs()),
                got: s1.b.shape(),
            });
        }
        if s2.inputs() != s1.outputs() {
            return Err(ModelError::Shape {
                what: "B2 columns vs C1 rows",
                expected: (s2.states(), s1.outputs()),
                got: s2.b.shape(),
            });
        }
        if s2.d.as_slice().iter().any(|x| *x != 0.0) {
            return Err(ModelError::FeedthroughLoop);
        }
        Ok(Self { s1, s2 })
    }

    pub fn state_dim(&self) -> usize {
        self.s1.states() + self.s2.states()
    }

    /// Continuous-time matrix of the coupled system without sampling.
    pub fn monolithic(&self) -> Matrix {
        let (s1, s2) = (&self.s1, &self.s2);
        let (n1, n2) = (s1.states(), s2.states());
        let mut out = Matrix::zeros(n1 + n2, n1 + n2);
        out.set_block(0, 0, &s1.a);
        out.set_block(0, n1, &s1.b.mul_unchecked(&s2.c));
        out.set_block(n1, 0, &s2.b.mul_unchecked(&s1.c));
        let d1c2 = s1.d.mul_unchecked(&s2.c);
        out.set_block(n1, n1, &s2.a.add(&s2.b.mul_unchecked(&d1c2)).expect("checked shapes"));
        out
    }

    /// `Projection · blockdiag(P1, P2) · Embedding`, where `P_j` advances the
    /// augmented state of simulator `j` over one communication step.
    fn assemble(&self, p1: &Matrix, p2: &Matrix) -> Matrix {
        let (s1, s2) = (&self.s1, &self.s2);
        let (n1, m1, n2, m2) = (s1.states(), s1.inputs(), s2.states(), s2.inputs());
        let big = n1 + m1 + n2 + m2;
        let mut embed = Matrix::zeros(big, n1 + n2);
        embed.set_block(0, 0, &Matrix::identity(n1));
        embed.set_block(n1, n1, &s2.c);
        embed.set_block(n1 + m1, n1, &Matrix::identity(n2));
        embed.set_block(n1 + m1 + n2, 0, &s1.c);
        embed.set_block(n1 + m1 + n2, n1, &s1.d.mul_unchecked(&s2.c));
        let mut blocks = Matrix::zeros(big, big);
        blocks.set_block(0, 0, p1);
        blocks.set_block(n1 + m1, n1 + m1, p2);
        let mut proj = Matrix::zeros(n1 + n2, big);
        proj.set_block(0, 0, &Matrix::identity(n1));
        proj.set_block(n1, n1 + m1, &Matrix::identity(n2));
        proj.mul_unchecked(&blocks).mul_unchecked(&embed)
    }
}

/// `Ã_j = R_j(h_j [[A_j, B_j], [0, 0]])`, the one-step matrix on the
/// augmented state with zero-order-hold input.
pub fn augmented_solver_matrix(sim: &LinearSimulator, method: SolverMethod, h: f64) -> Result<Matrix, ModelError> {
    solver_matrix(method, h, &sim.augmented())
}

/// State transition matrix of one Jacobi co-simulation step.
pub fn cosim_step_matrix(pair: &CoupledLinearPair, cfg: &CosimConfig) -> Result<Matrix, ModelError> {
    let (k1, k2) = cfg.steps()?;
    let p1 = augmented_solver_matrix(&pair.s1, cfg.method1, cfg.h1)?.powi(k1)?;
    let p2 = augmented_solver_matrix(&pair.s2, cfg.method2, cfg.h2)?.powi(k2)?;
    Ok(pair.assemble(&p1, &p2))
}

/// As [`cosim_step_matrix`] with both simulators integrating exactly.
pub fn cosim_step_matrix_exact(pair: &CoupledLinearPair, big_h: f64) -> Result<Matrix, ModelError> {
    check_step(big_h)?;
    let p1 = linalg::mat_exp(&pair.s1.augmented(), big_h)?;
    let p2 = linalg::mat_exp(&pair.s2.augmented(), big_h)?;
    Ok(pair.assemble(&p1, &p2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    #[serde(rename = "M")]
    pub cart_mass: f64,
    pub m: f64,
    pub b: f64,
    #[serde(rename = "I")]
    pub inertia: f64,
    pub g: f64,
    pub l: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            cart_mass: 0.5,
            m: 0.2,
            b: 0.1,
            inertia: 0.006,
            g: 9.8,
            l: 0.3,
        }
    }
}

impl PendulumParams {
    /// `p = I(M + m) + M m l²`.
    pub fn p(&self) -> f64 {
        self.inertia * (self.cart_mass + self.m) + self.cart_mass * self.m * self.l * self.l
    }
}

/// State-feedback gain of the controller simulator.
pub const PENDULUM_GAIN: [f64; 4] = [1.0000, 1.6567, -18.6854, -3.4594];

/// Controller (no internal state, `y1 = K u1`) coupled with the linearized
/// cart-pendulum (`C2 = I`).
pub fn pendulum_pair(params: &PendulumParams) -> Result<CoupledLinearPair, ModelError> {
    let PendulumParams {
        cart_mass: big_m,
        m,
        b,
        inertia: i,
        g,
        l,
    } = *params;
    for v in [big_m, m, b, i, g, l] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ModelError::Reconstruction(format!("pendulum parameters must be positive, got {v}")));
        }
    }
    let p = params.p();
    let a2 = Matrix::from_rows(&[
        [0.0, 1.0, 0.0, 0.0],
        [0.0, -(i + m * l * l) * b / p, m * m * g * l * l / p, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, -(m * l * b) / p, m * g * l * (big_m + m) / p, 0.0],
    ])?;
    let b2 = Matrix::new(4, 1, vec![0.0, (i + m * l * l) / p, 0.0, m * l / p])?;
    let controller = LinearSimulator {
        a: Matrix::zeros(0, 0),
        b: Matrix::zeros(0, 4),
        c: Matrix::zeros(1, 0),
        d: Matrix::new(1, 4, PENDULUM_GAIN.to_vec())?,
    };
    let plant = LinearSimulator {
        a: a2,
        b: b2,
        c: Matrix::identity(4),
        d: Matrix::zeros(4, 1),
    };
    CoupledLinearPair::new(controller, plant)
}

/// Internal steps and communication steps of the pendulum study.
pub const PENDULUM_INTERNAL_STEPS: [f64; 4] = [0.01, 0.02, 0.1, 0.2];
pub const PENDULUM_COMM_STEPS: [f64; 2] = [0.1, 0.2];
pub const PENDULUM_METHODS: [SolverMethod; 2] = [SolverMethod::ForwardEuler, SolverMethod::Midpoint];

/// Pendulum-simulator setting of one mode. The controller has no dynamics,
/// so its solver is fixed to a single Forward Euler step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumMode {
    pub method: SolverMethod,
    pub h: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
}

impl PendulumMode {
    pub fn config(&self) -> CosimConfig {
        CosimConfig {
            method1: SolverMethod::ForwardEuler,
            h1: self.big_h,
            method2: self.method,
            h2: self.h,
            big_h: self.big_h,
        }
    }

    pub fn describe(&self) -> String {
        format!("H={} h={} {}", self.big_h, self.h, self.method.short_name())
    }
}

/// Every (method, internal step, communication step) with `h | H`.
pub fn pendulum_candidate_modes() -> Vec<PendulumMode> {
    let mut out = Vec::new();
    for big_h in PENDULUM_COMM_STEPS {
        for h in PENDULUM_INTERNAL_STEPS {
            if internal_steps(big_h, h).is_err() {
                continue;
            }
            for method in PENDULUM_METHODS {
                out.push(PendulumMode { method, h, big_h });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMapEntry {
    pub label: Symbol,
    #[serde(flatten)]
    pub mode: PendulumMode,
}

/// Frozen mode map with the record of how it was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMapFixture {
    pub schema: String,
    pub params: PendulumParams,
    pub modes: Vec<ModeMapEntry>,
    pub audit: serde_json::Value,
}

pub const MODE_MAP_SCHEMA: &str = "switchprune/pendulum-mode-map/v1";
const MODE_MAP_JSON: &str = include_str!("../fixtures/pendulum_modes.json");

pub fn pendulum_mode_map() -> Result<ModeMapFixture, ModelError> {
    let fx: ModeMapFixture = serde_json::from_str(MODE_MAP_JSON).map_err(|e| ModelError::Fixture(e.to_string()))?;
    if fx.schema != MODE_MAP_SCHEMA {
        return Err(ModelError::Fixture(format!("unexpected schema {}", fx.schema)));
    }
    for (i, e) in fx.modes.iter().enumerate() {
        if e.label as usize != i + 1 {
            return Err(ModelError::Fixture(format!("labels must be 1..={} in order", fx.modes.len())));
        }
    }
    Ok(fx)
}

#[derive(Debug, Clone)]
pub struct PendulumInstance {
    pub pair: CoupledLinearPair,
    pub modes: Vec<ModeMapEntry>,
    pub configs: Vec<CosimConfig>,
    pub spectral_radii: Vec<f64>,
    pub css: Css,
}

impl PendulumInstance {
    /// Labels of the modes with spectral radius above one.
    pub fn unstable_labels(&self) -> Vec<Symbol> {
        self.spectral_radii
            .iter()
            .enumerate()
            .filter(|(_, r)| **r > 1.0)
            .map(|(i, _)| i as Symbol + 1)
            .collect()
    }
}

/// Unconstrained switched system over the given pendulum modes.
pub fn pendulum_system(params: &PendulumParams, modes: &[PendulumMode]) -> Result<PendulumInstance, ModelError> {
    let pair = pendulum_pair(params)?;
    let configs: Vec<CosimConfig> = modes.iter().map(|m| m.config()).collect();
    let mats = configs
        .iter()
        .map(|c| cosim_step_matrix(&pair, c))
        .collect::<Result<Vec<_>, _>>()?;
    let spectral_radii = mats
        .iter()
        .map(linalg::spectral_radius)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PendulumInstance {
        pair,
        modes: modes
            .iter()
            .enumerate()
            .map(|(i, m)| ModeMapEntry {
                label: i as Symbol + 1,
                mode: *m,
            })
            .collect(),
        configs,
        spectral_radii,
        css: Css::unconstrained(mats)?,
    })
}

/// The 8-mode pendulum system under the frozen mode map. Fails unless
/// exactly three modes have spectral radius above one.
pub fn pendulum_instance() -> Result<PendulumInstance, ModelError> {
    let fx = pendulum_mode_map()?;
    let modes: Vec<PendulumMode> = fx.modes.iter().map(|e| e.mode).collect();
    let inst = pendulum_system(&fx.params, &modes)?;
    let unstable = inst.unstable_labels();
    if modes.len() != 8 || unstable.len() != 3 {
        return Err(ModelError::Reconstruction(format!(
            "expected 3 of 8 modes with spectral radius above one, got {} of {} (labels {:?})",
            unstable.len(),
            modes.len(),
            unstable
        )));
    }
    Ok(inst)
}

/// Words over `{1, 2}` without `k` consecutive 1s. Node `i` remembers the
/// current run of 1s.
pub fn no_k_run_language(k: usize) -> Result<Automaton, ModelError> {
    if k < 2 {
        return Err(ModelError::RunLength(k));
    }
    let mut edges = Vec::new();
    for i in 0..k {
        if i + 1 < k {
            edges.push(Edge::new(i, i + 1, 1));
        }
        edges.push(Edge::new(i, 0, 2));
    }
    let names = (0..k).map(|i| format!("run{i}")).collect();
    Ok(Automaton::new(names, 2, edges)?)
}

/// Three-node automaton over four symbols used in the worked examples.
pub fn figure4_fixture() -> Result<Automaton, ModelError> {
    let names = ["v1", "v2", "v3"].iter().map(|s| s.to_string()).collect();
    let e = Edge::new;
    let g = Automaton::new(
        names,
        4,
        vec![e(0, 1, 2), e(1, 0, 1), e(1, 1, 2), e(1, 2, 3), e(2, 2, 3), e(2, 0, 4)],
    )?;
    let without_12 = g.remove_edge(&e(0, 1, 2))?.perron_root();
    let without_23 = g.remove_edge(&e(1, 2, 3))?.perron_root();
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    if (without_12 - 1.0).abs() > 1e-9 || (without_23 - golden).abs() > 1e-9 {
        return Err(ModelError::Reconstruction(format!(
            "fixture roots {without_12} and {without_23}, expected 1 and {golden}"
        )));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_solver_matrices() {
        let a = Matrix::scalar(-1.0);
        assert_eq!(solver_matrix(SolverMethod::ForwardEuler, 1.0, &a).unwrap()[(0, 0)], 0.0);
        assert_eq!(solver_matrix(SolverMethod::Midpoint, 1.0, &a).unwrap()[(0, 0)], 0.5);
        let z: f64 = -0.3;
        let rk = solver_matrix(SolverMethod::RungeKutta4, 1.0, &Matrix::scalar(z)).unwrap()[(0, 0)];
        let series: f64 = (0..=4).map(|i| z.powi(i) / (1..=i).product::<i32>().max(1) as f64).sum();
        assert!((rk - series).abs() < 1e-15);
        let lit = solver_matrix(SolverMethod::RungeKutta4Literal, 1.0, &Matrix::scalar(z)).unwrap()[(0, 0)];
        assert!((lit - (series - z * z / 2.0 + z * z / 12.0)).abs() < 1e-15);
        assert!(solver_matrix(SolverMethod::Midpoint, 0.0, &a).is_err());
    }

    #[test]
    fn stability_function_matches_scalar_solver() {
        for m in [SolverMethod::ForwardEuler, SolverMethod::Midpoint, SolverMethod::RungeKutta4] {
            let (re, im) = m.stability_function((-0.7, 0.0));
            let s = solver_matrix(m, 0.7, &Matrix::scalar(-1.0)).unwrap()[(0, 0)];
            assert!((re - s).abs() < 1e-15 && im == 0.0);
        }
        assert_eq!(hybrid_magnitude(&[SolverMethod::ForwardEuler], (-1.0, 0.0)), 0.0);
        assert!((hybrid_magnitude(&[SolverMethod::ForwardEuler], (-2.0, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_layout() {
        let g = stability_domain_grid(&[SolverMethod::ForwardEuler], (-2.0, 0.0), (-1.0, 1.0), 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!((g[0].re, g[0].im), (-2.0, -1.0));
        assert_eq!((g[4].re, g[4].im), (-1.0, 0.0));
        assert!(g[4].stable);
        assert!(stability_domain_grid(&[SolverMethod::Midpoint], (0.0, 1.0), (0.0, 1.0), 1).is_err());
    }

    #[test]
    fn error_system_local_errors() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [-4.0, -0.5]]).unwrap();
        let es = error_system(
            &a,
            &[
                (SolverMethod::ForwardEuler, 0.001),
                (SolverMethod::Midpoint, 0.001),
                (SolverMethod::RungeKutta4, 0.002),
            ],
        )
        .unwrap();
        assert_eq!(es.css.modes().len(), 3);
        // Local error shrinks with the order of the method.
        let sizes: Vec<f64> = es.local_errors.iter().map(|l| l.norm_fro()).collect();
        assert!(sizes[0] > sizes[1] && sizes[1] > sizes[2]);
        assert!(sizes[2] < 1e-12);
    }

    #[test]
    fn divisibility_and_shapes() {
        let cfg = CosimConfig {
            method1: SolverMethod::ForwardEuler,
            h1: 0.1,
            method2: SolverMethod::Midpoint,
            h2: 0.03,
            big_h: 0.1,
        };
        assert!(matches!(cfg.steps(), Err(ModelError::NotDivisible { .. })));
        let ok = CosimConfig { h2: 0.02, ..cfg };
        assert_eq!(ok.steps().unwrap(), (1, 5));
        let pair = pendulum_pair(&PendulumParams::default()).unwrap();
        assert_eq!(cosim_step_matrix(&pair, &ok).unwrap().shape(), (4, 4));
        let mut bad = pair.clone();
        bad.s2.d = Matrix::from_rows(&[[1.0], [0.0], [0.0], [0.0]]).unwrap();
        assert!(matches!(
            CoupledLinearPair::new(bad.s1, bad.s2),
            Err(ModelError::FeedthroughLoop)
        ));
    }

    #[test]
    fn pendulum_composite() {
        assert!((PendulumParams::default().p() - 0.0132).abs() < 1e-15);
    }

    #[test]
    fn zoh_rows_hold_the_input() {
        let pair = pendulum_pair(&PendulumParams::default()).unwrap();
        for m in pendulum_candidate_modes() {
            let at = augmented_solver_matrix(&pair.s2, m.method, m.h).unwrap();
            for j in 0..5 {
                assert_eq!(at[(4, j)], if j == 4 { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn run_language_sizes() {
        let g = no_k_run_language(2).unwrap();
        assert_eq!(g.node_count(), 2);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((g.perron_root() - golden).abs() < 1e-9);
        assert!(no_k_run_language(1).is_err());
    }

    #[test]
    fn figure4_validates() {
        let g = figure4_fixture().unwrap();
        assert!(g.accepts(&"234".parse().unwrap()));
    }
}
