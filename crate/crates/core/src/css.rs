//! Constrained switched systems `x_{k+1} = A_{σ_k} x_k` whose switching
//! words are the words accepted by an automaton.
//!
//! Products are ordered right to left: the word `σ0 σ1 … σ(k-1)` induces
//! `A_{σ(k-1)} ⋯ A_{σ1} A_{σ0}`, so the first symbol acts first.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Automaton, Cycle, NodeSet, Symbol, Word};
use crate::budget::{Budget, BudgetExceeded};
use crate::linalg::{self, LinalgError, Matrix, NormKind};
use crate::nodenorm::{self, NodeFactor};

/// Certification succeeds only for values below `1 - ADMISSIBILITY_MARGIN`.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CssError {
    #[error("a switched system needs at least one mode")]
    NoModes,
    #[error("mode {index} is {rows}x{cols}, expected {n}x{n}")]
    ModeShape {
        index: usize,
        rows: usize,
        cols: usize,
        n: usize,
    },
    #[error("automaton uses {graph} symbols but there are {modes} modes")]
    SymbolMismatch { graph: Symbol, modes: usize },
    #[error("word {0} is not accepted by the automaton")]
    NotAccepted(Word),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("no norm given for node {0}")]
    MissingNodeNorm(String),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Mode matrices together with the automaton constraining their order.
#[derive(Debug, Clone, PartialEq)]
pub struct Css {
    modes: Vec<Matrix>,
    graph: Automaton,
}

impl Css {
    pub fn new(modes: Vec<Matrix>, graph: Automaton) -> Result<Self, CssError> {
        let first = modes.first().ok_or(CssError::NoModes)?;
        let n = first.rows();
        for (index, a) in modes.iter().enumerate() {
            if a.rows() != n || a.cols() != n {
                return Err(CssError::ModeShape {
                    index,
                    rows: a.rows(),
                    cols: a.cols(),
                    n,
                });
            }
        }
        if graph.m() as usize != modes.len() {
            return Err(CssError::SymbolMismatch {
                graph: graph.m(),
                modes: modes.len(),
            });
        }
        Ok(Self { modes, graph })
    }

    /// Unconstrained system: every word over `1..=m` is allowed.
    pub fn unconstrained(modes: Vec<Matrix>) -> Result<Self, CssError> {
        let m = modes.len() as Symbol;
        Self::new(modes, Automaton::full_shift(m))
    }

    pub fn modes(&self) -> &[Matrix] {
        &self.modes
    }

    pub fn mode(&self, a: Symbol) -> &Matrix {
        &self.modes[a as usize - 1]
    }

    pub fn graph(&self) -> &Automaton {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.modes[0].rows()
    }

    pub fn with_graph(&self, graph: Automaton) -> Result<Css, CssError> {
        Css::new(self.modes.clone(), graph)
    }

    /// `A_w` for an accepted word.
    pub fn induced_product(&self, w: &Word) -> Result<Matrix, CssError> {
        if !self.graph.accepts(w) {
            return Err(CssError::NotAccepted(w.clone()));
        }
        Ok(self.product(w.symbols()))
    }

    /// `A_w` without checking acceptance. Symbols must lie in `1..=m`.
    pub fn product(&self, w: &[Symbol]) -> Matrix {
        let mut p = Matrix::identity(self.dim());
        for &a in w {
            p = self.mode(a).mul_unchecked(&p);
        }
        p
    }

    /// `ρ(A_c)^{1/|c|}`.
    pub fn growth(&self, w: &Word) -> Result<f64, CssError> {
        if w.is_empty() {
            return Err(CssError::ZeroDepth);
        }
        let rho = linalg::spectral_radius(&self.product(w.symbols()))?;
        Ok(rho.powf(1.0 / w.len() as f64))
    }

    /// Norms worth trying for certification: the plain 2-norm, then
    /// quadratic norms from the Lyapunov solution of each stable mode used
    /// by the automaton, then one for the mean of those modes.
    pub fn norm_candidates(&self) -> Vec<MatrixNorm> {
        let mut out = vec![MatrixNorm::Spectral];
        let mut used: Vec<Symbol> = self.graph.edges().iter().map(|e| e.label).collect();
        used.sort_unstable();
        used.dedup();
        let stable: Vec<Symbol> = used
            .into_iter()
            .filter(|a| linalg::spectral_radius(self.mode(*a)).is_ok_and(|r| r < 1.0))
            .collect();
        for a in &stable {
            if let Some(norm) = MatrixNorm::lyapunov(self.mode(*a), format!("lyapunov(mode {a})")) {
                out.push(norm);
            }
        }
        if stable.len() > 1 {
            let n = self.dim();
            let mut mean = Matrix::zeros(n, n);
            for a in &stable {
                mean = mean.add(self.mode(*a)).expect("modes share a shape");
            }
            let mean = mean.scale(1.0 / stable.len() as f64);
            if let Some(norm) = MatrixNorm::lyapunov(&mean, "lyapunov(mean of stable modes)".into()) {
                out.push(norm);
            }
        }
        out
    }

    /// `max_{w ∈ G_k} ‖A_w‖^{1/k}`, exactly, by branch and bound.
    pub fn rho_hat_k(&self, k: usize, norm: &MatrixNorm, budget: &mut Budget) -> Result<f64, CssError> {
        if k == 0 {
            return Err(CssError::ZeroDepth);
        }
        if self.graph.node_count() == 0 {
            return Ok(0.0);
        }
        let best = self.search(k, norm, Goal::Maximize, budget)?;
        Ok(best.value.powf(1.0 / k as f64))
    }

    /// `max` over closed walks of length `k` of `ρ(A_c)^{1/k}`, with a witness.
    pub fn rho_lower_k(&self, k: usize, budget: &mut Budget) -> Result<LowerBound, CssError> {
        if k == 0 {
            return Err(CssError::ZeroDepth);
        }
        let mut best = LowerBound {
            value: 0.0,
            witness: None,
        };
        for w in self.graph.cycle_words_k(k, budget)? {
            let g = self.growth(&w)?;
            if best.witness.is_none() || g > best.value {
                best = LowerBound {
                    value: g,
                    witness: self.graph.find_cycle(&w),
                };
            }
        }
        Ok(best)
    }

    /// Both bounds at depth `k`.
    pub fn bounds_k(&self, k: usize, norm: &MatrixNorm, budget: &mut Budget) -> Result<BoundReport, CssError> {
        let upper = self.rho_hat_k(k, norm, budget)?;
        let lower = self.rho_lower_k(k, budget)?;
        Ok(BoundReport {
            k,
            upper,
            lower: lower.value,
            witness_cycle: lower.witness,
        })
    }

    /// Decides whether `ρ̂_k < threshold` in the given norm. Stops at the
    /// first accepted word whose product norm reaches `threshold^k`.
    pub fn check_depth(
        &self,
        k: usize,
        norm: &MatrixNorm,
        threshold: f64,
        budget: &mut Budget,
    ) -> Result<DepthCheck, CssError> {
        if k == 0 {
            return Err(CssError::ZeroDepth);
        }
        if self.graph.node_count() == 0 {
            return Ok(DepthCheck::Below { bound: 0.0 });
        }
        let out = self.search(k, norm, Goal::Below(threshold.powi(k as i32)), budget)?;
        Ok(match out.violation {
            Some(word) => DepthCheck::Reached {
                word,
                value: out.value.powf(1.0 / k as f64),
            },
            None => DepthCheck::Below {
                bound: out.value.powf(1.0 / k as f64),
            },
        })
    }

    fn search(&self, k: usize, norm: &MatrixNorm, goal: Goal, budget: &mut Budget) -> Result<Outcome, CssError> {
        match norm {
            MatrixNorm::PerNode { nodes } => PathSearch::new(self, nodes, k)?.run(goal, budget),
            _ => Ok(Search::new(self, norm, k).run(goal, budget)?),
        }
    }

    /// A node-dependent quadratic norm fitted to this automaton, when the
    /// barrier solver finds one with a positive margin. It is only a
    /// candidate; check it with [`Css::check_depth`].
    pub fn node_norm_candidate(&self) -> Option<MatrixNorm> {
        nodenorm::synthesize(&self.graph, &self.modes).map(|nodes| MatrixNorm::PerNode { nodes })
    }

    /// The system restricted to [`Automaton::core`]. Every accepted word
    /// crosses between strong components a bounded number of times, so the
    /// core has the same constrained joint spectral radius.
    pub fn core(&self) -> Css {
        Css {
            modes: self.modes.clone(),
            graph: self.graph.core(),
        }
    }

    /// Looks for `k ≤ k_max` and a norm among `norms` with
    /// `ρ̂_k < 1 - ADMISSIBILITY_MARGIN` on the core. `None` means not
    /// certified, which does not imply instability.
    pub fn certify_admissible(
        &self,
        k_max: usize,
        norms: &[MatrixNorm],
        budget: &mut Budget,
    ) -> Result<Option<Certificate>, CssError> {
        let threshold = 1.0 - ADMISSIBILITY_MARGIN;
        let core = self.core();
        for k in 1..=k_max {
            for norm in norms {
                if let DepthCheck::Below { bound } = core.check_depth(k, norm, threshold, budget)? {
                    return Ok(Some(Certificate {
                        k,
                        norm: norm.clone(),
                        value: bound,
                    }));
                }
            }
        }
        Ok(None)
    }

    /// Re-checks a certificate from scratch.
    pub fn verify_certificate(&self, cert: &Certificate, budget: &mut Budget) -> Result<bool, CssError> {
        if !cert.norm.is_consistent() {
            return Ok(false);
        }
        let value = self.core().rho_hat_k(cert.k, &cert.norm, budget)?;
        Ok(value < 1.0 - ADMISSIBILITY_MARGIN)
    }
}

/// Lower bound with the closed walk attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    pub witness: Option<Cycle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub k: usize,
    pub upper: f64,
    pub lower: f64,
    pub witness_cycle: Option<Cycle>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DepthCheck {
    /// Every accepted product of length `k` has norm below the threshold;
    /// `bound` is an upper bound on `ρ̂_k`.
    Below { bound: f64 },
    /// `word` has `‖A_word‖^{1/k} = value ≥ threshold`.
    Reached { word: Word, value: f64 },
}

/// Stability certificate: `ρ̂_k < 1 - ADMISSIBILITY_MARGIN` in `norm`, for
/// the system restricted to its core (see [`Css::core`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub k: usize,
    pub norm: MatrixNorm,
    /// Upper bound on `ρ̂_k` in that norm.
    pub value: f64,
}

/// Sub-multiplicative matrix norm used for the upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixNorm {
    Spectral,
    Frobenius,
    /// `‖A‖ = ‖T A T⁻¹‖₂`, the norm induced by the vector norm `x ↦ ‖T x‖₂`.
    Weighted {
        basis: String,
        t: Matrix,
        t_inv: Matrix,
    },
    /// One weighted norm per automaton node, matched by node name. A
    /// product is measured along its path: `‖T_end A_w T_start⁻¹‖₂`.
    PerNode { nodes: Vec<NodeFactor> },
}

impl MatrixNorm {
    /// Norm induced by `x ↦ √(xᵀ P x)` where `P = I + AᵀPA`.
    pub fn lyapunov(a: &Matrix, basis: String) -> Option<MatrixNorm> {
        let p = linalg::discrete_lyapunov(a, &Matrix::identity(a.rows()))?;
        let l = linalg::cholesky(&p).ok()?;
        let t = l.transpose();
        let t_inv = linalg::inverse(&t).ok()?;
        Some(MatrixNorm::Weighted { basis, t, t_inv })
    }

    pub fn label(&self) -> String {
        match self {
            MatrixNorm::Spectral => "spectral".into(),
            MatrixNorm::Frobenius => "frobenius".into(),
            MatrixNorm::Weighted { basis, .. } => basis.clone(),
            MatrixNorm::PerNode { .. } => "node-quadratic".into(),
        }
    }

    /// For [`MatrixNorm::PerNode`], the worst case over all pairs of nodes.
    pub fn eval(&self, a: &Matrix) -> f64 {
        match self {
            MatrixNorm::PerNode { nodes } => nodes
                .iter()
                .flat_map(|u| nodes.iter().map(move |v| u.t.mul_unchecked(a).mul_unchecked(&v.t_inv).norm_2()))
                .fold(0.0, f64::max),
            MatrixNorm::Spectral => a.norm_2(),
            MatrixNorm::Frobenius => a.norm_fro(),
            MatrixNorm::Weighted { t, t_inv, .. } => t.mul_unchecked(a).mul_unchecked(t_inv).norm_2(),
        }
    }

    /// For weighted norms, `T T⁻¹ ≈ I`.
    pub fn is_consistent(&self) -> bool {
        match self {
            MatrixNorm::Weighted { t, t_inv, .. } => inverse_pair(t, t_inv),
            MatrixNorm::PerNode { nodes } => nodes.iter().all(|f| inverse_pair(&f.t, &f.t_inv)),
            _ => true,
        }
    }

    /// Modes expressed so that the plain norm of `kind` applies.
    /// [`MatrixNorm::PerNode`] goes through [`PathSearch`] instead.
    fn transform(&self, modes: &[Matrix]) -> (Vec<Matrix>, NormKind) {
        match self {
            MatrixNorm::Spectral | MatrixNorm::PerNode { .. } => (modes.to_vec(), NormKind::Spectral),
            MatrixNorm::Frobenius => (modes.to_vec(), NormKind::Frobenius),
            MatrixNorm::Weighted { t, t_inv, .. } => (
                modes
                    .iter()
                    .map(|a| t.mul_unchecked(a).mul_unchecked(t_inv))
                    .collect(),
                NormKind::Spectral,
            ),
        }
    }
}

fn inverse_pair(t: &Matrix, t_inv: &Matrix) -> bool {
    t.is_square()
        && t.shape() == t_inv.shape()
        && t.matmul(t_inv)
            .map(|p| p.max_abs_diff(&Matrix::identity(t.rows())) < 1e-9)
            .unwrap_or(false)
}

#[derive(Clone, Copy)]
enum Goal {
    Maximize,
    /// Stop as soon as a product norm reaches this value (already raised to `k`).
    Below(f64),
}

struct Outcome {
    /// Maximizing: the maximum of `‖A_w‖`. Deciding: an upper bound on it,
    /// or the offending value.
    value: f64,
    violation: Option<Word>,
}

struct Search<'a> {
    graph: &'a Automaton,
    modes: Vec<Matrix>,
    kind: NormKind,
    k: usize,
    // suffix[r][v]: bound on ‖A_p‖ over paths p of length r leaving v
    suffix: Vec<Vec<f64>>,
}

impl<'a> Search<'a> {
    fn new(css: &'a Css, norm: &MatrixNorm, k: usize) -> Self {
        let (modes, kind) = norm.transform(&css.modes);
        let graph = &css.graph;
        let suffix = suffix_bounds(graph, &modes, kind, k);
        Self {
            graph,
            modes,
            kind,
            k,
            suffix,
        }
    }

    fn run(&self, goal: Goal, budget: &mut Budget) -> Result<Outcome, BudgetExceeded> {
        let mut state = State {
            goal,
            best: 0.0,
            pruned: 0.0,
            violation: None,
            prefix: Vec::with_capacity(self.k),
        };
        let n = self.modes[0].rows();
        self.dfs(&self.graph.all_nodes(), &Matrix::identity(n), &mut state, budget)?;
        let value = match (goal, &state.violation) {
            (Goal::Below(_), None) => state.best.max(state.pruned),
            _ => state.best,
        };
        Ok(Outcome {
            value,
            violation: state.violation.map(Word),
        })
    }

    fn bound(&self, s: &NodeSet, r: usize) -> f64 {
        s.iter().map(|v| self.suffix[r][v]).fold(0.0, f64::max)
    }

    fn dfs(&self, s: &NodeSet, p: &Matrix, st: &mut State, budget: &mut Budget) -> Result<bool, BudgetExceeded> {
        budget.spend(1)?;
        let depth = st.prefix.len();
        let remaining = self.k - depth - 1;
        let mut children = Vec::new();
        for a in self.graph.symbols() {
            let next = self.graph.step_set(s, a);
            if next.is_empty() {
                continue;
            }
            let q = self.modes[a as usize - 1].mul_unchecked(p);
            let tail = self.bound(&next, remaining);
            let cheap = q.norm_fro() * tail;
            let cutoff = st.cutoff();
            if self.kind == NormKind::Spectral && cheap < cutoff {
                st.prune(cheap);
                continue;
            }
            let exact = self.kind.eval(&q);
            let ub = exact * tail;
            if ub < cutoff || (matches!(st.goal, Goal::Maximize) && ub <= st.best) {
                st.prune(ub);
                continue;
            }
            children.push((ub, exact, a, next, q));
        }
        children.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.2.cmp(&y.2)));
        for (ub, exact, a, next, q) in children {
            if remaining == 0 {
                st.best = st.best.max(exact);
                if let Goal::Below(thr) = st.goal {
                    if exact >= thr {
                        st.prefix.push(a);
                        st.violation = Some(st.prefix.clone());
                        return Ok(true);
                    }
                }
                continue;
            }
            // The incumbent may have improved since this child was scored.
            if ub < st.cutoff() || (matches!(st.goal, Goal::Maximize) && ub <= st.best) {
                st.prune(ub);
                continue;
            }
            st.prefix.push(a);
            if self.dfs(&next, &q, st, budget)? {
                return Ok(true);
            }
            st.prefix.pop();
        }
        Ok(false)
    }
}

struct State {
    goal: Goal,
    best: f64,
    pruned: f64,
    violation: Option<Vec<Symbol>>,
    prefix: Vec<Symbol>,
}

impl State {
    fn cutoff(&self) -> f64 {
        match self.goal {
            Goal::Maximize => self.best,
            Goal::Below(thr) => thr,
        }
    }

    fn prune(&mut self, ub: f64) {
        self.pruned = self.pruned.max(ub);
    }
}

/// Depth-first search over paths for [`MatrixNorm::PerNode`]. Each edge
/// `v --a--> u` carries `T_u A_a T_v⁻¹`, so the norm of a path product is
/// the 2-norm of the product of its edge matrices.
struct PathSearch {
    // out[v]: (label, dst, transformed matrix)
    out: Vec<Vec<(Symbol, usize, Matrix)>>,
    k: usize,
    n: usize,
    // suffix[r][v]: bound on path products of length r leaving v
    suffix: Vec<Vec<f64>>,
}

impl PathSearch {
    fn new(css: &Css, nodes: &[NodeFactor], k: usize) -> Result<Self, CssError> {
        let g = &css.graph;
        let mut factor = Vec::with_capacity(g.node_count());
        for v in 0..g.node_count() {
            let name = g.name(v);
            let f = nodes
                .iter()
                .find(|f| f.node == name)
                .ok_or_else(|| CssError::MissingNodeNorm(name.to_string()))?;
            if f.t.shape() != (css.dim(), css.dim()) || f.t_inv.shape() != f.t.shape() {
                return Err(CssError::MissingNodeNorm(name.to_string()));
            }
            factor.push(f);
        }
        let out: Vec<Vec<(Symbol, usize, Matrix)>> = (0..g.node_count())
            .map(|v| {
                g.out_edges(v)
                    .iter()
                    .map(|e| {
                        let b = factor[e.dst]
                            .t
                            .mul_unchecked(css.mode(e.label))
                            .mul_unchecked(&factor[v].t_inv);
                        (e.label, e.dst, b)
                    })
                    .collect()
            })
            .collect();
        let mut suffix = vec![vec![1.0; out.len()]];
        for r in 1..=k {
            let row = out
                .iter()
                .map(|es| es.iter().map(|(_, u, b)| b.norm_2() * suffix[r - 1][*u]).fold(0.0, f64::max))
                .collect();
            suffix.push(row);
        }
        Ok(Self {
            out,
            k,
            n: css.dim(),
            suffix,
        })
    }

    fn run(&self, goal: Goal, budget: &mut Budget) -> Result<Outcome, CssError> {
        let mut state = State {
            goal,
            best: 0.0,
            pruned: 0.0,
            violation: None,
            prefix: Vec::with_capacity(self.k),
        };
        let id = Matrix::identity(self.n);
        for v in 0..self.out.len() {
            if self.dfs(v, &id, &mut state, budget)? {
                break;
            }
        }
        let value = match (goal, &state.violation) {
            (Goal::Below(_), None) => state.best.max(state.pruned),
            _ => state.best,
        };
        Ok(Outcome {
            value,
            violation: state.violation.map(Word),
        })
    }

    fn dfs(&self, v: usize, p: &Matrix, st: &mut State, budget: &mut Budget) -> Result<bool, BudgetExceeded> {
        budget.spend(1)?;
        let remaining = self.k - st.prefix.len() - 1;
        for (a, u, b) in &self.out[v] {
            let q = b.mul_unchecked(p);
            let exact = q.norm_2();
            let ub = exact * self.suffix[remaining][*u];
            if ub < st.cutoff() || (matches!(st.goal, Goal::Maximize) && ub <= st.best) {
                st.prune(ub);
                continue;
            }
            st.prefix.push(*a);
            if remaining == 0 {
                st.best = st.best.max(exact);
                if let Goal::Below(thr) = st.goal {
                    if exact >= thr {
                        st.violation = Some(st.prefix.clone());
                        return Ok(true);
                    }
                }
            } else if self.dfs(*u, &q, st, budget)? {
                return Ok(true);
            }
            st.prefix.pop();
        }
        Ok(false)
    }
}

/// Per-node bounds on the norm of any product along a path of length `r`,
/// built from exact norms of one- and two-step products and
/// sub-multiplicativity.
fn suffix_bounds(g: &Automaton, modes: &[Matrix], kind: NormKind, k: usize) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mode_norm: Vec<f64> = modes.iter().map(|a| kind.eval(a)).collect();
    // Two-step moves from each node: (norm of A_b A_a, end node).
    let mut two: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
    let mut pair_norm = std::collections::HashMap::new();
    for v in 0..n {
        for e1 in g.out_edges(v) {
            for e2 in g.out_edges(e1.dst) {
                let key = (e1.label, e2.label);
                let nv = *pair_norm.entry(key).or_insert_with(|| {
                    kind.eval(&modes[e2.label as usize - 1].mul_unchecked(&modes[e1.label as usize - 1]))
                });
                two[v].push((nv, e2.dst));
            }
        }
    }
    let mut sb = vec![vec![1.0; n]];
    for r in 1..=k {
        let mut row = vec![0.0; n];
        for v in 0..n {
            let one = g
                .out_edges(v)
                .iter()
                .map(|e| mode_norm[e.label as usize - 1] * sb[r - 1][e.dst])
                .fold(0.0, f64::max);
            let b = if r >= 2 {
                let t = two[v].iter().map(|(nv, u)| nv * sb[r - 2][*u]).fold(0.0, f64::max);
                one.min(t)
            } else {
                one
            };
            row[v] = b;
        }
        sb.push(row);
    }
    sb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::Edge;

    fn scalar_css(values: &[f64]) -> Css {
        Css::unconstrained(values.iter().map(|v| Matrix::scalar(*v)).collect()).unwrap()
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    /// Brute-force reference: every accepted word, no pruning.
    fn brute_rho_hat(css: &Css, k: usize, norm: &MatrixNorm) -> f64 {
        let words = css.graph().words_k(k, &mut Budget::unlimited()).unwrap();
        words
            .iter()
            .map(|x| norm.eval(&css.product(x.symbols())))
            .fold(0.0, f64::max)
            .powf(1.0 / k as f64)
    }

    #[test]
    fn rejects_inconsistent_systems() {
        assert_eq!(Css::new(vec![], Automaton::full_shift(1)), Err(CssError::NoModes));
        let bad = Css::new(vec![Matrix::identity(2), Matrix::identity(3)], Automaton::full_shift(2));
        assert!(matches!(bad, Err(CssError::ModeShape { index: 1, .. })));
        let mismatch = Css::new(vec![Matrix::identity(2)], Automaton::full_shift(2));
        assert!(matches!(mismatch, Err(CssError::SymbolMismatch { .. })));
    }

    #[test]
    fn induced_product_examples() {
        let css = scalar_css(&[2.0, 0.5]);
        assert_eq!(css.induced_product(&w("1")).unwrap(), Matrix::scalar(2.0));
        assert_eq!(css.induced_product(&w("12")).unwrap(), Matrix::scalar(1.0));
        let a = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0]]).unwrap();
        let css = Css::unconstrained(vec![a.clone(), b.clone()]).unwrap();
        // first symbol acts first
        assert_eq!(css.induced_product(&w("12")).unwrap(), b.matmul(&a).unwrap());
        let g = Automaton::with_node_count(1, 2, vec![Edge::new(0, 0, 1)]).unwrap();
        let constrained = Css::new(vec![a, b], g).unwrap();
        assert!(matches!(
            constrained.induced_product(&w("2")),
            Err(CssError::NotAccepted(_))
        ));
    }

    #[test]
    fn rho_hat_examples() {
        let mut b = Budget::default();
        let half = scalar_css(&[0.5]);
        for k in 1..5 {
            assert!((half.rho_hat_k(k, &MatrixNorm::Spectral, &mut b).unwrap() - 0.5).abs() < 1e-12);
        }
        let ex1 = scalar_css(&[2.0, 0.5]);
        assert_eq!(ex1.rho_hat_k(1, &MatrixNorm::Spectral, &mut b).unwrap(), 2.0);
    }

    #[test]
    fn rho_hat_matches_brute_force() {
        let a = Matrix::from_rows(&[[0.6, 0.9], [-0.2, 0.3]]).unwrap();
        let b2 = Matrix::from_rows(&[[0.1, -0.4], [0.8, 0.7]]).unwrap();
        let c = Matrix::from_rows(&[[-0.5, 0.2], [0.3, -0.9]]).unwrap();
        let g = Automaton::with_node_count(
            2,
            3,
            vec![Edge::new(0, 0, 1), Edge::new(0, 1, 2), Edge::new(1, 0, 3), Edge::new(1, 1, 2)],
        )
        .unwrap();
        let css = Css::new(vec![a, b2, c], g).unwrap();
        for norm in css.norm_candidates() {
            for k in 1..=7 {
                let got = css.rho_hat_k(k, &norm, &mut Budget::default()).unwrap();
                let want = brute_rho_hat(&css, k, &norm);
                assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{k} {got} {want}");
            }
        }
    }

    #[test]
    fn lower_bound_examples() {
        let mut b = Budget::default();
        let two = scalar_css(&[2.0]);
        let lb = two.rho_lower_k(1, &mut b).unwrap();
        assert_eq!(lb.value, 2.0);
        assert_eq!(lb.witness.unwrap().word, w("1"));
        let empty = Css::new(vec![Matrix::scalar(2.0)], Automaton::empty(1)).unwrap();
        let lb = empty.rho_lower_k(3, &mut b).unwrap();
        assert_eq!(lb.value, 0.0);
        assert!(lb.witness.is_none());
        assert_eq!(empty.rho_hat_k(3, &MatrixNorm::Spectral, &mut b).unwrap(), 0.0);
    }

    #[test]
    fn certification_examples() {
        let mut b = Budget::default();
        let stable = Css::unconstrained(vec![Matrix::diag(&[0.5, 0.2]), Matrix::diag(&[-0.3, 0.8])]).unwrap();
        let cert = stable
            .certify_admissible(3, &stable.norm_candidates(), &mut b)
            .unwrap()
            .unwrap();
        assert_eq!(cert.k, 1);
        assert!(stable.verify_certificate(&cert, &mut b).unwrap());
        let ex1 = scalar_css(&[2.0, 0.5]);
        assert!(ex1
            .certify_admissible(8, &ex1.norm_candidates(), &mut b)
            .unwrap()
            .is_none());
    }

    #[test]
    fn weighted_norm_certifies_non_normal_mode() {
        // ρ = 0.5 but ‖A‖₂ > 1 for every small power.
        let a = Matrix::from_rows(&[[0.5, 10.0], [0.0, 0.5]]).unwrap();
        let css = Css::unconstrained(vec![a]).unwrap();
        let mut b = Budget::default();
        assert!(css
            .certify_admissible(3, &[MatrixNorm::Spectral], &mut b)
            .unwrap()
            .is_none());
        let cert = css
            .certify_admissible(3, &css.norm_candidates(), &mut b)
            .unwrap()
            .unwrap();
        assert!(matches!(cert.norm, MatrixNorm::Weighted { .. }));
        assert!(css.verify_certificate(&cert, &mut b).unwrap());
    }

    #[test]
    fn depth_check_reports_offending_word() {
        let css = scalar_css(&[0.5, 1.5]);
        let out = css
            .check_depth(3, &MatrixNorm::Spectral, 1.0, &mut Budget::default())
            .unwrap();
        match out {
            DepthCheck::Reached { word, value } => {
                assert_eq!(word, w("222"));
                assert!((value - 1.5).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn budget_is_enforced() {
        let css = Css::unconstrained(vec![Matrix::identity(2); 3]).unwrap();
        let r = css.rho_hat_k(12, &MatrixNorm::Frobenius, &mut Budget::new(50));
        assert!(matches!(r, Err(CssError::Budget(_))));
    }

    #[test]
    fn transient_gain_does_not_block_certification() {
        // Two contracting loops joined by a path through an expanding mode:
        // ρ̂_k over all words stays above 1 until k = 9, the core is stable at once.
        let e = Edge::new;
        let g = Automaton::with_node_count(
            3,
            3,
            vec![e(0, 0, 1), e(1, 0, 1), e(1, 0, 2), e(2, 1, 1), e(2, 1, 2), e(2, 1, 3), e(2, 2, 3)],
        )
        .unwrap();
        let css = Css::new(vec![Matrix::scalar(0.8), Matrix::scalar(2.0), Matrix::scalar(0.8)], g).unwrap();
        let mut b = Budget::default();
        assert!(css.rho_hat_k(8, &MatrixNorm::Spectral, &mut b).unwrap() > 1.0);
        assert_eq!(css.core().graph().edge_count(), 2);
        let cert = css
            .certify_admissible(1, &[MatrixNorm::Spectral], &mut b)
            .unwrap()
            .unwrap();
        assert_eq!(cert.k, 1);
        assert!((cert.value - 0.8).abs() < 1e-12);
        assert!(css.verify_certificate(&cert, &mut b).unwrap());
    }
}
