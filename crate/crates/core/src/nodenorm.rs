//! Node-dependent quadratic norms.
//!
//! One positive definite `P_v` per automaton node, with
//! `A_aᵀ P_u A_a ≺ P_v` on every edge `v --a--> u`, makes every accepted
//! product contract in the norms `x ↦ √(xᵀ P_v x)` read along its path.
//! Such a family can exist when no single norm works.
//!
//! The `P_v` come from a log-barrier interior point method on
//!
//! ```text
//! maximize t  subject to  P_v − A_aᵀ P_u A_a ⪰ t I   for each edge,
//!                         P_v ⪰ 0,   Σ_v tr P_v ≤ c.
//! ```
//!
//! The solver only proposes the matrices. Whether they certify anything is
//! decided afterwards from the exact per-edge norms.

use serde::{Deserialize, Serialize};

use crate::automaton::Automaton;
use crate::linalg::{self, Matrix};

/// `P_v = TᵀT` for the node called `node`.
///
/// The trace bound only fixes the scale; `t > 0` forces every `P_v ≻ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFactor {
    pub node: String,
    pub t: Matrix,
    pub t_inv: Matrix,
}

/// Largest problem handed to the barrier solver, in scalar unknowns.
pub const MAX_UNKNOWNS: usize = 1200;

const OUTER_ROUNDS: usize = 12;
const NEWTON_STEPS: usize = 60;

/// Proposes one factor per node of `g`, or `None` when the barrier problem
/// is too large, degenerate, or ends with a non-positive margin.
pub fn synthesize(g: &Automaton, modes: &[Matrix]) -> Option<Vec<NodeFactor>> {
    let nodes = g.node_count();
    let n = modes.first()?.rows();
    if nodes == 0 || n == 0 {
        return None;
    }
    let sym = n * (n + 1) / 2;
    let unknowns = nodes * sym + 1;
    if unknowns > MAX_UNKNOWNS {
        return None;
    }
    let problem = Problem::new(g, modes, n);
    let x = problem.solve()?;
    if x[problem.t_index()] <= 0.0 {
        return None;
    }
    let mut out = Vec::with_capacity(nodes);
    for v in 0..nodes {
        let p = problem.node_matrix(&x, v);
        let t = linalg::cholesky(&p).ok()?.transpose();
        let t_inv = linalg::inverse(&t).ok()?;
        out.push(NodeFactor {
            node: g.name(v).to_string(),
            t,
            t_inv,
        });
    }
    Some(out)
}

/// Affine matrix constraint `F0 + Σ_j x_j F_j ⪰ 0` touching few unknowns.
struct Lmi {
    f0: Matrix,
    terms: Vec<(usize, Matrix)>,
}

impl Lmi {
    fn value(&self, x: &[f64]) -> Matrix {
        let mut f = self.f0.clone();
        for (j, fj) in &self.terms {
            if x[*j] != 0.0 {
                f = f.add(&fj.scale(x[*j])).expect("blocks share a shape");
            }
        }
        f
    }
}

struct Problem {
    n: usize,
    nodes: usize,
    lmis: Vec<Lmi>,
    trace_cap: f64,
}

impl Problem {
    fn new(g: &Automaton, modes: &[Matrix], n: usize) -> Self {
        let nodes = g.node_count();
        let basis = sym_basis(n);
        let sym = basis.len();
        let mut lmis = Vec::new();
        let t_index = nodes * sym;
        let mut seen = std::collections::HashSet::new();
        for e in g.edges() {
            if !seen.insert((e.src, e.dst, e.label)) {
                continue;
            }
            let a = &modes[e.label as usize - 1];
            let at = a.transpose();
            let mut terms: Vec<(usize, Matrix)> = Vec::new();
            for (b, eb) in basis.iter().enumerate() {
                let pulled = at.mul_unchecked(eb).mul_unchecked(a).scale(-1.0);
                if e.src == e.dst {
                    terms.push((e.src * sym + b, eb.add(&pulled).expect("same shape")));
                } else {
                    terms.push((e.src * sym + b, eb.clone()));
                    terms.push((e.dst * sym + b, pulled));
                }
            }
            terms.push((t_index, Matrix::identity(n).scale(-1.0)));
            lmis.push(Lmi {
                f0: Matrix::zeros(n, n),
                terms,
            });
        }
        for v in 0..nodes {
            lmis.push(Lmi {
                f0: Matrix::zeros(n, n),
                terms: basis.iter().enumerate().map(|(b, eb)| (v * sym + b, eb.clone())).collect(),
            });
        }
        Problem {
            n,
            nodes,
            lmis,
            trace_cap: (nodes * n) as f64,
        }
    }

    fn sym(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn t_index(&self) -> usize {
        self.nodes * self.sym()
    }

    fn unknowns(&self) -> usize {
        self.t_index() + 1
    }

    fn node_matrix(&self, x: &[f64], v: usize) -> Matrix {
        let mut p = Matrix::zeros(self.n, self.n);
        for (b, eb) in sym_basis(self.n).iter().enumerate() {
            p = p.add(&eb.scale(x[v * self.sym() + b])).expect("same shape");
        }
        p
    }

    /// `c − Σ tr P_v`.
    fn trace_slack(&self, x: &[f64]) -> f64 {
        let sym = self.sym();
        let mut s = self.trace_cap;
        for v in 0..self.nodes {
            for (b, (i, j)) in sym_pairs(self.n).into_iter().enumerate() {
                if i == j {
                    s -= x[v * sym + b];
                }
            }
        }
        s
    }

    /// Strictly feasible start: `P_v = c₀ I` and a very negative margin.
    fn start(&self) -> Vec<f64> {
        let c0 = self.trace_cap / (2.0 * (self.nodes * self.n) as f64);
        let mut x = vec![0.0; self.unknowns()];
        for v in 0..self.nodes {
            for (b, (i, j)) in sym_pairs(self.n).into_iter().enumerate() {
                if i == j {
                    x[v * self.sym() + b] = c0;
                }
            }
        }
        let ti = self.t_index();
        x[ti] = 0.0;
        let mut worst: f64 = 0.0;
        for l in &self.lmis {
            worst = worst.min(min_eig_lower_bound(&l.value(&x)));
        }
        x[ti] = worst - 1.0;
        x
    }

    /// `−s·t − Σ log det F_i − log(trace slack)`, or `None` outside the
    /// feasible set.
    fn objective(&self, x: &[f64], s: f64) -> Option<f64> {
        let slack = self.trace_slack(x);
        if slack <= 0.0 {
            return None;
        }
        let mut f = -s * x[self.t_index()] - slack.ln();
        for l in &self.lmis {
            let c = linalg::cholesky(&l.value(x)).ok()?;
            f -= 2.0 * (0..self.n).map(|i| c[(i, i)].ln()).sum::<f64>();
        }
        Some(f)
    }

    fn solve(&self) -> Option<Vec<f64>> {
        let mut x = self.start();
        let dim = self.unknowns();
        let barrier_weight = (self.lmis.len() * self.n + 1) as f64;
        let mut s = 1.0;
        for _ in 0..OUTER_ROUNDS {
            for _ in 0..NEWTON_STEPS {
                let (grad, hess) = self.derivatives(&x, s)?;
                let step = solve_spd(&hess, &grad.iter().map(|g| -g).collect::<Vec<_>>(), dim)?;
                let decrement: f64 = -grad.iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
                if decrement / 2.0 < 1e-9 {
                    break;
                }
                let f0 = self.objective(&x, s)?;
                let mut alpha = 1.0;
                loop {
                    let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + alpha * d).collect();
                    if let Some(f) = self.objective(&trial, s) {
                        if f <= f0 - 0.25 * alpha * decrement {
                            x = trial;
                            break;
                        }
                    }
                    alpha *= 0.5;
                    if alpha < 1e-12 {
                        return Some(x);
                    }
                }
            }
            if barrier_weight / s < 1e-7 {
                break;
            }
            s *= 8.0;
        }
        Some(x)
    }

    fn derivatives(&self, x: &[f64], s: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let dim = self.unknowns();
        let mut grad = vec![0.0; dim];
        let mut hess = vec![0.0; dim * dim];
        grad[self.t_index()] -= s;
        for l in &self.lmis {
            let inv = linalg::inverse(&l.value(x)).ok()?;
            let w: Vec<Matrix> = l.terms.iter().map(|(_, fj)| inv.mul_unchecked(fj)).collect();
            for (a, (ja, _)) in l.terms.iter().enumerate() {
                grad[*ja] -= trace(&w[a]);
                for (b, (jb, _)) in l.terms.iter().enumerate().skip(a) {
                    let h = trace_product(&w[a], &w[b]);
                    hess[ja * dim + jb] += h;
                    if a != b {
                        hess[jb * dim + ja] += h;
                    }
                }
            }
        }
        // −log(c − Σ tr P_v): gradient 1/slack on diagonal entries.
        let slack = self.trace_slack(x);
        let diag: Vec<usize> = (0..self.nodes)
            .flat_map(|v| {
                sym_pairs(self.n)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, (i, j))| i == j)
                    .map(move |(b, _)| v * self.sym() + b)
                    .collect::<Vec<_>>()
            })
            .collect();
        for &i in &diag {
            grad[i] += 1.0 / slack;
            for &j in &diag {
                hess[i * dim + j] += 1.0 / (slack * slack);
            }
        }
        Some((grad, hess))
    }
}

fn sym_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push((i, j));
        }
    }
    out
}

fn sym_basis(n: usize) -> Vec<Matrix> {
    sym_pairs(n)
        .into_iter()
        .map(|(i, j)| {
            let mut e = Matrix::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            e
        })
        .collect()
}

fn trace(a: &Matrix) -> f64 {
    (0..a.rows()).map(|i| a[(i, i)]).sum()
}

fn trace_product(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// Gershgorin lower bound on the smallest eigenvalue of a symmetric matrix.
fn min_eig_lower_bound(a: &Matrix) -> f64 {
    (0..a.rows())
        .map(|i| a[(i, i)] - (0..a.cols()).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Solves `H d = r` for symmetric positive definite `H` stored row-major.
fn solve_spd(h: &[f64], r: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    let scale = (0..n).map(|i| h[i * n + i].abs()).fold(0.0, f64::max).max(1.0);
    for j in 0..n {
        let mut d = h[j * n + j] + 1e-14 * scale;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = h[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    let mut y = r.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::Edge;

    fn edge_norms(g: &Automaton, modes: &[Matrix], f: &[NodeFactor]) -> f64 {
        g.edges()
            .iter()
            .map(|e| {
                f[e.dst]
                    .t
                    .mul_unchecked(&modes[e.label as usize - 1])
                    .mul_unchecked(&f[e.src].t_inv)
                    .norm_2()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn single_stable_mode_gets_a_contracting_norm() {
        let a = Matrix::from_rows(&[[0.9, 5.0], [0.0, 0.9]]).unwrap();
        assert!(a.norm_2() > 1.0);
        let g = Automaton::full_shift(1);
        let f = synthesize(&g, &[a.clone()]).unwrap();
        assert!(edge_norms(&g, &[a], &f) < 1.0);
    }

    #[test]
    fn alternation_needs_different_norms_per_node() {
        // Each mode alone has norm 2, but the products along the cycle are small.
        let a1 = Matrix::from_rows(&[[0.0, 2.0], [0.0, 0.0]]).unwrap();
        let a2 = Matrix::from_rows(&[[0.0, 0.0], [0.3, 0.0]]).unwrap();
        let g = Automaton::with_node_count(2, 2, vec![Edge::new(0, 1, 1), Edge::new(1, 0, 2)]).unwrap();
        let modes = vec![a1, a2];
        let f = synthesize(&g, &modes).unwrap();
        assert!(edge_norms(&g, &modes, &f) < 1.0);
    }

    #[test]
    fn unstable_loop_is_not_certified() {
        let g = Automaton::full_shift(1);
        assert!(synthesize(&g, &[Matrix::scalar(1.1)]).is_none());
    }
}
