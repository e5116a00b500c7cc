//! Layered stability oracle.
//!
//! Given a system and a tolerance `ε`, the oracle either certifies
//! `ρ̂ < 1`, returns a closed walk whose growth `ρ(A_c)^{1/|c|}` exceeds
//! `1 - ε`, or gives up with [`OracleVerdict::Unknown`]. The layers run
//! cheapest first:
//!
//! 1. every closed walk up to `short_cycle_len` symbols;
//! 2. `ρ̂_k < 1` for `k = 1..=cert_depth` over the candidate norms, which
//!    include a node-dependent quadratic norm fitted to the automaton;
//! 3. a beam search and seeded growth-weighted random walks that cut
//!    closed segments out of long walks;
//! 4. `Unknown`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Cycle, NodeId, Symbol, Word};
use crate::budget::{Budget, DEFAULT_BUDGET};
use crate::css::{Certificate, Css, CssError, DepthCheck, MatrixNorm, ADMISSIBILITY_MARGIN};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub epsilon: f64,
    pub short_cycle_len: usize,
    /// Largest `k` tried for `ρ̂_k < 1`.
    pub cert_depth: usize,
    /// Total steps of the long-walk layer, further capped by `budget`.
    pub walk_budget: u64,
    pub seed: u64,
    /// Expanded-state budget for each enumeration layer.
    pub budget: u64,
    pub beam_width: usize,
    /// Longest closed segment extracted from walks.
    pub max_cycle_len: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            short_cycle_len: 3,
            cert_depth: 8,
            walk_budget: 200_000,
            seed: 0,
            budget: DEFAULT_BUDGET,
            beam_width: 64,
            max_cycle_len: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("{0} must be positive")]
    Zero(&'static str),
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        if self.short_cycle_len == 0 {
            return Err(ConfigError::Zero("short_cycle_len"));
        }
        if self.cert_depth == 0 {
            return Err(ConfigError::Zero("cert_depth"));
        }
        if self.max_cycle_len == 0 {
            return Err(ConfigError::Zero("max_cycle_len"));
        }
        Ok(())
    }

    fn threshold(&self) -> f64 {
        1.0 - self.epsilon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OracleVerdict {
    Stable { certificate: Certificate },
    UnstableCycle { cycle: Cycle, growth: f64 },
    Unknown { reason: String },
}

impl OracleVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            OracleVerdict::Stable { .. } => "stable",
            OracleVerdict::UnstableCycle { .. } => "unstable_cycle",
            OracleVerdict::Unknown { .. } => "unknown",
        }
    }
}

/// Closed walk with its growth rate `ρ(A_c)^{1/|c|}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnstableCycle {
    pub cycle: Cycle,
    pub growth: f64,
}

/// Runs the layers in order and reports the first conclusive answer.
pub fn oracle(s: &Css, cfg: &OracleConfig) -> OracleVerdict {
    if let Err(e) = cfg.validate() {
        return OracleVerdict::Unknown {
            reason: format!("invalid configuration: {e}"),
        };
    }
    if s.graph().is_empty() {
        return OracleVerdict::Stable {
            certificate: Certificate {
                k: 1,
                norm: MatrixNorm::Spectral,
                value: 0.0,
            },
        };
    }
    let mut notes = Vec::new();

    let mut budget = Budget::new(cfg.budget);
    match short_cycle_sweep(s, cfg.short_cycle_len, cfg.epsilon, &mut budget) {
        Ok(found) => {
            if let Some(best) = found.into_iter().next() {
                return OracleVerdict::UnstableCycle {
                    cycle: best.cycle,
                    growth: best.growth,
                };
            }
        }
        Err(e) => notes.push(format!("short-cycle sweep: {e}")),
    }

    let mut budget = Budget::new(cfg.budget);
    let core = s.core();
    let mut norms = core.norm_candidates();
    let fixed = norms.len();
    let mut hints = Vec::new();
    'depth: for k in 1..=cfg.cert_depth {
        // The node-dependent norm costs an interior point solve, so it is
        // only built once the fixed norms have failed at depth 1.
        if k == 2 && norms.len() == fixed {
            norms.extend(core.node_norm_candidate());
            if let Some(norm) = norms.get(fixed) {
                if let Ok(DepthCheck::Below { bound }) =
                    core.check_depth(1, norm, 1.0 - ADMISSIBILITY_MARGIN, &mut budget)
                {
                    return OracleVerdict::Stable {
                        certificate: Certificate {
                            k: 1,
                            norm: norm.clone(),
                            value: bound,
                        },
                    };
                }
            }
        }
        for norm in &norms {
            match core.check_depth(k, norm, 1.0 - ADMISSIBILITY_MARGIN, &mut budget) {
                Ok(DepthCheck::Below { bound }) => {
                    return OracleVerdict::Stable {
                        certificate: Certificate {
                            k,
                            norm: norm.clone(),
                            value: bound,
                        },
                    }
                }
                Ok(DepthCheck::Reached { word, .. }) => hints.push(word),
                Err(e) => {
                    notes.push(format!("certification at k = {k}: {e}"));
                    break 'depth;
                }
            }
        }
    }

    if let Some(found) = long_cycle_search_with_hints(s, cfg, &hints) {
        return OracleVerdict::UnstableCycle {
            cycle: found.cycle,
            growth: found.growth,
        };
    }
    notes.push(format!(
        "no certificate up to k = {} and no closed walk with growth above {} found within {} walk steps",
        cfg.cert_depth,
        cfg.threshold(),
        cfg.walk_budget
    ));
    OracleVerdict::Unknown {
        reason: notes.join("; "),
    }
}

/// All anchored closed walks of length `1..=max_len` with growth above
/// `1 - eps`, sorted by decreasing growth, then length, then start node and
/// word.
pub fn short_cycle_sweep(
    s: &Css,
    max_len: usize,
    eps: f64,
    budget: &mut Budget,
) -> Result<Vec<UnstableCycle>, CssError> {
    let mut cache: HashMap<Word, f64> = HashMap::new();
    let mut out = Vec::new();
    for len in 1..=max_len {
        for cycle in s.graph().cycles_k(len, budget)? {
            // Rotations share their spectrum; evaluate one representative.
            let rep = (0..len).map(|i| cycle.word.rotate(i)).min().expect("non-empty");
            let growth = match cache.get(&rep) {
                Some(g) => *g,
                None => {
                    let g = s.growth(&rep)?;
                    cache.insert(rep, g);
                    g
                }
            };
            if growth > 1.0 - eps {
                out.push(UnstableCycle { cycle, growth });
            }
        }
    }
    out.sort_by(|a, b| {
        b.growth
            .total_cmp(&a.growth)
            .then(a.cycle.len().cmp(&b.cycle.len()))
            .then(a.cycle.start().cmp(&b.cycle.start()))
            .then(a.cycle.word.cmp(&b.cycle.word))
    });
    Ok(out)
}

/// Heuristic search for a long unstable closed walk. Returns a cycle only
/// after recomputing its growth from the original modes.
pub fn long_cycle_search(s: &Css, cfg: &OracleConfig) -> Option<UnstableCycle> {
    long_cycle_search_with_hints(s, cfg, &[])
}

fn long_cycle_search_with_hints(s: &Css, cfg: &OracleConfig, hints: &[Word]) -> Option<UnstableCycle> {
    let mut steps = cfg.walk_budget.min(cfg.budget);
    if s.graph().is_empty() || steps == 0 {
        return None;
    }
    let walker = Walker::new(s, cfg);
    if let Some(c) = walker.periodic_hints(hints) {
        return Some(c);
    }
    if let Some(c) = walker.beam(&mut steps) {
        return Some(c);
    }
    walker.random_walks(&mut steps)
}

/// Product kept as a unit-Frobenius matrix and a log scale.
#[derive(Clone)]
struct Scaled {
    m: Matrix,
    log: f64,
}

impl Scaled {
    fn identity(n: usize) -> Self {
        let m = Matrix::identity(n);
        let f = m.norm_fro();
        Scaled {
            m: m.scale(1.0 / f),
            log: f.ln(),
        }
    }

    fn left_mul(&self, a: &Matrix) -> Scaled {
        let q = a.mul_unchecked(&self.m);
        let f = q.norm_fro();
        if f == 0.0 || !f.is_finite() {
            return Scaled {
                m: q,
                log: f64::NEG_INFINITY,
            };
        }
        Scaled {
            m: q.scale(1.0 / f),
            log: self.log + f.ln(),
        }
    }
}

#[derive(Clone)]
struct Walk {
    nodes: Vec<NodeId>,
    word: Vec<Symbol>,
    prod: Scaled,
    // suffix[j] is the product of the last (suffix.len() - j) symbols
    suffix: Vec<Scaled>,
}

impl Walk {
    fn start(v: NodeId, n: usize) -> Self {
        Walk {
            nodes: vec![v],
            word: Vec::new(),
            prod: Scaled::identity(n),
            suffix: Vec::new(),
        }
    }

    fn push(&mut self, a: Symbol, dst: NodeId, mode: &Matrix, max_len: usize, n: usize) {
        self.prod = self.prod.left_mul(mode);
        for sfx in &mut self.suffix {
            *sfx = sfx.left_mul(mode);
        }
        self.suffix.push(Scaled::identity(n).left_mul(mode));
        if self.suffix.len() > max_len {
            self.suffix.remove(0);
        }
        self.word.push(a);
        self.nodes.push(dst);
    }
}

struct Walker<'a> {
    css: &'a Css,
    cfg: &'a OracleConfig,
    modes: Vec<Matrix>,
    n: usize,
}

impl<'a> Walker<'a> {
    fn new(css: &'a Css, cfg: &'a OracleConfig) -> Self {
        // Score walks in a norm adapted to the stable part of the system, so
        // that growth shows up on short prefixes. Spectra are unchanged.
        let norm = css
            .norm_candidates()
            .into_iter()
            .last()
            .unwrap_or(MatrixNorm::Spectral);
        let modes = match &norm {
            MatrixNorm::Weighted { t, t_inv, .. } => css
                .modes()
                .iter()
                .map(|a| t.mul_unchecked(a).mul_unchecked(t_inv))
                .collect(),
            _ => css.modes().to_vec(),
        };
        Walker {
            css,
            cfg,
            n: css.dim(),
            modes,
        }
    }

    fn mode(&self, a: Symbol) -> &Matrix {
        &self.modes[a as usize - 1]
    }

    /// Closed segments ending at the walk's current node with growth above
    /// the threshold, best first.
    fn closed_segments(&self, w: &Walk) -> Vec<UnstableCycle> {
        let len = w.word.len();
        let here = w.nodes[len];
        let thr = self.cfg.threshold();
        let mut found = Vec::new();
        let first = len - w.suffix.len();
        for (j, sfx) in w.suffix.iter().enumerate() {
            let start = first + j;
            if w.nodes[start] != here {
                continue;
            }
            let seg_len = (len - start) as f64;
            // ρ ≤ ‖·‖_F: skip segments that cannot reach the threshold.
            if sfx.log / seg_len <= thr.ln() {
                continue;
            }
            let rho = match linalg::spectral_radius(&sfx.m) {
                Ok(r) => r,
                Err(_) => continue,
            };
            if rho == 0.0 || (rho.ln() + sfx.log) / seg_len <= thr.ln() {
                continue;
            }
            let word = Word::new(w.word[start..].to_vec());
            if let Some(c) = self.verify(word, w.nodes[start..].to_vec()) {
                found.push(c);
            }
        }
        found
    }

    fn verify(&self, word: Word, nodes: Vec<NodeId>) -> Option<UnstableCycle> {
        let cycle = Cycle { word, nodes };
        if !self.css.graph().realizes(&cycle) {
            return None;
        }
        let growth = self.css.growth(&cycle.word).ok()?;
        (growth > self.cfg.threshold()).then_some(UnstableCycle { cycle, growth })
    }

    /// Words that defeated certification often contain an unstable period.
    fn periodic_hints(&self, hints: &[Word]) -> Option<UnstableCycle> {
        let g = self.css.graph();
        let mut best: Option<UnstableCycle> = None;
        for h in hints {
            let k = h.len();
            for i in 0..k {
                for j in i + 1..=k {
                    let w = Word::new(h.symbols()[i..j].to_vec());
                    if let Some(c) = g.find_cycle(&w) {
                        if let Some(u) = self.verify(c.word, c.nodes) {
                            if better(&u, best.as_ref()) {
                                best = Some(u);
                            }
                        }
                    }
                }
            }
        }
        best
    }

    fn beam(&self, steps: &mut u64) -> Option<UnstableCycle> {
        let g = self.css.graph();
        let mut beam: Vec<Walk> = (0..g.node_count()).map(|v| Walk::start(v, self.n)).collect();
        let depth = 2 * self.cfg.max_cycle_len;
        for _ in 0..depth {
            let mut scored: Vec<(f64, usize, Symbol, NodeId)> = Vec::new();
            for (i, w) in beam.iter().enumerate() {
                let v = *w.nodes.last().unwrap();
                for e in g.out_edges(v) {
                    let next = w.prod.left_mul(self.mode(e.label));
                    let score = next.log / (w.word.len() + 1) as f64;
                    scored.push((score, i, e.label, e.dst));
                }
            }
            if scored.is_empty() {
                return None;
            }
            scored.sort_by(|x, y| {
                y.0.total_cmp(&x.0)
                    .then(beam[x.1].word.cmp(&beam[y.1].word))
                    .then(x.2.cmp(&y.2))
                    .then(x.3.cmp(&y.3))
            });
            scored.truncate(self.cfg.beam_width.max(1));
            let mut next_beam = Vec::with_capacity(scored.len());
            let mut found: Option<UnstableCycle> = None;
            for (_, i, a, dst) in scored {
                if *steps == 0 {
                    return found;
                }
                *steps -= 1;
                let mut w = beam[i].clone();
                w.push(a, dst, self.mode(a), self.cfg.max_cycle_len, self.n);
                for c in self.closed_segments(&w) {
                    if better(&c, found.as_ref()) {
                        found = Some(c);
                    }
                }
                next_beam.push(w);
            }
            if found.is_some() {
                return found;
            }
            beam = next_beam;
        }
        None
    }

    fn random_walks(&self, steps: &mut u64) -> Option<UnstableCycle> {
        let g = self.css.graph();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let walk_len = 4 * self.cfg.max_cycle_len;
        let mut walk_index = 0u64;
        while *steps > 0 {
            // Alternate between greedy-ish and exploratory walks.
            let beta = if walk_index % 2 == 0 { 8.0 } else { 1.0 };
            walk_index += 1;
            let start = rng.gen_range(0..g.node_count());
            let mut w = Walk::start(start, self.n);
            let mut found: Option<UnstableCycle> = None;
            for _ in 0..walk_len {
                if *steps == 0 {
                    break;
                }
                *steps -= 1;
                let v = *w.nodes.last().unwrap();
                let out = g.out_edges(v);
                let logs: Vec<f64> = out
                    .iter()
                    .map(|e| w.prod.left_mul(self.mode(e.label)).log - w.prod.log)
                    .collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = logs
                    .iter()
                    .map(|l| if l.is_finite() { (beta * (l - top)).exp() } else { 0.0 })
                    .collect();
                let total: f64 = weights.iter().sum();
                let pick = if total > 0.0 && total.is_finite() {
                    let mut x = rng.gen::<f64>() * total;
                    let mut idx = out.len() - 1;
                    for (i, wt) in weights.iter().enumerate() {
                        if x < *wt {
                            idx = i;
                            break;
                        }
                        x -= wt;
                    }
                    idx
                } else {
                    rng.gen_range(0..out.len())
                };
                let e = out[pick];
                w.push(e.label, e.dst, self.mode(e.label), self.cfg.max_cycle_len, self.n);
                for c in self.closed_segments(&w) {
                    if better(&c, found.as_ref()) {
                        found = Some(c);
                    }
                }
                if found.is_some() {
                    return found;
                }
            }
        }
        None
    }
}

fn better(c: &UnstableCycle, incumbent: Option<&UnstableCycle>) -> bool {
    match incumbent {
        None => true,
        Some(b) => c
            .growth
            .total_cmp(&b.growth)
            .then(b.cycle.len().cmp(&c.cycle.len()))
            .then(b.cycle.word.cmp(&c.cycle.word))
            .is_gt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{Automaton, Edge};

    fn scalar(values: &[f64]) -> Css {
        Css::unconstrained(values.iter().map(|v| Matrix::scalar(*v)).collect()).unwrap()
    }

    #[test]
    fn oracle_examples() {
        let cfg = OracleConfig::default();
        assert!(matches!(oracle(&scalar(&[0.5]), &cfg), OracleVerdict::Stable { .. }));
        let cfg01 = OracleConfig {
            epsilon: 0.1,
            ..OracleConfig::default()
        };
        match oracle(&scalar(&[2.0]), &cfg01) {
            OracleVerdict::UnstableCycle { cycle, growth } => {
                assert_eq!(cycle.word.to_string(), "1");
                assert!((growth - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let empty = Css::new(vec![Matrix::scalar(3.0)], Automaton::empty(1)).unwrap();
        assert!(matches!(oracle(&empty, &cfg), OracleVerdict::Stable { .. }));
    }

    #[test]
    fn zero_budget_gives_unknown() {
        let cfg = OracleConfig {
            budget: 0,
            walk_budget: 0,
            ..OracleConfig::default()
        };
        assert!(matches!(oracle(&scalar(&[0.5]), &cfg), OracleVerdict::Unknown { .. }));
    }

    #[test]
    fn sweep_examples() {
        let mut b = Budget::default();
        let stable = Css::unconstrained(vec![Matrix::diag(&[0.5, 0.1]), Matrix::diag(&[0.2, 0.3])]).unwrap();
        assert!(short_cycle_sweep(&stable, 3, 1e-6, &mut b).unwrap().is_empty());
        let ex2 = scalar(&[1.0, 0.5]);
        let found = short_cycle_sweep(&ex2, 1, 0.1, &mut b).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].cycle.word.to_string(), "1");
    }

    /// Only the 5-cycle of the graph is unstable: each step rotates by 72°
    /// and expands slightly, while the escape loop contracts hard.
    fn five_cycle_fixture() -> Css {
        let th = 2.0 * std::f64::consts::PI / 5.0;
        let r = 1.02;
        let rot = Matrix::from_rows(&[[r * th.cos(), -r * th.sin()], [r * th.sin(), r * th.cos()]]).unwrap();
        let modes = vec![rot, Matrix::diag(&[0.1, 0.1])];
        let mut edges: Vec<Edge> = (0..5).map(|i| Edge::new(i, (i + 1) % 5, 1)).collect();
        edges.push(Edge::new(0, 0, 2));
        let g = Automaton::with_node_count(5, 2, edges).unwrap();
        Css::new(modes, g).unwrap()
    }

    #[test]
    fn long_search_finds_five_cycle() {
        let css = five_cycle_fixture();
        let cfg = OracleConfig::default();
        let mut b = Budget::default();
        assert!(short_cycle_sweep(&css, 3, cfg.epsilon, &mut b).unwrap().is_empty());
        let found = long_cycle_search(&css, &cfg).unwrap();
        assert_eq!(found.cycle.len() % 5, 0);
        assert!(found.growth > 1.0);
        assert!(matches!(oracle(&css, &cfg), OracleVerdict::UnstableCycle { .. }));
    }

    #[test]
    fn long_search_finds_nothing_in_stable_system() {
        let css = Css::unconstrained(vec![Matrix::diag(&[0.5, 0.1]), Matrix::diag(&[0.2, 0.3])]).unwrap();
        let cfg = OracleConfig {
            walk_budget: 5_000,
            ..OracleConfig::default()
        };
        assert!(long_cycle_search(&css, &cfg).is_none());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let css = five_cycle_fixture();
        let cfg = OracleConfig::default();
        assert_eq!(oracle(&css, &cfg), oracle(&css, &cfg));
    }

    #[test]
    fn invalid_epsilon_is_reported() {
        let cfg = OracleConfig {
            epsilon: 0.0,
            ..OracleConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(matches!(oracle(&scalar(&[0.5]), &cfg), OracleVerdict::Unknown { .. }));
    }
}
