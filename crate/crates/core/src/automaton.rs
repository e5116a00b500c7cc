//! Labeled directed multigraphs over the symbols `1..=m`.
//!
//! An [`Automaton`] accepts every finite word spelled by some path. Edges
//! are kept sorted by `(src, dst, label)`, which is also the tie-breaking
//! order used throughout the crate.
//!
//! Cycle convention: [`Automaton::cycles_k`] returns closed walks anchored
//! at a start node, one per distinct `(start, word)` pair. A closed walk
//! through `j` distinct nodes therefore appears up to `j` times, once per
//! rotation.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{Budget, BudgetExceeded};
use crate::linalg::{self, Matrix};

pub type NodeId = usize;
pub type Symbol = u32;

/// Largest lifted automaton (in nodes) built unless the caller asks otherwise.
pub const DEFAULT_LIFT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutomatonError {
    #[error("edge {edge:?} refers to node {node}, but there are only {count} nodes")]
    UnknownNode { edge: Edge, node: NodeId, count: usize },
    #[error("edge {edge:?} has label outside 1..={m}")]
    LabelOutOfRange { edge: Edge, m: Symbol },
    #[error("duplicate edge {0:?}")]
    DuplicateEdge(Edge),
    #[error("duplicate node name {0:?}")]
    DuplicateName(String),
    #[error("edge {0:?} is not in the automaton")]
    MissingEdge(Edge),
    #[error("word symbol {symbol} outside 1..={m}")]
    SymbolOutOfRange { symbol: Symbol, m: Symbol },
    #[error("cycle {0} is not realized by the automaton")]
    CycleNotRealizable(Word),
    #[error("lift would need more than {cap} nodes")]
    LiftTooLarge { cap: usize },
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub label: Symbol,
}

impl Edge {
    pub fn new(src: NodeId, dst: NodeId, label: Symbol) -> Self {
        Self { src, dst, label }
    }
}

/// Sequence of symbols. Printed as a digit string when every symbol is a
/// single digit, otherwise dot-separated.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Self(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Cyclic rotation starting at position `i`.
    pub fn rotate(&self, i: usize) -> Word {
        let n = self.0.len();
        Word((0..n).map(|j| self.0[(i + j) % n]).collect())
    }

    pub fn repeat(&self, times: usize) -> Word {
        Word(self.0.repeat(times))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|s| *s <= 9) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse word {0:?}")]
pub struct ParseWordError(pub String);

impl FromStr for Word {
    type Err = ParseWordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseWordError(s.to_string());
        let s = s.trim();
        if s.is_empty() {
            return Err(err());
        }
        let symbols: Option<Vec<Symbol>> = if s.contains('.') {
            s.split('.').map(|p| p.parse().ok()).collect()
        } else {
            s.chars().map(|c| c.to_digit(10)).collect()
        };
        match symbols {
            Some(v) if v.iter().all(|x| *x >= 1) => Ok(Word(v)),
            _ => Err(err()),
        }
    }
}

/// A closed walk: `nodes[0] == nodes[len]` and `(nodes[j], nodes[j+1], word[j])`
/// is an edge for every `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cycle {
    pub word: Word,
    pub nodes: Vec<NodeId>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.word
            .symbols()
            .iter()
            .enumerate()
            .map(|(j, s)| Edge::new(self.nodes[j], self.nodes[j + 1], *s))
            .collect()
    }

    /// Rotation-independent identity of the closed walk: the lexicographically
    /// least rotation of its edge sequence.
    pub fn canonical_edges(&self) -> Vec<Edge> {
        let edges = self.edges();
        let n = edges.len();
        (0..n)
            .map(|i| (0..n).map(|j| edges[(i + j) % n]).collect::<Vec<_>>())
            .min()
            .unwrap_or_default()
    }
}

/// Fixed-size set of node ids.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct NodeSet(Vec<u64>);

impl NodeSet {
    pub(crate) fn empty(n: usize) -> Self {
        NodeSet(vec![0; n.div_ceil(64)])
    }

    pub(crate) fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for v in 0..n {
            s.insert(v);
        }
        s
    }

    pub(crate) fn single(n: usize, v: NodeId) -> Self {
        let mut s = Self::empty(n);
        s.insert(v);
        s
    }

    pub(crate) fn insert(&mut self, v: NodeId) {
        self.0[v / 64] |= 1 << (v % 64);
    }

    pub(crate) fn contains(&self, v: NodeId) -> bool {
        self.0[v / 64] >> (v % 64) & 1 == 1
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().enumerate().flat_map(|(i, w)| {
            let mut w = *w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }
}

/// Labeled directed multigraph with symbols in `1..=m`.
#[derive(Clone, PartialEq)]
pub struct Automaton {
    names: Vec<String>,
    m: Symbol,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    // delta[v * m + (a - 1)] = successors of v under a, ascending
    delta: Vec<Vec<NodeId>>,
}

impl fmt::Debug for Automaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Automaton")
            .field("m", &self.m)
            .field("nodes", &self.names)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Automaton {
    pub fn new(names: Vec<String>, m: Symbol, mut edges: Vec<Edge>) -> Result<Self, AutomatonError> {
        let count = names.len();
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(AutomatonError::DuplicateName(n.clone()));
            }
        }
        for e in &edges {
            for node in [e.src, e.dst] {
                if node >= count {
                    return Err(AutomatonError::UnknownNode {
                        edge: *e,
                        node,
                        count,
                    });
                }
            }
            if e.label == 0 || e.label > m {
                return Err(AutomatonError::LabelOutOfRange { edge: *e, m });
            }
        }
        edges.sort();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(AutomatonError::DuplicateEdge(w[0]));
        }
        Ok(Self::from_sorted(names, m, edges))
    }

    /// Builds an automaton whose nodes are named `v0, v1, …`.
    pub fn with_node_count(n: usize, m: Symbol, edges: Vec<Edge>) -> Result<Self, AutomatonError> {
        Self::new((0..n).map(|i| format!("v{i}")).collect(), m, edges)
    }

    fn from_sorted(names: Vec<String>, m: Symbol, edges: Vec<Edge>) -> Self {
        let n = names.len();
        let mut offsets = vec![0; n + 1];
        for e in &edges {
            offsets[e.src + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let mut delta = vec![Vec::new(); n * m as usize];
        for e in &edges {
            delta[e.src * m as usize + (e.label as usize - 1)].push(e.dst);
        }
        for d in &mut delta {
            d.sort_unstable();
        }
        Self {
            names,
            m,
            edges,
            offsets,
            delta,
        }
    }

    /// One node with a self loop for every symbol.
    pub fn full_shift(m: Symbol) -> Self {
        let edges = (1..=m).map(|a| Edge::new(0, 0, a)).collect();
        Self::from_sorted(vec!["q".to_string()], m, edges)
    }

    pub fn empty(m: Symbol) -> Self {
        Self::from_sorted(Vec::new(), m, Vec::new())
    }

    pub fn m(&self) -> Symbol {
        self.m
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v]
    }

    pub fn node_index(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, v: NodeId) -> &[Edge] {
        &self.edges[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.edges.binary_search(e).is_ok()
    }

    /// Successors of `v` reading symbol `a`.
    pub fn successors(&self, v: NodeId, a: Symbol) -> &[NodeId] {
        &self.delta[v * self.m as usize + (a as usize - 1)]
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        1..=self.m
    }

    /// Human-readable edge `src -a-> dst`.
    pub fn describe_edge(&self, e: &Edge) -> String {
        format!("{} -{}-> {}", self.names[e.src], e.label, self.names[e.dst])
    }

    pub(crate) fn step_set(&self, s: &NodeSet, a: Symbol) -> NodeSet {
        let mut out = NodeSet::empty(self.node_count());
        for v in s.iter() {
            for &u in self.successors(v, a) {
                out.insert(u);
            }
        }
        out
    }

    pub(crate) fn all_nodes(&self) -> NodeSet {
        NodeSet::full(self.node_count())
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.node_count()];
        for e in &self.edges {
            d[e.dst] += 1;
        }
        d
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        (0..self.node_count())
            .map(|v| self.offsets[v + 1] - self.offsets[v])
            .collect()
    }

    /// True when every node has an incoming and an outgoing edge.
    pub fn satisfies_degree_condition(&self) -> bool {
        let ins = self.in_degrees();
        let outs = self.out_degrees();
        ins.iter().zip(&outs).all(|(i, o)| *i > 0 && *o > 0)
    }

    /// Removes nodes lacking an incoming or outgoing edge, repeatedly, and
    /// renumbers the survivors in their original order. The result may be
    /// empty.
    pub fn validate_and_trim(&self) -> Automaton {
        let n = self.node_count();
        let mut alive = vec![true; n];
        let mut ins = self.in_degrees();
        let mut outs = self.out_degrees();
        let mut preds: Vec<Vec<&Edge>> = vec![Vec::new(); n];
        for e in &self.edges {
            preds[e.dst].push(e);
        }
        let mut stack: Vec<NodeId> = (0..n).filter(|&v| ins[v] == 0 || outs[v] == 0).collect();
        while let Some(v) = stack.pop() {
            if !alive[v] {
                continue;
            }
            alive[v] = false;
            for e in self.out_edges(v) {
                if alive[e.dst] && e.dst != v {
                    ins[e.dst] -= 1;
                    if ins[e.dst] == 0 {
                        stack.push(e.dst);
                    }
                }
            }
            for e in &preds[v] {
                if alive[e.src] && e.src != v {
                    outs[e.src] -= 1;
                    if outs[e.src] == 0 {
                        stack.push(e.src);
                    }
                }
            }
        }
        if alive.iter().all(|a| *a) {
            return self.clone();
        }
        let mut index = vec![usize::MAX; n];
        let mut names = Vec::new();
        for v in 0..n {
            if alive[v] {
                index[v] = names.len();
                names.push(self.names[v].clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| alive[e.src] && alive[e.dst])
            .map(|e| Edge::new(index[e.src], index[e.dst], e.label))
            .collect();
        Automaton::from_sorted(names, self.m, edges)
    }

    /// Removes `e` and trims.
    pub fn remove_edge(&self, e: &Edge) -> Result<Automaton, AutomatonError> {
        self.remove_edges(std::slice::from_ref(e))
    }

    pub fn remove_edges(&self, es: &[Edge]) -> Result<Automaton, AutomatonError> {
        for e in es {
            if !self.contains_edge(e) {
                return Err(AutomatonError::MissingEdge(*e));
            }
        }
        let edges = self.edges.iter().filter(|x| !es.contains(x)).copied().collect();
        Ok(Automaton::from_sorted(self.names.clone(), self.m, edges).validate_and_trim())
    }

    /// Same graph with a different symbol count (must cover all labels).
    pub fn with_m(&self, m: Symbol) -> Result<Automaton, AutomatonError> {
        Automaton::new(self.names.clone(), m, self.edges.clone())
    }

    /// Maps an edge expressed with node names into this automaton's ids.
    pub fn find_named_edge(&self, src: &str, dst: &str, label: Symbol) -> Option<Edge> {
        let e = Edge::new(self.node_index(src)?, self.node_index(dst)?, label);
        self.contains_edge(&e).then_some(e)
    }

    fn check_word(&self, w: &Word) -> Result<(), AutomatonError> {
        match w.symbols().iter().find(|s| **s == 0 || **s > self.m) {
            Some(s) => Err(AutomatonError::SymbolOutOfRange {
                symbol: *s,
                m: self.m,
            }),
            None => Ok(()),
        }
    }

    /// True iff some path spells `w`. The empty word is accepted by any
    /// non-empty automaton.
    pub fn accepts(&self, w: &Word) -> bool {
        if self.check_word(w).is_err() {
            return false;
        }
        let mut s = self.all_nodes();
        for &a in w.symbols() {
            if s.is_empty() {
                return false;
            }
            s = self.step_set(&s, a);
        }
        !s.is_empty()
    }

    /// Nodes reachable from `from` by reading `w`.
    pub fn read_from(&self, from: NodeId, w: &Word) -> Vec<NodeId> {
        let mut s = NodeSet::single(self.node_count(), from);
        for &a in w.symbols() {
            s = self.step_set(&s, a);
        }
        s.iter().collect()
    }

    /// Smallest node path (lexicographically, built backwards) from `start`
    /// to `end` spelling `w`.
    pub fn find_path(&self, start: NodeId, w: &Word, end: NodeId) -> Option<Vec<NodeId>> {
        if self.check_word(w).is_err() {
            return None;
        }
        let n = self.node_count();
        let mut layers = vec![NodeSet::single(n, start)];
        for &a in w.symbols() {
            let next = self.step_set(layers.last().unwrap(), a);
            layers.push(next);
        }
        if !layers.last().unwrap().contains(end) {
            return None;
        }
        let k = w.len();
        let mut nodes = vec![end; k + 1];
        for i in (0..k).rev() {
            let target = nodes[i + 1];
            let a = w.symbols()[i];
            let u = layers[i]
                .iter()
                .find(|&u| self.successors(u, a).binary_search(&target).is_ok())?;
            nodes[i] = u;
        }
        Some(nodes)
    }

    /// A closed walk spelling `w`, anchored at the smallest possible node.
    pub fn find_cycle(&self, w: &Word) -> Option<Cycle> {
        if w.is_empty() {
            return None;
        }
        (0..self.node_count()).find_map(|v| {
            self.find_path(v, w, v).map(|nodes| Cycle {
                word: w.clone(),
                nodes,
            })
        })
    }

    /// Checks that `c` is a closed walk of this automaton.
    pub fn realizes(&self, c: &Cycle) -> bool {
        !c.word.is_empty()
            && c.nodes.len() == c.word.len() + 1
            && c.nodes.first() == c.nodes.last()
            && c.nodes.iter().all(|v| *v < self.node_count())
            && c.edges().iter().all(|e| self.contains_edge(e))
    }

    /// True iff the periodic infinite word `w w w …` labels an infinite path.
    pub fn accepts_periodic(&self, w: &Word) -> bool {
        if w.is_empty() || self.check_word(w).is_err() {
            return false;
        }
        // Relation graph: u -> v whenever reading w leads from u to v.
        let n = self.node_count();
        let succ: Vec<Vec<NodeId>> = (0..n).map(|u| self.read_from(u, w)).collect();
        has_cycle(&succ)
    }

    /// All accepted words of length `k`, in lexicographic order.
    pub fn words_k(&self, k: usize, budget: &mut Budget) -> Result<Vec<Word>, BudgetExceeded> {
        let mut out = Vec::new();
        if self.node_count() == 0 {
            return Ok(out);
        }
        let mut prefix = Vec::with_capacity(k);
        self.words_rec(&self.all_nodes(), k, &mut prefix, &mut out, budget)?;
        Ok(out)
    }

    fn words_rec(
        &self,
        s: &NodeSet,
        k: usize,
        prefix: &mut Vec<Symbol>,
        out: &mut Vec<Word>,
        budget: &mut Budget,
    ) -> Result<(), BudgetExceeded> {
        budget.spend(1)?;
        if prefix.len() == k {
            out.push(Word(prefix.clone()));
            return Ok(());
        }
        for a in self.symbols() {
            let next = self.step_set(s, a);
            if !next.is_empty() {
                prefix.push(a);
                self.words_rec(&next, k, prefix, out, budget)?;
                prefix.pop();
            }
        }
        Ok(())
    }

    /// Number of accepted words of length `k`, memoized on reachable node sets.
    pub fn count_words(&self, k: usize, budget: &mut Budget) -> Result<u128, BudgetExceeded> {
        if self.node_count() == 0 {
            return Ok(0);
        }
        let mut memo: HashMap<(NodeSet, usize), u128> = HashMap::new();
        self.count_rec(self.all_nodes(), k, &mut memo, budget)
    }

    fn count_rec(
        &self,
        s: NodeSet,
        r: usize,
        memo: &mut HashMap<(NodeSet, usize), u128>,
        budget: &mut Budget,
    ) -> Result<u128, BudgetExceeded> {
        if r == 0 {
            return Ok(1);
        }
        let key = (s, r);
        if let Some(c) = memo.get(&key) {
            return Ok(*c);
        }
        budget.spend(1)?;
        let mut total: u128 = 0;
        for a in self.symbols() {
            let next = self.step_set(&key.0, a);
            if !next.is_empty() {
                total = total.saturating_add(self.count_rec(next, r - 1, memo, budget)?);
            }
        }
        memo.insert(key, total);
        Ok(total)
    }

    /// Closed walks of length exactly `k`, one per `(start node, word)`,
    /// ordered by start node then word.
    pub fn cycles_k(&self, k: usize, budget: &mut Budget) -> Result<Vec<Cycle>, BudgetExceeded> {
        let mut out = Vec::new();
        if k == 0 {
            return Ok(out);
        }
        for v in 0..self.node_count() {
            let mut words = Vec::new();
            let mut prefix = Vec::with_capacity(k);
            self.closed_rec(
                v,
                &NodeSet::single(self.node_count(), v),
                k,
                &mut prefix,
                &mut words,
                budget,
            )?;
            for w in words {
                let nodes = self
                    .find_path(v, &w, v)
                    .expect("closed word found by subset tracking has a witness");
                out.push(Cycle { word: w, nodes });
            }
        }
        Ok(out)
    }

    fn closed_rec(
        &self,
        start: NodeId,
        s: &NodeSet,
        k: usize,
        prefix: &mut Vec<Symbol>,
        out: &mut Vec<Word>,
        budget: &mut Budget,
    ) -> Result<(), BudgetExceeded> {
        budget.spend(1)?;
        if prefix.len() == k {
            if s.contains(start) {
                out.push(Word(prefix.clone()));
            }
            return Ok(());
        }
        for a in self.symbols() {
            let next = self.step_set(s, a);
            if !next.is_empty() {
                prefix.push(a);
                self.closed_rec(start, &next, k, prefix, out, budget)?;
                prefix.pop();
            }
        }
        Ok(())
    }

    /// Distinct words of length `k` spelled by some closed walk.
    pub fn cycle_words_k(&self, k: usize, budget: &mut Budget) -> Result<Vec<Word>, BudgetExceeded> {
        let mut set = BTreeSet::new();
        for v in 0..self.node_count() {
            let mut words = Vec::new();
            let mut prefix = Vec::with_capacity(k);
            self.closed_rec(
                v,
                &NodeSet::single(self.node_count(), v),
                k,
                &mut prefix,
                &mut words,
                budget,
            )?;
            set.extend(words);
        }
        Ok(set.into_iter().collect())
    }

    /// Degree-`k` lift: nodes are paths of `k` edges, and each path of
    /// `k + 1` edges becomes an edge from its first `k` edges to its last
    /// `k` edges, labeled by its final symbol. Accepts the same language.
    pub fn lift(&self, k: usize) -> Result<Automaton, AutomatonError> {
        self.lift_with_cap(k, DEFAULT_LIFT_CAP)
    }

    pub fn lift_with_cap(&self, k: usize, cap: usize) -> Result<Automaton, AutomatonError> {
        let g = self.validate_and_trim();
        if k == 0 {
            return Ok(g);
        }
        // Paths of k edges as sequences of edge indices.
        let mut paths: Vec<Vec<u32>> = (0..g.edges.len() as u32).map(|i| vec![i]).collect();
        for _ in 1..k {
            let mut next = Vec::new();
            for p in &paths {
                let last = g.edges[*p.last().unwrap() as usize];
                for idx in g.offsets[last.dst]..g.offsets[last.dst + 1] {
                    if next.len() >= cap {
                        return Err(AutomatonError::LiftTooLarge { cap });
                    }
                    let mut q = p.clone();
                    q.push(idx as u32);
                    next.push(q);
                }
            }
            paths = next;
        }
        if paths.len() > cap {
            return Err(AutomatonError::LiftTooLarge { cap });
        }
        paths.sort_by(|a, b| {
            let ka: Vec<Edge> = a.iter().map(|i| g.edges[*i as usize]).collect();
            let kb: Vec<Edge> = b.iter().map(|i| g.edges[*i as usize]).collect();
            ka.cmp(&kb)
        });
        let index: HashMap<&[u32], usize> =
            paths.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
        let names: Vec<String> = paths
            .iter()
            .map(|p| {
                let mut s = g.names[g.edges[p[0] as usize].src].clone();
                for i in p {
                    let e = g.edges[*i as usize];
                    s.push_str(&format!("/{}/{}", e.label, g.names[e.dst]));
                }
                s
            })
            .collect();
        let mut edges = Vec::new();
        for (src, p) in paths.iter().enumerate() {
            let last = g.edges[*p.last().unwrap() as usize];
            for idx in g.offsets[last.dst]..g.offsets[last.dst + 1] {
                let mut q: Vec<u32> = p[1..].to_vec();
                q.push(idx as u32);
                let dst = index[q.as_slice()];
                edges.push(Edge::new(src, dst, g.edges[idx].label));
            }
        }
        edges.sort();
        Ok(Automaton::from_sorted(names, g.m, edges))
    }

    /// Edge shift: one node per edge, and a transition `e1 -> e2` labeled
    /// by `e2`'s symbol whenever `e1` ends where `e2` starts.
    pub fn edge_shift(&self) -> Automaton {
        let names = self
            .edges
            .iter()
            .map(|e| format!("{}/{}/{}", self.names[e.src], e.label, self.names[e.dst]))
            .collect();
        let mut edges = Vec::new();
        for (i, e1) in self.edges.iter().enumerate() {
            for j in self.offsets[e1.dst]..self.offsets[e1.dst + 1] {
                edges.push(Edge::new(i, j, self.edges[j].label));
            }
        }
        edges.sort();
        Automaton::from_sorted(names, self.m, edges)
    }

    /// Outgoing labels are distinct at every node.
    pub fn is_right_resolving(&self) -> bool {
        (0..self.node_count()).all(|v| {
            let out = self.out_edges(v);
            let labels: BTreeSet<Symbol> = out.iter().map(|e| e.label).collect();
            labels.len() == out.len()
        })
    }

    /// Strongly connected component index of every node, plus the count.
    /// Components are numbered in reverse topological order.
    pub fn strongly_connected_components(&self) -> (Vec<usize>, usize) {
        let succ: Vec<Vec<NodeId>> = (0..self.node_count())
            .map(|v| self.out_edges(v).iter().map(|e| e.dst).collect())
            .collect();
        scc(&succ)
    }

    /// Edges inside a strong component, trimmed: the transient edges between
    /// components are dropped. Node names are kept.
    pub fn core(&self) -> Automaton {
        let (comp, _) = self.strongly_connected_components();
        let edges = self
            .edges
            .iter()
            .filter(|e| comp[e.src] == comp[e.dst])
            .copied()
            .collect();
        Automaton::from_sorted(self.names.clone(), self.m, edges).validate_and_trim()
    }

    /// A single strong component (the empty automaton is not irreducible).
    pub fn is_irreducible(&self) -> bool {
        self.node_count() > 0 && self.strongly_connected_components().1 == 1
    }

    /// Adjacency matrix counting parallel edges.
    pub fn adjacency_matrix(&self) -> Matrix {
        let n = self.node_count();
        let mut b = Matrix::zeros(n, n);
        for e in &self.edges {
            b[(e.src, e.dst)] += 1.0;
        }
        b
    }

    /// Spectral radius of the adjacency matrix, computed per strong
    /// component. Zero for graphs without cycles (including the empty one).
    pub fn perron_root(&self) -> f64 {
        let (comp, count) = self.strongly_connected_components();
        let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); count];
        for (v, c) in comp.iter().enumerate() {
            members[*c].push(v);
        }
        let mut best: f64 = 0.0;
        for nodes in members {
            let mut local = HashMap::new();
            for (i, v) in nodes.iter().enumerate() {
                local.insert(*v, i);
            }
            let k = nodes.len();
            let mut b = Matrix::zeros(k, k);
            let mut any = false;
            for v in &nodes {
                for e in self.out_edges(*v) {
                    if let Some(j) = local.get(&e.dst) {
                        b[(local[v], *j)] += 1.0;
                        any = true;
                    }
                }
            }
            if any {
                best = best.max(irreducible_perron_root(&b));
            }
        }
        best
    }

    /// Entropy in bits: `log2` of the Perron root, and 0 for an automaton
    /// without cycles. For automata that are not right-resolving this is an
    /// upper bound on the language entropy.
    pub fn entropy(&self) -> f64 {
        entropy_bits(self.perron_root())
    }
}

/// `log2(root)`, with the convention that acyclic graphs (root 0) have entropy 0.
pub fn entropy_bits(root: f64) -> f64 {
    if root <= 1.0 {
        0.0
    } else {
        root.log2()
    }
}

const DENSE_PERRON_LIMIT: usize = 200;

/// Perron root of a non-negative irreducible matrix.
fn irreducible_perron_root(b: &Matrix) -> f64 {
    if b.rows() <= DENSE_PERRON_LIMIT {
        if let Ok(r) = linalg::spectral_radius(b) {
            return r;
        }
    }
    power_perron_root(b)
}

/// Collatz-Wielandt bracketing on `I + B`, which is primitive when `B` is
/// irreducible and has Perron root `1 + ρ(B)`.
fn power_perron_root(b: &Matrix) -> f64 {
    let n = b.rows();
    let mut x = vec![1.0; n];
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    for _ in 0..200_000 {
        let mut y = x.clone();
        for i in 0..n {
            for j in 0..n {
                y[i] += b[(i, j)] * x[j];
            }
        }
        lo = (0..n).map(|i| y[i] / x[i]).fold(f64::INFINITY, f64::min);
        hi = (0..n).map(|i| y[i] / x[i]).fold(0.0, f64::max);
        let s: f64 = y.iter().sum();
        x = y.iter().map(|v| v / s).collect();
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi) - 1.0
}

/// Kosaraju's algorithm with explicit stacks.
pub(crate) fn scc(succ: &[Vec<NodeId>]) -> (Vec<usize>, usize) {
    let n = succ.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some((v, i)) = stack.last_mut() {
            if let Some(&w) = succ[*v].get(*i) {
                *i += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(*v);
                stack.pop();
            }
        }
    }
    let mut pred = vec![Vec::new(); n];
    for (v, ws) in succ.iter().enumerate() {
        for &w in ws {
            pred[w].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        comp[root] = count;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &w in &pred[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Whether a directed graph given by successor lists contains a cycle.
pub(crate) fn has_cycle(succ: &[Vec<NodeId>]) -> bool {
    let (comp, count) = scc(succ);
    let mut size = vec![0usize; count];
    for c in &comp {
        size[*c] += 1;
    }
    succ.iter()
        .enumerate()
        .any(|(v, ws)| ws.iter().any(|&w| w == v || (comp[w] == comp[v] && size[comp[v]] > 1)))
}
