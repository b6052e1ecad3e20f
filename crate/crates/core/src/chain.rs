//! The Markov chain of a program on one input.
//!
//! States are the configurations reachable from the start state, indexed in
//! lexicographic `(line, memory, pending)` order. Every edge has probability
//! ½ or 1; a zero-probability edge is simply absent.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::BitString;
use crate::error::Error;
use crate::lang::{start_state, transitions, Prob, ProgState, Program};
use crate::{Rational, Result};

/// Resource caps for chain construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 1 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    states: Vec<ProgState>,
    /// Copy number per state: 0 in built chains, 1 or 2 after normalization.
    copies: Vec<u8>,
    start: usize,
    labels: Vec<Option<BitString>>,
    edges: Vec<Vec<(usize, Prob)>>,
    n_inputs: usize,
    n_vars: usize,
    n_outputs: usize,
}

/// Breadth-first enumeration of the states reachable on `input`.
pub fn build_chain(prog: &Program, input: &BitString, limits: &Limits) -> Result<Chain> {
    let start = start_state(prog, input)?;
    let mut seen: BTreeMap<ProgState, usize> = BTreeMap::new();
    let mut order: Vec<ProgState> = Vec::new();
    let mut raw_edges: Vec<Vec<(usize, Prob)>> = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone(), 0);
    order.push(start.clone());
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        let mut out = Vec::with_capacity(2);
        for (t, p) in transitions(prog, &s)? {
            let id = match seen.get(&t) {
                Some(&id) => id,
                None => {
                    let id = order.len();
                    if id >= limits.max_states {
                        return Err(Error::StateBudget {
                            limit: limits.max_states,
                        });
                    }
                    seen.insert(t.clone(), id);
                    order.push(t.clone());
                    queue.push_back(t);
                    id
                }
            };
            out.push((id, p));
        }
        raw_edges.push(out);
    }

    // `seen` iterates in state order; renumber accordingly.
    let mut rank = vec![0usize; order.len()];
    for (new, (_, &old)) in seen.iter().enumerate() {
        rank[old] = new;
    }
    let states: Vec<ProgState> = seen.into_keys().collect();
    let mut edges = vec![Vec::new(); states.len()];
    for (old, out) in raw_edges.into_iter().enumerate() {
        let mut out: Vec<(usize, Prob)> = out.into_iter().map(|(t, p)| (rank[t], p)).collect();
        out.sort();
        edges[rank[old]] = out;
    }
    let fin = prog.final_line();
    let labels = states
        .iter()
        .map(|s| (s.line == fin).then(|| prog.outcome_of(&s.memory)))
        .collect();
    Ok(Chain {
        copies: vec![0; states.len()],
        start: rank[0],
        states,
        labels,
        edges,
        n_inputs: prog.n_inputs(),
        n_vars: prog.n_vars(),
        n_outputs: prog.n_outputs(),
    })
}

impl Chain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn state(&self, i: usize) -> &ProgState {
        &self.states[i]
    }

    pub fn states(&self) -> &[ProgState] {
        &self.states
    }

    pub fn copy(&self, i: usize) -> u8 {
        self.copies[i]
    }

    pub fn is_final(&self, i: usize) -> bool {
        self.labels[i].is_some()
    }

    /// Outcome label of a final state.
    pub fn label(&self, i: usize) -> Option<&BitString> {
        self.labels[i].as_ref()
    }

    /// Final states with their labels, in index order.
    pub fn finals(&self) -> impl Iterator<Item = (usize, &BitString)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.as_ref().map(|l| (i, l)))
    }

    pub fn edges(&self, i: usize) -> &[(usize, Prob)] {
        &self.edges[i]
    }

    pub fn n_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// `p_uw`, zero when there is no edge.
    pub fn prob(&self, u: usize, w: usize) -> Rational {
        self.edges[u]
            .iter()
            .find(|(t, _)| *t == w)
            .map_or_else(|| Rational::from_integer(0.into()), |(_, p)| p.to_rational())
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Index of a state of the built (unnormalized) chain.
    pub fn index_of(&self, s: &ProgState) -> Option<usize> {
        self.states.binary_search(s).ok()
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.len()];
        for (u, out) in self.edges.iter().enumerate() {
            for &(w, _) in out {
                preds[w].push(u);
            }
        }
        preds
    }

    /// States with a path to some final state (finals included).
    pub fn reaches_final(&self) -> Vec<bool> {
        let preds = self.predecessors();
        let mut alive = vec![false; self.len()];
        let mut stack: Vec<usize> = self.finals().map(|(i, _)| i).collect();
        for &f in &stack {
            alive[f] = true;
        }
        while let Some(w) = stack.pop() {
            for &u in &preds[w] {
                if !alive[u] {
                    alive[u] = true;
                    stack.push(u);
                }
            }
        }
        alive
    }
}

/// Rewrites the chain so that every non-final state has only ½-edges and no
/// parallel edges. Each state is split into two copies; a ½-edge `a → b`
/// becomes `a1 → b1` and `a2 → b2`, a 1-edge becomes all four cross edges
/// at ½. The start state keeps a single copy unless some edge enters it.
/// Finals keep their probability-1 self-loops, and hitting probabilities per
/// label are unchanged.
pub fn normalize_chain(c: &Chain) -> Chain {
    let start_entered = c
        .edges
        .iter()
        .enumerate()
        .any(|(u, out)| out.iter().any(|&(w, _)| w == c.start && u != c.start) || {
            u == c.start && out.iter().any(|&(w, _)| w == c.start)
        });
    let doubled = |i: usize| i != c.start || start_entered;

    let mut first = vec![0usize; c.len()];
    let mut states = Vec::new();
    let mut copies = Vec::new();
    let mut labels = Vec::new();
    for (i, slot) in first.iter_mut().enumerate() {
        *slot = states.len();
        let n = if doubled(i) { 2 } else { 1 };
        for k in 1..=n {
            states.push(c.states[i].clone());
            copies.push(k as u8);
            labels.push(c.labels[i].clone());
        }
    }
    let copy_ids = |i: usize| -> Vec<usize> {
        if doubled(i) {
            vec![first[i], first[i] + 1]
        } else {
            vec![first[i]]
        }
    };

    let mut edges = vec![Vec::new(); states.len()];
    for u in 0..c.len() {
        let us = copy_ids(u);
        if c.is_final(u) {
            for &x in &us {
                edges[x].push((x, Prob::One));
            }
            continue;
        }
        for &(w, p) in &c.edges[u] {
            let ws = copy_ids(w);
            match p {
                Prob::Half => {
                    for (k, &x) in us.iter().enumerate() {
                        edges[x].push((ws[k.min(ws.len() - 1)], Prob::Half));
                    }
                }
                Prob::One => {
                    for &x in &us {
                        for &y in &ws {
                            edges[x].push((y, Prob::Half));
                        }
                    }
                }
            }
        }
    }
    for out in &mut edges {
        out.sort();
    }
    let start = first[c.start];
    Chain {
        states,
        copies,
        start,
        labels,
        edges,
        n_inputs: c.n_inputs,
        n_vars: c.n_vars,
        n_outputs: c.n_outputs,
    }
}

/// Pruning of non-final states that cannot reach a final state.
pub trait ZeroRecurrent {
    fn zero_recurrent(self) -> Self;
}

/// Removes every edge incident to a non-final state with no path to a
/// final state.
pub fn zero_recurrent<T: ZeroRecurrent>(x: T) -> T {
    x.zero_recurrent()
}

impl ZeroRecurrent for Chain {
    fn zero_recurrent(mut self) -> Chain {
        let alive = self.reaches_final();
        for u in 0..self.len() {
            if !alive[u] {
                self.edges[u].clear();
            } else {
                self.edges[u].retain(|&(w, _)| alive[w]);
            }
        }
        self
    }
}

/// On-demand access to the transition probabilities `p_uw` of one run,
/// without materializing the chain.
#[derive(Debug, Clone)]
pub struct EdgeOracle<'a> {
    prog: &'a Program,
    input: BitString,
    zeroing: bool,
    limits: Limits,
}

impl<'a> EdgeOracle<'a> {
    pub fn new(prog: &'a Program, input: &BitString, limits: &Limits) -> Result<Self> {
        start_state(prog, input)?;
        Ok(EdgeOracle {
            prog,
            input: input.clone(),
            zeroing: false,
            limits: *limits,
        })
    }

    pub fn start(&self) -> ProgState {
        start_state(self.prog, &self.input).expect("input length checked in new")
    }

    pub fn input(&self) -> &BitString {
        &self.input
    }

    pub fn zeroing(&self) -> bool {
        self.zeroing
    }

    pub fn is_final(&self, s: &ProgState) -> bool {
        s.line == self.prog.final_line()
    }

    /// Forward search from `s` for a final state.
    pub fn can_reach_final(&self, s: &ProgState) -> Result<bool> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![s.clone()];
        seen.insert(s.clone());
        while let Some(u) = stack.pop() {
            if self.is_final(&u) {
                return Ok(true);
            }
            for (w, _) in transitions(self.prog, &u)? {
                if !seen.contains(&w) {
                    if seen.len() >= self.limits.max_states {
                        return Err(Error::StateBudget {
                            limit: self.limits.max_states,
                        });
                    }
                    seen.insert(w.clone());
                    stack.push(w);
                }
            }
        }
        Ok(false)
    }

    /// `p_uw`, or `None` for probability 0. With zeroing enabled, edges
    /// touching a non-final state that cannot reach a final are 0.
    pub fn prob(&self, u: &ProgState, w: &ProgState) -> Result<Option<Prob>> {
        let p = transitions(self.prog, u)?
            .into_iter()
            .find(|(t, _)| t == w)
            .map(|(_, p)| p);
        if p.is_none() || !self.zeroing {
            return Ok(p);
        }
        for s in [u, w] {
            if !self.is_final(s) && !self.can_reach_final(s)? {
                return Ok(None);
            }
        }
        Ok(p)
    }
}

impl ZeroRecurrent for EdgeOracle<'_> {
    fn zero_recurrent(mut self) -> Self {
        self.zeroing = true;
        self
    }
}
