//! Probability measures on a lattice, given by one-step transition laws.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext;
use crate::pathspace::{Lattice, Node, PathId, RandomVariable, StoppingRule};

/// Tolerance for probability sums and martingale drift.
pub const PROB_TOL: f64 = 1e-12;

/// Checks that `law` is a probability vector of length `len`.
pub fn validate_law(law: &[f64], len: usize) -> std::result::Result<(), String> {
    if law.len() != len {
        return Err(format!("law has {} entries, expected {len}", law.len()));
    }
    if law.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err("law has a negative or non-finite entry".into());
    }
    let s: f64 = law.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(format!("law sums to {s}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeMeasure {
    lattice: Lattice,
    /// One law per non-terminal node, in `Lattice::node_index` order.
    transitions: Vec<Vec<f64>>,
}

impl TreeMeasure {
    pub fn new(lattice: Lattice, transitions: Vec<Vec<f64>>) -> Result<Self> {
        if transitions.len() != lattice.num_nonterminal() {
            return Err(Error::InvalidMeasure(format!(
                "{} transition laws for {} non-terminal nodes",
                transitions.len(),
                lattice.num_nonterminal()
            )));
        }
        for j in 0..lattice.num_steps() {
            let off = lattice.level_offset(j);
            for l in 0..lattice.level_size(j) {
                validate_law(&transitions[off + l], lattice.branching(j)).map_err(|e| {
                    Error::InvalidMeasure(format!("at node {}: {e}", lattice.node_at(j, l)))
                })?;
            }
        }
        Ok(TreeMeasure {
            lattice,
            transitions,
        })
    }

    pub fn from_fn(lattice: Lattice, law: impl Fn(&Node) -> Vec<f64>) -> Result<Self> {
        let transitions = (0..lattice.num_steps())
            .flat_map(|j| lattice.nodes_at(j).collect::<Vec<_>>())
            .map(|n| law(&n))
            .collect();
        Self::new(lattice, transitions)
    }

    pub fn uniform(lattice: Lattice) -> Self {
        Self::from_fn(lattice.clone(), |n| {
            let b = lattice.branching(n.depth());
            vec![1.0 / b as f64; b]
        })
        .expect("uniform laws are valid")
    }

    pub(crate) fn from_raw(lattice: Lattice, transitions: Vec<Vec<f64>>) -> Self {
        TreeMeasure {
            lattice,
            transitions,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    pub fn transition(&self, node: &Node) -> &[f64] {
        &self.transitions[self.lattice.node_index(node)]
    }

    /// Probability of reaching every node, in `Lattice::node_index` order.
    pub fn node_probs(&self) -> Vec<f64> {
        let l = &self.lattice;
        let mut out = vec![0.0; l.num_nodes()];
        out[0] = 1.0;
        for j in 0..l.num_steps() {
            let b = l.branching(j);
            let (off, next) = (l.level_offset(j), l.level_offset(j + 1));
            for i in 0..l.level_size(j) {
                let p = out[off + i];
                let law = &self.transitions[off + i];
                for c in 0..b {
                    out[next + i * b + c] = p * law[c];
                }
            }
        }
        out
    }

    pub fn path_probs(&self) -> Vec<f64> {
        let l = &self.lattice;
        let k = l.num_steps();
        let mut probs = self.node_probs();
        probs.drain(..l.level_offset(k));
        probs
    }

    pub fn node_prob(&self, node: &Node) -> f64 {
        (0..node.depth())
            .map(|j| self.transition(&node.prefix(j))[node.indices()[j]])
            .product()
    }

    /// Path probabilities of the continuations of `node`, conditional on
    /// reaching it (ignoring whether it is reachable).
    pub fn conditional_path_probs(&self, node: &Node) -> Vec<f64> {
        let l = &self.lattice;
        let mut probs = vec![1.0];
        let mut frontier = vec![node.clone()];
        for j in node.depth()..l.num_steps() {
            let b = l.branching(j);
            let mut next_probs = Vec::with_capacity(probs.len() * b);
            let mut next_frontier = Vec::with_capacity(probs.len() * b);
            for (p, n) in probs.iter().zip(&frontier) {
                let law = self.transition(n);
                for (c, q) in law.iter().enumerate() {
                    next_probs.push(p * q);
                    next_frontier.push(n.child(c));
                }
            }
            probs = next_probs;
            frontier = next_frontier;
        }
        probs
    }

    /// The restriction of the transition laws to the subtree at `node`, as a
    /// measure on `lattice.suffix(node.depth())`.
    pub fn subtree(&self, node: &Node) -> TreeMeasure {
        let sub = self.lattice.suffix(node.depth());
        let transitions = (0..sub.num_steps())
            .flat_map(|j| sub.nodes_at(j).collect::<Vec<_>>())
            .map(|m| self.transition(&node.join(&m)).to_vec())
            .collect();
        TreeMeasure::from_raw(sub, transitions)
    }

    /// Equality as measures on paths (transition laws at unreachable nodes
    /// are irrelevant).
    pub fn same_law(&self, other: &TreeMeasure, tol: f64) -> bool {
        self.lattice == other.lattice
            && self
                .path_probs()
                .iter()
                .zip(other.path_probs())
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// `E^P[ξ] = E^P[ξ⁺] − E^P[ξ⁻]`, with `−∞` when both parts are infinite.
/// Paths of probability zero are not evaluated.
pub fn expectation(p: &TreeMeasure, xi: &RandomVariable) -> f64 {
    debug_assert_eq!(xi.len(), p.lattice().num_paths());
    ext::weighted_sum(p.path_probs().into_iter().zip(xi.values().iter().copied()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalExpectation {
    pub values: RandomVariable,
    /// Boundary nodes of probability zero, where the value is set to `−∞`.
    pub null_nodes: Vec<Node>,
}

/// `E^P[ξ | F_τ]`, node by node on the boundary of `τ`.
pub fn conditional_expectation(
    p: &TreeMeasure,
    xi: &RandomVariable,
    tau: &StoppingRule,
) -> ConditionalExpectation {
    let l = p.lattice();
    let node_probs = p.node_probs();
    let mut values = vec![ext::NEG_INF; l.num_paths()];
    let mut null_nodes = Vec::new();
    for n in tau.boundary() {
        let block = l.block(n);
        let v = if node_probs[l.node_index(n)] > 0.0 {
            let cond = p.conditional_path_probs(n);
            ext::weighted_sum(
                cond.into_iter()
                    .zip(xi.values()[block.clone()].iter().copied()),
            )
        } else {
            null_nodes.push(n.clone());
            ext::NEG_INF
        };
        values[block].iter_mut().for_each(|x| *x = v);
    }
    ConditionalExpectation {
        values: RandomVariable::from_raw(values),
        null_nodes,
    }
}

/// `P^{τ,ω}`: `P` conditioned on the stopped prefix of `ω`, re-based at the
/// origin of `lattice.suffix(τ(ω))`.
pub fn rcpd_shift(p: &TreeMeasure, tau: &StoppingRule, omega: &PathId) -> Result<TreeMeasure> {
    let l = p.lattice();
    let node = tau.stopped_node(l, l.path_index(omega));
    if p.node_prob(&node) <= 0.0 {
        return Err(Error::NullPrefix(node));
    }
    Ok(p.subtree(&node))
}

/// Kernel on a stopping boundary: boundary node → measure on the
/// continuation lattice of that node.
pub type Kernel = BTreeMap<Node, TreeMeasure>;

/// `P̄(A) = ∬ (1_A)^{θ,ω}(ω′) ν(dω′; ω) P(dω)`: follow `P` up to the boundary
/// of `θ`, then `ν(n)` below each boundary node `n`.
///
/// Boundary nodes that `P` does not reach may be left out of `nu`; the
/// laws of `P` are kept there.
pub fn paste(p: &TreeMeasure, theta: &StoppingRule, nu: &Kernel) -> Result<TreeMeasure> {
    let l = p.lattice();
    let node_probs = p.node_probs();
    for n in theta.boundary() {
        match nu.get(n) {
            Some(m) => {
                if *m.lattice() != l.suffix(n.depth()) {
                    return Err(Error::ShapeMismatch(format!(
                        "kernel measure at {n} lives on the wrong lattice"
                    )));
                }
            }
            None if node_probs[l.node_index(n)] > 0.0 => {
                return Err(Error::MissingKernel(n.clone()));
            }
            None => {}
        }
    }
    let mut transitions = Vec::with_capacity(l.num_nonterminal());
    for j in 0..l.num_steps() {
        for m in l.nodes_at(j) {
            let t = theta.time(l.block(&m).start);
            let law = if t <= j {
                let b = m.prefix(t);
                match nu.get(&b) {
                    Some(q) => q.transition(&m.suffix(t)).to_vec(),
                    None => p.transition(&m).to_vec(),
                }
            } else {
                p.transition(&m).to_vec()
            };
            transitions.push(law);
        }
    }
    Ok(TreeMeasure::from_raw(l.clone(), transitions))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleCheck {
    pub holds: bool,
    pub witness: Option<Node>,
    pub drift: f64,
}

/// Zero one-step drift at every reachable non-terminal node, within `tol`.
/// Reports the first offending node in node order.
pub fn martingale_check(p: &TreeMeasure, tol: f64) -> MartingaleCheck {
    let l = p.lattice();
    let probs = p.node_probs();
    for j in 0..l.num_steps() {
        let off = l.level_offset(j);
        for i in 0..l.level_size(j) {
            if probs[off + i] <= 0.0 {
                continue;
            }
            let drift: f64 = p.transitions[off + i]
                .iter()
                .zip(l.alphabet(j))
                .map(|(q, x)| q * x)
                .sum();
            if drift.abs() > tol {
                return MartingaleCheck {
                    holds: false,
                    witness: Some(l.node_at(j, i)),
                    drift,
                };
            }
        }
    }
    MartingaleCheck {
        holds: true,
        witness: None,
        drift: 0.0,
    }
}

pub fn is_martingale_measure(p: &TreeMeasure) -> bool {
    martingale_check(p, PROB_TOL).holds
}

/// Realized quadratic variation along a node or path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedQv {
    /// `qv[k] = Σ_{j≤k} (ΔB_j)²`, with `qv[0] = 0`.
    pub qv: Vec<f64>,
    /// `rate[k-1] = (ΔB_k)² / dt` for steps `k = 1..=K`.
    pub rate: Vec<f64>,
}

pub fn realized_qv(lattice: &Lattice, omega: &Node) -> RealizedQv {
    realized_qv_from_increments(&lattice.increments(omega), lattice.dt())
}

/// Same as [`realized_qv`] for a bare increment sequence.
pub fn realized_qv_from_increments(increments: &[f64], dt: f64) -> RealizedQv {
    let mut qv = Vec::with_capacity(increments.len() + 1);
    let mut rate = Vec::with_capacity(increments.len());
    let mut acc = 0.0;
    qv.push(acc);
    for x in increments {
        let sq = x * x;
        acc += sq;
        qv.push(acc);
        rate.push(sq / dt);
    }
    RealizedQv { qv, rate }
}

/// Trailing moving average of a per-step rate series over
/// `min(window, k)` steps.
pub fn windowed_density(rate: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    (0..rate.len())
        .map(|k| {
            let lo = (k + 1).saturating_sub(window);
            let w = &rate[lo..=k];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}
