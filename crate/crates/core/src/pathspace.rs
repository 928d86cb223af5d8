//! Finite discrete path space.
//!
//! A [`Lattice`] is a `K`-step tree of increments starting at 0. Nodes are
//! prefixes of alphabet indices; a node of full length `K` is a path. Paths
//! are numbered in lexicographic (mixed-radix) order, so the set of paths
//! extending a node is always a contiguous index range. Everything else in
//! the crate (random variables, measures, stopping rules) is stored in that
//! order.

use std::fmt;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_PATHS: usize = 1 << 26;

/// A node of the tree: the sequence of alphabet indices taken so far.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Node(Vec<usize>);

impl Node {
    pub fn root() -> Self {
        Node(Vec::new())
    }

    pub fn new(indices: Vec<usize>) -> Self {
        Node(indices)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn prefix(&self, len: usize) -> Node {
        Node(self.0[..len].to_vec())
    }

    pub fn child(&self, index: usize) -> Node {
        let mut v = self.0.clone();
        v.push(index);
        Node(v)
    }

    /// `self` followed by `tail`.
    pub fn join(&self, tail: &Node) -> Node {
        let mut v = self.0.clone();
        v.extend_from_slice(&tail.0);
        Node(v)
    }

    /// The part of `self` after its first `len` entries.
    pub fn suffix(&self, len: usize) -> Node {
        Node(self.0[len..].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Node) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Paths are nodes of full length.
pub type PathId = Node;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lattice {
    dt: f64,
    alphabet: Vec<Vec<f64>>,
    #[serde(skip)]
    level_sizes: Vec<usize>,
    #[serde(skip)]
    level_offsets: Vec<usize>,
    #[serde(skip)]
    block_sizes: Vec<usize>,
}

impl Lattice {
    /// Builds a lattice from per-step increment alphabets (`alphabet[k]` holds
    /// the increments allowed for the move from time `k` to `k+1`).
    pub fn new(alphabet: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidLattice(
                "at least one step is required".into(),
            ));
        }
        Self::from_parts(alphabet, dt)
    }

    /// Same increment alphabet at every step.
    pub fn homogeneous(num_steps: usize, dt: f64, increments: Vec<f64>) -> Result<Self> {
        Self::new(vec![increments; num_steps], dt)
    }

    fn from_parts(alphabet: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidLattice(format!(
                "dt must be positive, got {dt}"
            )));
        }
        for (k, step) in alphabet.iter().enumerate() {
            if step.is_empty() {
                return Err(Error::InvalidLattice(format!(
                    "step {k} has an empty alphabet"
                )));
            }
            if step.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidLattice(format!(
                    "step {k} has a non-finite increment"
                )));
            }
            for i in 0..step.len() {
                if step[i + 1..].contains(&step[i]) {
                    return Err(Error::InvalidLattice(format!(
                        "step {k} repeats increment {}",
                        step[i]
                    )));
                }
            }
        }
        let k = alphabet.len();
        let mut level_sizes = Vec::with_capacity(k + 1);
        level_sizes.push(1usize);
        for step in &alphabet {
            let next = level_sizes
                .last()
                .unwrap()
                .checked_mul(step.len())
                .filter(|n| *n <= MAX_PATHS)
                .ok_or_else(|| Error::InvalidLattice("too many paths".into()))?;
            level_sizes.push(next);
        }
        let mut level_offsets = Vec::with_capacity(k + 2);
        let mut acc = 0;
        for n in &level_sizes {
            level_offsets.push(acc);
            acc += n;
        }
        level_offsets.push(acc);
        let mut block_sizes = vec![1usize; k + 1];
        for j in (0..k).rev() {
            block_sizes[j] = block_sizes[j + 1] * alphabet[j].len();
        }
        Ok(Lattice {
            dt,
            alphabet,
            level_sizes,
            level_offsets,
            block_sizes,
        })
    }

    /// The lattice of continuations after time `j` (steps `j..K`). May have
    /// zero steps when `j == K`.
    pub fn suffix(&self, j: usize) -> Lattice {
        Self::from_parts(self.alphabet[j..].to_vec(), self.dt)
            .expect("suffix of a valid lattice is valid")
    }

    pub fn num_steps(&self) -> usize {
        self.alphabet.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn alphabet(&self, step: usize) -> &[f64] {
        &self.alphabet[step]
    }

    pub fn alphabets(&self) -> &[Vec<f64>] {
        &self.alphabet
    }

    pub fn branching(&self, step: usize) -> usize {
        self.alphabet[step].len()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.alphabet.windows(2).all(|w| w[0] == w[1])
    }

    pub fn num_paths(&self) -> usize {
        self.level_sizes[self.num_steps()]
    }

    pub fn level_size(&self, depth: usize) -> usize {
        self.level_sizes[depth]
    }

    pub fn num_nodes(&self) -> usize {
        self.level_offsets[self.num_steps() + 1]
    }

    /// Number of nodes with at least one child.
    pub fn num_nonterminal(&self) -> usize {
        self.level_offsets[self.num_steps()]
    }

    pub fn level_offset(&self, depth: usize) -> usize {
        self.level_offsets[depth]
    }

    pub fn contains(&self, node: &Node) -> bool {
        node.depth() <= self.num_steps()
            && node
                .indices()
                .iter()
                .enumerate()
                .all(|(k, &i)| i < self.alphabet[k].len())
    }

    /// Position of `node` among the nodes of its depth.
    pub fn level_index(&self, node: &Node) -> usize {
        node.indices()
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &i)| acc * self.alphabet[k].len() + i)
    }

    /// Position of `node` among all nodes, level by level.
    pub fn node_index(&self, node: &Node) -> usize {
        self.level_offsets[node.depth()] + self.level_index(node)
    }

    pub fn node_at(&self, depth: usize, level_index: usize) -> Node {
        let mut v = vec![0; depth];
        let mut rest = level_index;
        for k in (0..depth).rev() {
            let b = self.alphabet[k].len();
            v[k] = rest % b;
            rest /= b;
        }
        Node(v)
    }

    pub fn path_at(&self, index: usize) -> PathId {
        self.node_at(self.num_steps(), index)
    }

    pub fn path_index(&self, path: &PathId) -> usize {
        debug_assert_eq!(path.depth(), self.num_steps());
        self.level_index(path)
    }

    /// Index range of the paths extending `node`.
    pub fn block(&self, node: &Node) -> Range<usize> {
        let size = self.block_sizes[node.depth()];
        let start = self.level_index(node) * size;
        start..start + size
    }

    pub fn nodes_at(&self, depth: usize) -> impl Iterator<Item = Node> + '_ {
        (0..self.level_sizes[depth]).map(move |l| self.node_at(depth, l))
    }

    pub fn paths(&self) -> impl Iterator<Item = PathId> + '_ {
        self.nodes_at(self.num_steps())
    }

    /// All nodes, root first, level by level.
    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..=self.num_steps()).flat_map(move |j| self.nodes_at(j))
    }

    pub fn increments(&self, node: &Node) -> Vec<f64> {
        node.indices()
            .iter()
            .enumerate()
            .map(|(k, &i)| self.alphabet[k][i])
            .collect()
    }

    /// Path values `B_0 = 0, B_1, …, B_j` along a node of depth `j`.
    pub fn values(&self, node: &Node) -> Vec<f64> {
        let mut out = Vec::with_capacity(node.depth() + 1);
        let mut b = 0.0;
        out.push(b);
        for x in self.increments(node) {
            b += x;
            out.push(b);
        }
        out
    }

    pub fn value_at(&self, node: &Node) -> f64 {
        self.increments(node).iter().sum()
    }

    fn check_node(&self, node: &Node) -> Result<()> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "node {node} is not in the lattice"
            )))
        }
    }

    fn check_path(&self, path: &PathId) -> Result<()> {
        self.check_node(path)?;
        if path.depth() != self.num_steps() {
            return Err(Error::ShapeMismatch(format!("{path} is not a full path")));
        }
        Ok(())
    }
}

/// A real function of full paths, stored in path-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn from_values(lattice: &Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.num_paths() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} paths",
                values.len(),
                lattice.num_paths()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::ShapeMismatch("NaN is not an extended real".into()));
        }
        Ok(RandomVariable { values })
    }

    pub fn from_fn(lattice: &Lattice, f: impl Fn(&PathId) -> f64) -> Self {
        let values = lattice
            .paths()
            .map(|p| {
                let v = f(&p);
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            })
            .collect();
        RandomVariable { values }
    }

    pub fn constant(lattice: &Lattice, c: f64) -> Self {
        RandomVariable {
            values: vec![c; lattice.num_paths()],
        }
    }

    /// `B_K`, the terminal path value.
    pub fn terminal_value(lattice: &Lattice) -> Self {
        Self::from_fn(lattice, |p| lattice.value_at(p))
    }

    /// `B_τ`, the path value at the stopping rule.
    pub fn stopped_value(lattice: &Lattice, tau: &StoppingRule) -> Self {
        Self::from_fn(lattice, |p| {
            let t = tau.time(lattice.path_index(p));
            lattice.value_at(&p.prefix(t))
        })
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        RandomVariable { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, path_index: usize) -> f64 {
        self.values[path_index]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        RandomVariable {
            values: self
                .values
                .iter()
                .map(|&v| {
                    let y = f(v);
                    if y.is_nan() {
                        f64::NEG_INFINITY
                    } else {
                        y
                    }
                })
                .collect(),
        }
    }

    pub fn zip_with(&self, other: &RandomVariable, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(
            self.len(),
            other.len(),
            "random variables on different lattices"
        );
        RandomVariable {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| {
                    let y = f(a, b);
                    if y.is_nan() {
                        f64::NEG_INFINITY
                    } else {
                        y
                    }
                })
                .collect(),
        }
    }

    /// Restriction to the continuations of `node`, as a variable on
    /// `lattice.suffix(node.depth())`.
    pub fn restrict(&self, lattice: &Lattice, node: &Node) -> RandomVariable {
        RandomVariable {
            values: self.values[lattice.block(node)].to_vec(),
        }
    }

    /// `F_τ`-measurability: constant on the continuations of every boundary node.
    pub fn is_measurable(&self, lattice: &Lattice, tau: &StoppingRule) -> bool {
        tau.boundary().iter().all(|n| {
            let block = &self.values[lattice.block(n)];
            block.iter().all(|v| *v == block[0])
        })
    }
}

/// A stopping time given by its boundary: an antichain of nodes such that
/// every path has exactly one prefix in it. The per-path stopping times are
/// cached in path-index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingRule {
    boundary: Vec<Node>,
    times: Vec<usize>,
}

/// Two paths that agree up to the first one's stopping time but are
/// assigned different times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GalmarinoWitness {
    pub first: PathId,
    pub second: PathId,
    pub first_time: usize,
    pub second_time: usize,
}

/// Checks whether a path-indexed map of times is a stopping time: whenever
/// `τ(p) = j` and `q` agrees with `p` up to `j`, then `τ(q) = j`.
pub fn galmarino_witness(lattice: &Lattice, times: &[usize]) -> Option<GalmarinoWitness> {
    assert_eq!(times.len(), lattice.num_paths());
    let k = lattice.num_steps();
    for (pi, &t) in times.iter().enumerate() {
        assert!(t <= k, "stopping time {t} exceeds horizon {k}");
        let p = lattice.path_at(pi);
        let block = lattice.block(&p.prefix(t));
        if let Some(qi) = block.clone().find(|&qi| times[qi] != t) {
            return Some(GalmarinoWitness {
                first: p,
                second: lattice.path_at(qi),
                first_time: t,
                second_time: times[qi],
            });
        }
    }
    None
}

pub fn is_stopping_rule(lattice: &Lattice, times: &[usize]) -> bool {
    galmarino_witness(lattice, times).is_none()
}

impl StoppingRule {
    pub fn from_boundary(lattice: &Lattice, nodes: Vec<Node>) -> Result<Self> {
        let mut nodes = nodes;
        nodes.sort();
        let mut times = vec![usize::MAX; lattice.num_paths()];
        for n in &nodes {
            if !lattice.contains(n) {
                return Err(Error::InvalidStoppingRule(format!(
                    "node {n} is not in the lattice"
                )));
            }
            for pi in lattice.block(n) {
                if times[pi] != usize::MAX {
                    return Err(Error::InvalidStoppingRule(format!(
                        "boundary is not an antichain: {n} overlaps another boundary node"
                    )));
                }
                times[pi] = n.depth();
            }
        }
        if let Some(pi) = times.iter().position(|&t| t == usize::MAX) {
            return Err(Error::InvalidStoppingRule(format!(
                "path {} has no prefix in the boundary",
                lattice.path_at(pi)
            )));
        }
        Ok(StoppingRule {
            boundary: nodes,
            times,
        })
    }

    pub fn from_times(lattice: &Lattice, times: Vec<usize>) -> Result<Self> {
        if times.len() != lattice.num_paths() {
            return Err(Error::ShapeMismatch(format!(
                "{} times for {} paths",
                times.len(),
                lattice.num_paths()
            )));
        }
        if let Some(&t) = times.iter().find(|&&t| t > lattice.num_steps()) {
            return Err(Error::InvalidStoppingRule(format!(
                "time {t} exceeds the horizon"
            )));
        }
        if let Some(w) = galmarino_witness(lattice, &times) {
            return Err(Error::InvalidStoppingRule(format!(
                "paths {} and {} agree up to time {} but stop at {} and {}",
                w.first, w.second, w.first_time, w.first_time, w.second_time
            )));
        }
        let mut boundary: Vec<Node> = Vec::new();
        for (pi, &t) in times.iter().enumerate() {
            let n = lattice.path_at(pi).prefix(t);
            if boundary.last() != Some(&n) {
                boundary.push(n);
            }
        }
        boundary.sort();
        boundary.dedup();
        Ok(StoppingRule { boundary, times })
    }

    pub fn constant(lattice: &Lattice, j: usize) -> Result<Self> {
        if j > lattice.num_steps() {
            return Err(Error::InvalidStoppingRule(format!(
                "time {j} exceeds the horizon"
            )));
        }
        Ok(StoppingRule {
            boundary: lattice.nodes_at(j).collect(),
            times: vec![j; lattice.num_paths()],
        })
    }

    /// First time `|B_j| ≥ level`, or `K` if the level is never reached.
    pub fn hitting(lattice: &Lattice, level: f64) -> Self {
        let k = lattice.num_steps();
        let times = lattice
            .paths()
            .map(|p| {
                lattice
                    .values(&p)
                    .iter()
                    .position(|b| b.abs() >= level)
                    .unwrap_or(k)
            })
            .collect();
        Self::from_times(lattice, times).expect("hitting times are stopping times")
    }

    /// Random rule: at each node before the horizon, stop with probability
    /// `stop_prob`, otherwise branch.
    pub fn random<R: Rng + ?Sized>(lattice: &Lattice, rng: &mut R, stop_prob: f64) -> Self {
        let mut boundary = Vec::new();
        let mut stack = vec![Node::root()];
        while let Some(n) = stack.pop() {
            if n.depth() == lattice.num_steps() || rng.gen_bool(stop_prob) {
                boundary.push(n);
            } else {
                for c in (0..lattice.branching(n.depth())).rev() {
                    stack.push(n.child(c));
                }
            }
        }
        Self::from_boundary(lattice, boundary).expect("random boundary is valid")
    }

    /// Number of distinct stopping rules on the lattice (saturating).
    pub fn count(lattice: &Lattice) -> u128 {
        let mut f: u128 = 1;
        for j in (0..lattice.num_steps()).rev() {
            let mut prod: u128 = 1;
            for _ in 0..lattice.branching(j) {
                prod = prod.saturating_mul(f);
            }
            f = prod.saturating_add(1);
        }
        f
    }

    /// Every stopping rule, or `None` if there are more than `cap`.
    pub fn enumerate(lattice: &Lattice, cap: usize) -> Option<Vec<StoppingRule>> {
        if Self::count(lattice) > cap as u128 {
            return None;
        }
        fn below(lattice: &Lattice, n: &Node) -> Vec<Vec<Node>> {
            let mut out = vec![vec![n.clone()]];
            if n.depth() == lattice.num_steps() {
                return out;
            }
            let mut combos: Vec<Vec<Node>> = vec![Vec::new()];
            for c in 0..lattice.branching(n.depth()) {
                let sub = below(lattice, &n.child(c));
                let mut next = Vec::with_capacity(combos.len() * sub.len());
                for prefix in &combos {
                    for s in &sub {
                        let mut v = prefix.clone();
                        v.extend(s.iter().cloned());
                        next.push(v);
                    }
                }
                combos = next;
            }
            out.extend(combos);
            out
        }
        Some(
            below(lattice, &Node::root())
                .into_iter()
                .map(|b| Self::from_boundary(lattice, b).expect("enumerated boundary is valid"))
                .collect(),
        )
    }

    pub fn boundary(&self) -> &[Node] {
        &self.boundary
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn time(&self, path_index: usize) -> usize {
        self.times[path_index]
    }

    pub fn stopped_node(&self, lattice: &Lattice, path_index: usize) -> Node {
        lattice.path_at(path_index).prefix(self.times[path_index])
    }

    /// Pointwise `self ≤ other`.
    pub fn precedes(&self, other: &StoppingRule) -> bool {
        self.times.iter().zip(&other.times).all(|(a, b)| a <= b)
    }

    /// Pointwise minimum.
    pub fn min(&self, lattice: &Lattice, other: &StoppingRule) -> StoppingRule {
        let times = self
            .times
            .iter()
            .zip(&other.times)
            .map(|(a, b)| *a.min(b))
            .collect();
        Self::from_times(lattice, times).expect("minimum of stopping times is a stopping time")
    }

    /// The rule seen from `node`: `θ(ω̃) = τ(node ⊗ ω̃) − depth(node)` on
    /// `lattice.suffix(node.depth())`. Requires `τ ≥ depth(node)` on the
    /// node's continuations.
    pub fn shift_at(&self, lattice: &Lattice, node: &Node) -> Result<StoppingRule> {
        let j = node.depth();
        let block = lattice.block(node);
        if let Some(pi) = block.clone().find(|&pi| self.times[pi] < j) {
            return Err(Error::PrecedenceViolation(lattice.path_at(pi)));
        }
        let sub = lattice.suffix(j);
        let times = self.times[block].iter().map(|t| t - j).collect();
        Self::from_times(&sub, times)
    }

    /// `θ = (τ − σ)^{σ,ω}` for `σ ≤ τ`.
    pub fn shifted(
        &self,
        lattice: &Lattice,
        sigma: &StoppingRule,
        omega: &PathId,
    ) -> Result<StoppingRule> {
        let pi = lattice.path_index(omega);
        self.shift_at(lattice, &omega.prefix(sigma.time(pi)))
    }
}

/// `ω ⊗_τ ω̃`: the first `τ(ω)` increments of `ω`, followed by the first
/// `K − τ(ω)` increments of `ω̃` placed at the later steps.
pub fn concat(
    lattice: &Lattice,
    omega: &PathId,
    tau: &StoppingRule,
    omega2: &PathId,
) -> Result<PathId> {
    lattice.check_path(omega)?;
    lattice.check_path(omega2)?;
    let t = tau.time(lattice.path_index(omega));
    let k = lattice.num_steps();
    let mut out = omega.indices()[..t].to_vec();
    for u in 0..k - t {
        let src = omega2.indices()[u];
        if lattice.alphabet(u) == lattice.alphabet(t + u) {
            out.push(src);
        } else {
            let value = lattice.alphabet(u)[src];
            let dst = lattice
                .alphabet(t + u)
                .iter()
                .position(|x| *x == value)
                .ok_or(Error::AlphabetMismatch { step: t + u, value })?;
            out.push(dst);
        }
    }
    Ok(Node(out))
}

/// `ω^τ`: the increments of `ω` after `τ(ω)`, as a path of
/// `lattice.suffix(τ(ω))`.
pub fn shift_path(lattice: &Lattice, omega: &PathId, tau: &StoppingRule) -> PathId {
    omega.suffix(tau.time(lattice.path_index(omega)))
}

/// `ξ^{τ,ω}(ω̃) = ξ(ω ⊗_τ ω̃)`, a variable on `lattice.suffix(τ(ω))`. Depends
/// on `ω` only through its stopped prefix.
pub fn shift_rv(
    lattice: &Lattice,
    xi: &RandomVariable,
    tau: &StoppingRule,
    omega: &PathId,
) -> RandomVariable {
    let node = tau.stopped_node(lattice, lattice.path_index(omega));
    xi.restrict(lattice, &node)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm1(k: usize) -> Lattice {
        Lattice::homogeneous(k, 1.0, vec![-1.0, 1.0]).unwrap()
    }

    #[test]
    fn indexing_is_consistent() {
        let l = Lattice::new(vec![vec![-1.0, 0.0, 1.0], vec![-2.0, 2.0]], 0.5).unwrap();
        assert_eq!(l.num_paths(), 6);
        assert_eq!(l.num_nodes(), 1 + 3 + 6);
        assert_eq!(l.num_nonterminal(), 4);
        for (i, p) in l.paths().enumerate() {
            assert_eq!(l.path_index(&p), i);
        }
        assert_eq!(l.block(&Node::new(vec![1])), 2..4);
        assert_eq!(l.node_index(&Node::new(vec![2, 1])), 4 + 5);
        assert_eq!(l.values(&Node::new(vec![2, 0])), vec![0.0, 1.0, -1.0]);
    }

    #[test]
    fn lattice_validation() {
        assert!(Lattice::new(vec![], 1.0).is_err());
        assert!(Lattice::new(vec![vec![1.0]], 0.0).is_err());
        assert!(Lattice::new(vec![vec![]], 1.0).is_err());
        assert!(Lattice::new(vec![vec![1.0, 1.0]], 1.0).is_err());
    }

    #[test]
    fn concat_examples() {
        let l = pm1(2);
        let up_up = Node::new(vec![1, 1]);
        let down_x = Node::new(vec![0, 1]);
        let t0 = StoppingRule::constant(&l, 0).unwrap();
        let t1 = StoppingRule::constant(&l, 1).unwrap();
        let t2 = StoppingRule::constant(&l, 2).unwrap();
        assert_eq!(concat(&l, &up_up, &t0, &down_x).unwrap(), down_x);
        assert_eq!(concat(&l, &up_up, &t2, &down_x).unwrap(), up_up);
        assert_eq!(
            concat(&l, &up_up, &t1, &down_x).unwrap(),
            Node::new(vec![1, 0])
        );
    }

    #[test]
    fn concat_maps_values_across_inhomogeneous_steps() {
        let l = Lattice::new(vec![vec![-1.0, 1.0], vec![1.0, -1.0, 3.0]], 1.0).unwrap();
        let t1 = StoppingRule::constant(&l, 1).unwrap();
        // ω̃ starts with +1 (index 1 at step 0), which is index 0 at step 1
        let out = concat(&l, &Node::new(vec![0, 2]), &t1, &Node::new(vec![1, 0])).unwrap();
        assert_eq!(out, Node::new(vec![0, 0]));

        let l = Lattice::new(vec![vec![-2.0, 2.0], vec![-1.0, 1.0]], 1.0).unwrap();
        let t1 = StoppingRule::constant(&l, 1).unwrap();
        let err = concat(&l, &Node::new(vec![0, 0]), &t1, &Node::new(vec![1, 0])).unwrap_err();
        assert_eq!(
            err,
            Error::AlphabetMismatch {
                step: 1,
                value: 2.0
            }
        );
    }

    #[test]
    fn shift_path_examples() {
        let l = pm1(3);
        let w = Node::new(vec![1, 0, 1]);
        assert_eq!(
            shift_path(&l, &w, &StoppingRule::constant(&l, 0).unwrap()),
            w
        );
        assert_eq!(
            shift_path(&l, &w, &StoppingRule::constant(&l, 3).unwrap()),
            Node::root()
        );
        assert_eq!(
            shift_path(&l, &w, &StoppingRule::constant(&l, 1).unwrap()),
            Node::new(vec![0, 1])
        );
    }

    #[test]
    fn shift_rv_examples() {
        let l = pm1(3);
        let tau = StoppingRule::constant(&l, 1).unwrap();
        let c = RandomVariable::constant(&l, 2.5);
        let w = Node::new(vec![1, 0, 0]);
        assert!(shift_rv(&l, &c, &tau, &w)
            .values()
            .iter()
            .all(|v| *v == 2.5));

        let bt = RandomVariable::stopped_value(&l, &tau);
        let shifted = shift_rv(&l, &bt, &tau, &w);
        assert!(shifted.values().iter().all(|v| *v == 1.0));

        let bk = RandomVariable::terminal_value(&l);
        let sub = l.suffix(1);
        let shifted = shift_rv(&l, &bk, &tau, &w);
        for (i, p) in sub.paths().enumerate() {
            assert_eq!(shifted.value(i), 1.0 + sub.value_at(&p));
        }
    }

    #[test]
    fn stopping_rule_examples() {
        let l = pm1(3);
        let hit = StoppingRule::hitting(&l, 1.0);
        assert!(is_stopping_rule(&l, hit.times()));
        assert!(hit.times().iter().all(|&t| t == 1));
        let hit2 = StoppingRule::hitting(&l, 2.0);
        assert!(is_stopping_rule(&l, hit2.times()));

        let future: Vec<usize> = l
            .paths()
            .map(|p| if l.value_at(&p) > 0.0 { 3 } else { 0 })
            .collect();
        let w = galmarino_witness(&l, &future).expect("depends on the future");
        assert_eq!(w.first.prefix(w.first_time), w.second.prefix(w.first_time));
        assert_ne!(w.first_time, w.second_time);
        assert!(StoppingRule::from_times(&l, future).is_err());

        for j in 0..=3 {
            assert!(is_stopping_rule(
                &l,
                StoppingRule::constant(&l, j).unwrap().times()
            ));
        }
    }

    #[test]
    fn boundary_validation() {
        let l = pm1(2);
        let root = Node::root();
        let up = Node::new(vec![1]);
        assert!(StoppingRule::from_boundary(&l, vec![root.clone(), up.clone()]).is_err());
        assert!(StoppingRule::from_boundary(&l, vec![up.clone()]).is_err());
        let r =
            StoppingRule::from_boundary(&l, vec![up, Node::new(vec![0, 0]), Node::new(vec![0, 1])])
                .unwrap();
        assert_eq!(r.times(), &[2, 2, 1, 1]);
    }

    #[test]
    fn measurability_examples() {
        let l = pm1(2);
        let tau = StoppingRule::hitting(&l, 2.0);
        assert!(RandomVariable::stopped_value(&l, &tau).is_measurable(&l, &tau));
        let t0 = StoppingRule::constant(&l, 0).unwrap();
        assert!(!RandomVariable::terminal_value(&l).is_measurable(&l, &t0));
        let tk = StoppingRule::constant(&l, 2).unwrap();
        assert!(RandomVariable::terminal_value(&l).is_measurable(&l, &tk));
    }

    #[test]
    fn rule_counts() {
        assert_eq!(StoppingRule::count(&pm1(1)), 2);
        assert_eq!(StoppingRule::count(&pm1(2)), 5);
        assert_eq!(StoppingRule::count(&pm1(3)), 26);
        let all = StoppingRule::enumerate(&pm1(3), 100).unwrap();
        assert_eq!(all.len(), 26);
        let mut b: Vec<_> = all.iter().map(|r| r.boundary().to_vec()).collect();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 26);
        assert!(StoppingRule::enumerate(&pm1(3), 10).is_none());
    }
}
