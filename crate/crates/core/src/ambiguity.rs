//! Scenario families `{P(j, n)}`: for every node `n` at depth `j`, a set of
//! measures on the continuation lattice of `n`.
//!
//! Two representations are supported. A [`RectangularFamily`] attaches a set
//! of one-step laws to every non-terminal node and lets `P(j, n)` be every
//! way of choosing one law per node below `n`. An [`ExplicitFamily`] lists
//! the measures at each node directly, which is how families that break
//! invariance or pasting are built.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{paste, validate_law, Kernel, TreeMeasure, PROB_TOL};
use crate::pathspace::{Lattice, Node, StoppingRule};

/// Default cap on the number of measures a single enumeration may produce.
pub const DEFAULT_MAX_ENUM: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RectangularFamily {
    lattice: Lattice,
    /// Per non-terminal node (in `Lattice::node_index` order), its one-step laws.
    laws: Vec<Vec<Vec<f64>>>,
}

impl RectangularFamily {
    /// Exact duplicate laws at a node are dropped, keeping first occurrences.
    pub fn new(lattice: Lattice, laws: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if laws.len() != lattice.num_nonterminal() {
            return Err(Error::InvalidFamily(format!(
                "{} law sets for {} non-terminal nodes",
                laws.len(),
                lattice.num_nonterminal()
            )));
        }
        let mut out = Vec::with_capacity(laws.len());
        for (idx, set) in laws.into_iter().enumerate() {
            let depth = (0..lattice.num_steps())
                .rev()
                .find(|&j| lattice.level_offset(j) <= idx)
                .unwrap();
            let node = lattice.node_at(depth, idx - lattice.level_offset(depth));
            if set.is_empty() {
                return Err(Error::InvalidFamily(format!("node {node} has no laws")));
            }
            let mut kept: Vec<Vec<f64>> = Vec::with_capacity(set.len());
            for law in set {
                validate_law(&law, lattice.branching(depth))
                    .map_err(|e| Error::InvalidFamily(format!("at node {node}: {e}")))?;
                if !kept.contains(&law) {
                    kept.push(law);
                }
            }
            out.push(kept);
        }
        Ok(RectangularFamily { lattice, laws: out })
    }

    pub fn from_fn(lattice: Lattice, laws: impl Fn(&Node) -> Vec<Vec<f64>>) -> Result<Self> {
        let sets = (0..lattice.num_steps())
            .flat_map(|j| lattice.nodes_at(j).collect::<Vec<_>>())
            .map(|n| laws(&n))
            .collect();
        Self::new(lattice, sets)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn laws_at(&self, node: &Node) -> &[Vec<f64>] {
        &self.laws[self.lattice.node_index(node)]
    }

    /// Number of distinct measures in `P(j, node)`. Choices at nodes that the
    /// earlier choices make unreachable do not multiply the count.
    pub fn count(&self, node: &Node) -> u128 {
        let l = &self.lattice;
        let k = l.num_steps();
        let j0 = node.depth();
        if j0 == k {
            return 1;
        }
        let sub = l.suffix(j0);
        // counts for the level below, indexed by sub-level index
        let mut below: Vec<u128> = vec![1; sub.level_size(sub.num_steps())];
        for j in (0..sub.num_steps()).rev() {
            let b = sub.branching(j);
            below = (0..sub.level_size(j))
                .map(|i| {
                    let m = node.join(&sub.node_at(j, i));
                    self.laws_at(&m)
                        .iter()
                        .map(|law| {
                            (0..b)
                                .filter(|&c| law[c] > 0.0)
                                .fold(1u128, |acc, c| acc.saturating_mul(below[i * b + c]))
                        })
                        .fold(0u128, |acc, x| acc.saturating_add(x))
                })
                .collect();
        }
        below[0]
    }

    fn enumerate(&self, node: &Node) -> Vec<TreeMeasure> {
        let sub = self.lattice.suffix(node.depth());
        let order: Vec<(usize, Node)> = (0..sub.num_steps())
            .flat_map(|j| sub.nodes_at(j).map(move |m| (j, m)))
            .collect();
        let family_laws: Vec<&[Vec<f64>]> = order
            .iter()
            .map(|(_, m)| self.laws_at(&node.join(m)))
            .collect();
        let mut transitions: Vec<Vec<f64>> = family_laws.iter().map(|s| s[0].clone()).collect();
        let mut reachable = vec![false; sub.num_nodes()];
        reachable[0] = true;
        let mut out = Vec::new();

        struct Ctx<'a> {
            sub: &'a Lattice,
            order: &'a [(usize, Node)],
            laws: &'a [&'a [Vec<f64>]],
        }

        fn rec(
            ctx: &Ctx<'_>,
            pos: usize,
            transitions: &mut Vec<Vec<f64>>,
            reachable: &mut Vec<bool>,
            out: &mut Vec<TreeMeasure>,
        ) {
            if pos == ctx.order.len() {
                out.push(TreeMeasure::from_raw(ctx.sub.clone(), transitions.clone()));
                return;
            }
            let (j, m) = &ctx.order[pos];
            let b = ctx.sub.branching(*j);
            let child0 = ctx.sub.level_offset(j + 1) + ctx.sub.level_index(m) * b;
            if !reachable[pos] {
                transitions[pos] = ctx.laws[pos][0].clone();
                for c in 0..b {
                    reachable[child0 + c] = false;
                }
                rec(ctx, pos + 1, transitions, reachable, out);
                return;
            }
            for law in ctx.laws[pos] {
                transitions[pos] = law.clone();
                for c in 0..b {
                    reachable[child0 + c] = law[c] > 0.0;
                }
                rec(ctx, pos + 1, transitions, reachable, out);
            }
        }

        let ctx = Ctx {
            sub: &sub,
            order: &order,
            laws: &family_laws,
        };
        rec(&ctx, 0, &mut transitions, &mut reachable, &mut out);
        out
    }

    /// Membership as a measure: every law the measure uses at a node it
    /// reaches is one of that node's laws.
    fn contains(&self, node: &Node, measure: &TreeMeasure) -> bool {
        let sub = measure.lattice();
        if *sub != self.lattice.suffix(node.depth()) {
            return false;
        }
        let probs = measure.node_probs();
        (0..sub.num_steps()).all(|j| {
            (0..sub.level_size(j)).all(|i| {
                let idx = sub.level_offset(j) + i;
                if probs[idx] <= 0.0 {
                    return true;
                }
                let used = &measure.transitions()[idx];
                self.laws_at(&node.join(&sub.node_at(j, i)))
                    .iter()
                    .any(|law| law.iter().zip(used).all(|(a, b)| (a - b).abs() <= PROB_TOL))
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitFamily {
    lattice: Lattice,
    sets: BTreeMap<Node, Vec<TreeMeasure>>,
}

impl ExplicitFamily {
    /// Starts with the single (trivial) measure at every leaf and nothing
    /// elsewhere.
    pub fn new(lattice: Lattice) -> Self {
        let leaf = lattice.suffix(lattice.num_steps());
        let trivial = TreeMeasure::new(leaf, Vec::new()).expect("zero-step measure");
        let sets = lattice
            .paths()
            .map(|p| (p, vec![trivial.clone()]))
            .collect();
        ExplicitFamily { lattice, sets }
    }

    pub fn insert(&mut self, node: Node, measures: Vec<TreeMeasure>) -> Result<()> {
        if !self.lattice.contains(&node) {
            return Err(Error::InvalidFamily(format!(
                "node {node} is not in the lattice"
            )));
        }
        let sub = self.lattice.suffix(node.depth());
        if measures.iter().any(|m| *m.lattice() != sub) {
            return Err(Error::InvalidFamily(format!(
                "measures at {node} must live on its continuation lattice"
            )));
        }
        self.sets.insert(node, measures);
        Ok(())
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn measures_at(&self, node: &Node) -> &[TreeMeasure] {
        self.sets.get(node).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AmbiguityFamily {
    Rectangular(RectangularFamily),
    Explicit(ExplicitFamily),
}

impl From<RectangularFamily> for AmbiguityFamily {
    fn from(f: RectangularFamily) -> Self {
        AmbiguityFamily::Rectangular(f)
    }
}

impl From<ExplicitFamily> for AmbiguityFamily {
    fn from(f: ExplicitFamily) -> Self {
        AmbiguityFamily::Explicit(f)
    }
}

impl AmbiguityFamily {
    pub fn lattice(&self) -> &Lattice {
        match self {
            AmbiguityFamily::Rectangular(f) => f.lattice(),
            AmbiguityFamily::Explicit(f) => f.lattice(),
        }
    }

    pub fn count(&self, node: &Node) -> u128 {
        match self {
            AmbiguityFamily::Rectangular(f) => f.count(node),
            AmbiguityFamily::Explicit(f) => f.measures_at(node).len() as u128,
        }
    }

    /// `P(j, node)` as an explicit list, in a fixed order: for rectangular
    /// families, lexicographic in the law chosen at each reachable node with
    /// nodes taken level by level (root choice varies slowest).
    pub fn enumerate_measures(&self, node: &Node, cap: u64) -> Result<Vec<TreeMeasure>> {
        let count = self.count(node);
        if count > cap as u128 {
            return Err(Error::SizeLimit { count, cap });
        }
        Ok(match self {
            AmbiguityFamily::Rectangular(f) => f.enumerate(node),
            AmbiguityFamily::Explicit(f) => f.measures_at(node).to_vec(),
        })
    }

    /// Whether `measure` (on the continuation lattice of `node`) is an
    /// element of `P(j, node)`, comparing laws on paths.
    pub fn contains(&self, node: &Node, measure: &TreeMeasure) -> bool {
        match self {
            AmbiguityFamily::Rectangular(f) => f.contains(node, measure),
            AmbiguityFamily::Explicit(f) => f
                .measures_at(node)
                .iter()
                .any(|m| m.same_law(measure, PROB_TOL)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

/// A tuple on which a family assumption fails. `start` is the conditioning
/// node, `rule` the boundary of the stopping rule on its continuation
/// lattice, `measure_index` the position of the measure in
/// `enumerate_measures(start)`, and `node` the boundary node (relative to
/// `start`) where the check broke.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionWitness {
    pub start: Node,
    pub rule: Vec<Node>,
    pub measure_index: usize,
    pub node: Node,
    /// For pasting failures: the kernel, as boundary node → index in the
    /// enumeration at that node.
    pub kernel: Option<Vec<(Node, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub check: String,
    pub status: Status,
    pub witness: Option<AssumptionWitness>,
    pub checked: u64,
    pub warnings: Vec<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckConfig {
    /// Enumerate every stopping rule when there are at most this many.
    pub rule_cap: usize,
    /// Otherwise, sample this many rules.
    pub rule_samples: usize,
    /// Check every measure of `P(j, n)` when there are at most this many,
    /// otherwise a seeded sample of this size.
    pub measure_cap: usize,
    /// Same for kernels in the pasting check.
    pub kernel_cap: usize,
    pub max_enum: u64,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            rule_cap: 100,
            rule_samples: 100,
            measure_cap: 512,
            kernel_cap: 16,
            max_enum: DEFAULT_MAX_ENUM,
            seed: 0,
        }
    }
}

impl CheckConfig {
    pub fn exhaustive() -> Self {
        CheckConfig {
            rule_cap: usize::MAX,
            measure_cap: usize::MAX,
            kernel_cap: usize::MAX,
            ..Self::default()
        }
    }
}

fn rules_for(lattice: &Lattice, cfg: &CheckConfig, rng: &mut ChaCha8Rng) -> Vec<StoppingRule> {
    if let Some(all) = StoppingRule::enumerate(lattice, cfg.rule_cap) {
        return all;
    }
    (0..cfg.rule_samples)
        .map(|_| StoppingRule::random(lattice, rng, 0.4))
        .collect()
}

fn sample_indices(n: usize, cap: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if n <= cap {
        (0..n).collect()
    } else {
        let mut v = index::sample(rng, n, cap).into_vec();
        v.sort_unstable();
        v
    }
}

/// Every node of the family's lattice together with its measures and the
/// stopping rules to check there.
struct Scope {
    start: Node,
    measures: Vec<TreeMeasure>,
    picked: Vec<usize>,
    rules: Vec<StoppingRule>,
}

fn scopes(family: &AmbiguityFamily, cfg: &CheckConfig) -> Result<Vec<Scope>> {
    let l = family.lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for start in l.nodes() {
        let measures = family.enumerate_measures(&start, cfg.max_enum)?;
        let picked = sample_indices(measures.len(), cfg.measure_cap, &mut rng);
        let rules = rules_for(&l.suffix(start.depth()), cfg, &mut rng);
        out.push(Scope {
            start,
            measures,
            picked,
            rules,
        });
    }
    Ok(out)
}

/// For every node `n̄`, stopping rule `θ` below it, measure `P ∈ P(j, n̄)`,
/// and boundary node `m` charged by `P`: the conditional law of `P` below
/// `m` belongs to `P(j + |m|, n̄ ⊗ m)`.
pub fn check_invariance(family: &AmbiguityFamily, cfg: &CheckConfig) -> Result<AssumptionReport> {
    let mut checked = 0u64;
    for scope in scopes(family, cfg)? {
        for rule in &scope.rules {
            let results: Vec<(u64, Option<Node>)> = scope
                .picked
                .par_iter()
                .map(|&mi| {
                    let p = &scope.measures[mi];
                    let sub = p.lattice();
                    let probs = p.node_probs();
                    let mut n = 0u64;
                    for m in rule.boundary() {
                        if probs[sub.node_index(m)] <= 0.0 {
                            continue;
                        }
                        n += 1;
                        if !family.contains(&scope.start.join(m), &p.subtree(m)) {
                            return (n, Some(m.clone()));
                        }
                    }
                    (n, None)
                })
                .collect();
            checked += results.iter().map(|r| r.0).sum::<u64>();
            if let Some((k, (_, Some(m)))) =
                results.into_iter().enumerate().find(|(_, r)| r.1.is_some())
            {
                return Ok(AssumptionReport {
                    check: "invariance".into(),
                    status: Status::Fail,
                    witness: Some(AssumptionWitness {
                        start: scope.start.clone(),
                        rule: rule.boundary().to_vec(),
                        measure_index: scope.picked[k],
                        node: m,
                        kernel: None,
                    }),
                    checked,
                    warnings: Vec::new(),
                    note: None,
                });
            }
        }
    }
    Ok(AssumptionReport {
        check: "invariance".into(),
        status: Status::Pass,
        witness: None,
        checked,
        warnings: Vec::new(),
        note: None,
    })
}

/// For every node `n̄`, rule `θ` below it, `P ∈ P(j, n̄)`, and kernel `ν`
/// choosing `ν(m) ∈ P(j + |m|, n̄ ⊗ m)` at each boundary node `P` charges:
/// the pasted measure belongs to `P(j, n̄)`.
pub fn check_pasting(family: &AmbiguityFamily, cfg: &CheckConfig) -> Result<AssumptionReport> {
    let mut checked = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut cache: BTreeMap<Node, Vec<TreeMeasure>> = BTreeMap::new();
    for scope in scopes(family, cfg)? {
        for rule in &scope.rules {
            for &mi in &scope.picked {
                let p = &scope.measures[mi];
                let sub = p.lattice();
                let probs = p.node_probs();
                let charged: Vec<&Node> = rule
                    .boundary()
                    .iter()
                    .filter(|m| probs[sub.node_index(m)] > 0.0)
                    .collect();
                let mut sets = Vec::with_capacity(charged.len());
                for m in &charged {
                    let key = scope.start.join(m);
                    if !cache.contains_key(&key) {
                        let ms = family.enumerate_measures(&key, cfg.max_enum)?;
                        cache.insert(key.clone(), ms);
                    }
                    sets.push(key);
                }
                let sizes: Vec<usize> = sets.iter().map(|k| cache[k].len()).collect();
                if sizes.contains(&0) {
                    // no admissible kernel
                    continue;
                }
                let total = sizes
                    .iter()
                    .fold(1u128, |acc, &s| acc.saturating_mul(s as u128));
                let choices: Vec<Vec<usize>> = if total <= cfg.kernel_cap as u128 {
                    let mut all = vec![Vec::new()];
                    for &s in &sizes {
                        all = all
                            .into_iter()
                            .flat_map(|c: Vec<usize>| {
                                (0..s).map(move |i| {
                                    let mut c = c.clone();
                                    c.push(i);
                                    c
                                })
                            })
                            .collect();
                    }
                    all
                } else {
                    (0..cfg.kernel_cap)
                        .map(|_| sizes.iter().map(|&s| rng.gen_range(0..s)).collect())
                        .collect()
                };
                let failure = choices.par_iter().find_first(|choice| {
                    let kernel: Kernel = charged
                        .iter()
                        .zip(&sets)
                        .zip(choice.iter())
                        .map(|((m, key), &i)| ((*m).clone(), cache[key][i].clone()))
                        .collect();
                    let pasted = paste(p, rule, &kernel).expect("kernel covers charged nodes");
                    !family.contains(&scope.start, &pasted)
                });
                checked += choices.len() as u64;
                if let Some(choice) = failure {
                    let kernel: Vec<(Node, usize)> = charged
                        .iter()
                        .zip(choice.iter())
                        .map(|(m, &i)| ((*m).clone(), i))
                        .collect();
                    return Ok(AssumptionReport {
                        check: "pasting".into(),
                        status: Status::Fail,
                        witness: Some(AssumptionWitness {
                            start: scope.start.clone(),
                            rule: rule.boundary().to_vec(),
                            measure_index: mi,
                            node: Node::root(),
                            kernel: Some(kernel),
                        }),
                        checked,
                        warnings: Vec::new(),
                        note: None,
                    });
                }
            }
        }
    }
    Ok(AssumptionReport {
        check: "pasting".into(),
        status: Status::Pass,
        witness: None,
        checked,
        warnings: Vec::new(),
        note: None,
    })
}

/// Measurability of the scenario graph. Every subset of a finite path space
/// is measurable, so this always passes; nodes with no measures are listed
/// as warnings (they must not be charged by any measure of the family).
pub fn measurability_note(family: &AmbiguityFamily) -> AssumptionReport {
    let warnings = match family {
        AmbiguityFamily::Rectangular(_) => Vec::new(),
        AmbiguityFamily::Explicit(f) => f
            .lattice()
            .nodes()
            .filter(|n| f.measures_at(n).is_empty())
            .map(|n| format!("node {n} has an empty scenario set"))
            .collect(),
    };
    AssumptionReport {
        check: "measurability".into(),
        status: Status::Pass,
        witness: None,
        checked: 0,
        warnings,
        note: Some(
            "measurability of the scenario graph holds trivially: the path space is finite, \
             so every set of paths and every map into the measures is measurable"
                .into(),
        ),
    }
}

/// Whether `P(j, node)` coincides with the set of conditional laws at `node`
/// of the root measures that charge it. Always true for rectangular
/// families at reachable nodes; `None` when no root measure charges `node`.
pub fn conditional_identity(
    family: &AmbiguityFamily,
    node: &Node,
    cap: u64,
) -> Result<Option<bool>> {
    let roots = family.enumerate_measures(&Node::root(), cap)?;
    let conditionals: Vec<TreeMeasure> = roots
        .iter()
        .filter(|p| p.node_prob(node) > 0.0)
        .map(|p| p.subtree(node))
        .collect();
    if conditionals.is_empty() {
        return Ok(None);
    }
    let local = family.enumerate_measures(node, cap)?;
    let covered = |a: &[TreeMeasure], b: &[TreeMeasure]| {
        a.iter().all(|x| b.iter().any(|y| x.same_law(y, PROB_TOL)))
    };
    Ok(Some(
        covered(&local, &conditionals) && covered(&conditionals, &local),
    ))
}

fn pm1_lattice(k: usize) -> Lattice {
    Lattice::homogeneous(k, 1.0, vec![-1.0, 1.0]).expect("valid lattice")
}

/// Two steps of `±1`. The root set is the uniform measure, but the set at
/// `(1)` holds only the point mass on `+1`, so conditioning the root
/// measure leaves the family.
pub fn invariance_violation() -> ExplicitFamily {
    let l = pm1_lattice(2);
    let one = pm1_lattice(1);
    let mut f = ExplicitFamily::new(l.clone());
    f.insert(Node::root(), vec![TreeMeasure::uniform(l)])
        .expect("valid");
    let up = TreeMeasure::new(one.clone(), vec![vec![0.0, 1.0]]).expect("valid");
    f.insert(Node::new(vec![1]), vec![up]).expect("valid");
    f.insert(Node::new(vec![0]), vec![TreeMeasure::uniform(one)])
        .expect("valid");
    f
}

/// Two steps of `±1`. The root set is the uniform measure alone while each
/// depth-1 node offers uniform and both point masses: conditioning stays
/// inside the family, pasting does not.
pub fn pasting_violation() -> ExplicitFamily {
    let l = pm1_lattice(2);
    let one = pm1_lattice(1);
    let mut f = ExplicitFamily::new(l.clone());
    f.insert(Node::root(), vec![TreeMeasure::uniform(l)])
        .expect("valid");
    let depth1 = vec![
        TreeMeasure::uniform(one.clone()),
        TreeMeasure::new(one.clone(), vec![vec![0.0, 1.0]]).expect("valid"),
        TreeMeasure::new(one, vec![vec![1.0, 0.0]]).expect("valid"),
    ];
    f.insert(Node::new(vec![0]), depth1.clone()).expect("valid");
    f.insert(Node::new(vec![1]), depth1).expect("valid");
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm1(k: usize) -> Lattice {
        Lattice::homogeneous(k, 1.0, vec![-1.0, 1.0]).unwrap()
    }

    fn two_laws(k: usize) -> AmbiguityFamily {
        RectangularFamily::from_fn(pm1(k), |_| vec![vec![0.5, 0.5], vec![0.2, 0.8]])
            .unwrap()
            .into()
    }

    #[test]
    fn enumeration_counts() {
        let single: AmbiguityFamily = RectangularFamily::from_fn(pm1(3), |_| vec![vec![0.5, 0.5]])
            .unwrap()
            .into();
        assert_eq!(
            single.enumerate_measures(&Node::root(), 10).unwrap().len(),
            1
        );

        let three: AmbiguityFamily = RectangularFamily::from_fn(pm1(1), |_| {
            vec![vec![0.5, 0.5], vec![0.1, 0.9], vec![0.7, 0.3]]
        })
        .unwrap()
        .into();
        assert_eq!(
            three.enumerate_measures(&Node::root(), 10).unwrap().len(),
            3
        );

        let f = two_laws(2);
        let all = f.enumerate_measures(&Node::root(), 100).unwrap();
        assert_eq!(all.len(), 8);
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                assert!(!a.same_law(b, PROB_TOL));
            }
        }
        assert_eq!(
            f.enumerate_measures(&Node::root(), 7).unwrap_err(),
            Error::SizeLimit { count: 8, cap: 7 }
        );
    }

    #[test]
    fn enumeration_skips_unreachable_choices() {
        let f: AmbiguityFamily =
            RectangularFamily::from_fn(pm1(2), |_| vec![vec![1.0, 0.0], vec![0.5, 0.5]])
                .unwrap()
                .into();
        // root δ: 2 choices below the reached child; root uniform: 2·2
        assert_eq!(f.count(&Node::root()), 6);
        assert_eq!(f.enumerate_measures(&Node::root(), 100).unwrap().len(), 6);
    }

    #[test]
    fn duplicate_laws_are_dropped() {
        let f =
            RectangularFamily::from_fn(pm1(1), |_| vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(f.laws_at(&Node::root()).len(), 1);
        assert!(RectangularFamily::from_fn(pm1(1), |_| vec![]).is_err());
        assert!(RectangularFamily::from_fn(pm1(1), |_| vec![vec![0.5, 0.4]]).is_err());
    }

    #[test]
    fn rectangular_passes_both_checks() {
        let f = two_laws(2);
        let cfg = CheckConfig::exhaustive();
        let inv = check_invariance(&f, &cfg).unwrap();
        assert_eq!(inv.status, Status::Pass);
        assert!(inv.checked > 0);
        let pst = check_pasting(&f, &cfg).unwrap();
        assert_eq!(pst.status, Status::Pass);
        assert!(pst.checked > 0);
    }

    #[test]
    fn singleton_family_passes() {
        let f: AmbiguityFamily = RectangularFamily::from_fn(pm1(3), |_| vec![vec![0.3, 0.7]])
            .unwrap()
            .into();
        let cfg = CheckConfig::exhaustive();
        assert_eq!(check_invariance(&f, &cfg).unwrap().status, Status::Pass);
        assert_eq!(check_pasting(&f, &cfg).unwrap().status, Status::Pass);
    }

    #[test]
    fn engineered_invariance_failure() {
        let r =
            check_invariance(&invariance_violation().into(), &CheckConfig::exhaustive()).unwrap();
        assert_eq!(r.status, Status::Fail);
        let w = r.witness.unwrap();
        assert_eq!(w.start.join(&w.node), Node::new(vec![1]));
    }

    #[test]
    fn engineered_pasting_failure() {
        let f: AmbiguityFamily = pasting_violation().into();
        let cfg = CheckConfig::exhaustive();
        assert_eq!(check_invariance(&f, &cfg).unwrap().status, Status::Pass);
        let r = check_pasting(&f, &cfg).unwrap();
        assert_eq!(r.status, Status::Fail);
        let w = r.witness.unwrap();
        assert_eq!(w.start, Node::root());
        assert!(w.kernel.is_some());
    }

    #[test]
    fn measurability_always_passes() {
        let r = measurability_note(&two_laws(2));
        assert_eq!(r.status, Status::Pass);
        assert!(r.note.unwrap().contains("measurable"));
        let mut f = ExplicitFamily::new(pm1(1));
        f.insert(Node::root(), vec![TreeMeasure::uniform(pm1(1))])
            .unwrap();
        f.insert(Node::new(vec![0]), vec![]).unwrap();
        let r = measurability_note(&f.into());
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn conditional_identity_holds_for_rectangular() {
        let f = two_laws(2);
        for n in f.lattice().nodes().collect::<Vec<_>>() {
            assert_eq!(conditional_identity(&f, &n, 1000).unwrap(), Some(true));
        }
    }
}
