//! Conditional sublinear expectations
//! `E_τ(ξ)(ω) = sup_{P ∈ P(τ,ω)} E^P[ξ^{τ,ω}]` and the checks built on them.
//!
//! Two independent routes are provided. The oracle enumerates `P(τ(ω), ω)`
//! and takes the maximum of linear expectations. The dynamic-programming
//! route runs backward induction over a rectangular family, maximizing one
//! step at a time. Both share the extended-real conventions of [`ext`].

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::ambiguity::{AmbiguityFamily, RectangularFamily, Status};
use crate::error::{Error, Result};
use crate::ext;
use crate::measure::{conditional_expectation, expectation, Kernel, TreeMeasure};
use crate::pathspace::{Node, PathId, RandomVariable, StoppingRule};

/// Tolerance for equalities between derived quantities.
pub const DERIVED_TOL: f64 = 1e-10;

/// `sup_{P ∈ P(j, node)} E^P[ξ_sub]` by enumeration; `−∞` for an empty set.
/// `xi_sub` lives on the continuation lattice of `node`.
pub fn oracle_at_node(
    family: &AmbiguityFamily,
    node: &Node,
    xi_sub: &RandomVariable,
    cap: u64,
) -> Result<f64> {
    let measures = family.enumerate_measures(node, cap)?;
    Ok(measures
        .iter()
        .map(|p| expectation(p, xi_sub))
        .fold(ext::NEG_INF, f64::max))
}

/// `E_τ(ξ)(ω)` by enumeration.
pub fn sublinear_expectation_oracle(
    family: &AmbiguityFamily,
    tau: &StoppingRule,
    xi: &RandomVariable,
    omega: &PathId,
    cap: u64,
) -> Result<f64> {
    let l = family.lattice();
    let node = tau.stopped_node(l, l.path_index(omega));
    oracle_at_node(family, &node, &xi.restrict(l, &node), cap)
}

/// `E_τ(ξ)` on every path by enumeration, evaluated once per boundary node.
pub fn oracle_rv(
    family: &AmbiguityFamily,
    tau: &StoppingRule,
    xi: &RandomVariable,
    cap: u64,
) -> Result<RandomVariable> {
    let l = family.lattice();
    let mut values = vec![ext::NEG_INF; l.num_paths()];
    for n in tau.boundary() {
        let v = oracle_at_node(family, n, &xi.restrict(l, n), cap)?;
        values[l.block(n)].iter_mut().for_each(|x| *x = v);
    }
    Ok(RandomVariable::from_raw(values))
}

/// Backward induction: the value `V(n)` at every node (in
/// `Lattice::node_index` order), with `V = ξ` at the leaves and
/// `V(n) = max_law Σ_c law[c] · V(n·c)` above.
pub fn dpp_values(family: &RectangularFamily, xi: &RandomVariable) -> Vec<f64> {
    let l = family.lattice();
    let k = l.num_steps();
    let mut values = vec![0.0; l.num_nodes()];
    let leaf_off = l.level_offset(k);
    values[leaf_off..].copy_from_slice(xi.values());
    for j in (0..k).rev() {
        let b = l.branching(j);
        let (off, next) = (l.level_offset(j), l.level_offset(j + 1));
        for i in 0..l.level_size(j) {
            let children = &values[next + i * b..next + (i + 1) * b];
            let node = l.node_at(j, i);
            let v = family
                .laws_at(&node)
                .iter()
                .map(|law| ext::weighted_sum(law.iter().copied().zip(children.iter().copied())))
                .fold(ext::NEG_INF, f64::max);
            values[off + i] = v;
        }
    }
    values
}

/// `E_τ(ξ)` by backward induction, read off at the boundary of `τ`.
pub fn sublinear_expectation_dpp(
    family: &RectangularFamily,
    tau: &StoppingRule,
    xi: &RandomVariable,
) -> RandomVariable {
    let l = family.lattice();
    let v = dpp_values(family, xi);
    let mut values = vec![0.0; l.num_paths()];
    for n in tau.boundary() {
        let x = v[l.node_index(n)];
        values[l.block(n)].iter_mut().for_each(|y| *y = x);
    }
    RandomVariable::from_raw(values)
}

fn max_gap(a: &RandomVariable, b: &RandomVariable) -> (f64, Option<usize>) {
    let mut worst = 0.0;
    let mut at = None;
    for (i, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
        let g = ext::gap(*x, *y);
        if g > worst {
            worst = g;
            at = Some(i);
        }
    }
    (worst, at)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TowerReport {
    /// `max_ω |E_σ(ξ)(ω) − E_σ(E_τ(ξ))(ω)|` by enumeration.
    #[serde(serialize_with = "ext::serde_ext::serialize")]
    pub deviation: f64,
    pub witness: Option<PathId>,
    /// `E_σ(ξ) ≤ E_σ(E_τ(ξ))` everywhere (within tolerance).
    pub one_sided: bool,
    /// Same deviation by backward induction, for rectangular families.
    pub dpp_deviation: Option<f64>,
    #[serde(skip)]
    pub lhs: RandomVariable,
    #[serde(skip)]
    pub rhs: RandomVariable,
}

/// Compares `E_σ(ξ)` with `E_σ(E_τ(ξ))` on every path.
pub fn verify_tower(
    family: &AmbiguityFamily,
    sigma: &StoppingRule,
    tau: &StoppingRule,
    xi: &RandomVariable,
    cap: u64,
) -> Result<TowerReport> {
    let l = family.lattice();
    if let Some(pi) = (0..l.num_paths()).find(|&pi| sigma.time(pi) > tau.time(pi)) {
        return Err(Error::PrecedenceViolation(l.path_at(pi)));
    }
    let lhs = oracle_rv(family, sigma, xi, cap)?;
    let inner = oracle_rv(family, tau, xi, cap)?;
    let rhs = oracle_rv(family, sigma, &inner, cap)?;
    let (deviation, at) = max_gap(&lhs, &rhs);
    let one_sided = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .all(|(a, b)| a <= b || ext::gap(*a, *b) <= DERIVED_TOL);
    let dpp_deviation = match family {
        AmbiguityFamily::Rectangular(f) => {
            let a = sublinear_expectation_dpp(f, sigma, xi);
            let inner = sublinear_expectation_dpp(f, tau, xi);
            let b = sublinear_expectation_dpp(f, sigma, &inner);
            Some(max_gap(&a, &b).0)
        }
        AmbiguityFamily::Explicit(_) => None,
    };
    Ok(TowerReport {
        deviation,
        witness: at.map(|i| l.path_at(i)),
        one_sided,
        dpp_deviation,
        lhs,
        rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsssupWitness {
    pub measure_index: usize,
    pub node: Node,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsssupReport {
    pub status: Status,
    pub tolerance: f64,
    #[serde(serialize_with = "ext::serde_ext::serialize")]
    pub worst_deviation: f64,
    /// Worst deviation for each root measure, in enumeration order.
    pub per_measure: Vec<f64>,
    pub witness: Option<EsssupWitness>,
}

fn boundary_key(p: &TreeMeasure, tau: &StoppingRule) -> Vec<u64> {
    let l = p.lattice();
    let probs = p.node_probs();
    tau.boundary()
        .iter()
        .map(|n| (probs[l.node_index(n)] + 0.0).to_bits())
        .collect()
}

/// For every root measure `P`, compares `E_τ(ξ)` with the maximum of
/// `E^{P′}[ξ | F_τ]` over the root measures `P′` that agree with `P` on
/// `F_τ` (same probability on every boundary node), at every boundary node
/// charged by `P`.
pub fn verify_esssup_representation(
    family: &AmbiguityFamily,
    tau: &StoppingRule,
    xi: &RandomVariable,
    cap: u64,
    tol: f64,
) -> Result<EsssupReport> {
    let l = family.lattice();
    let roots = family.enumerate_measures(&Node::root(), cap)?;
    let lhs: Vec<f64> = tau
        .boundary()
        .iter()
        .map(|n| oracle_at_node(family, n, &xi.restrict(l, n), cap))
        .collect::<Result<_>>()?;

    let keys: Vec<Vec<u64>> = roots.iter().map(|p| boundary_key(p, tau)).collect();
    let conds: Vec<Vec<f64>> = roots
        .iter()
        .map(|p| {
            let c = conditional_expectation(p, xi, tau);
            tau.boundary()
                .iter()
                .map(|n| c.values.value(l.block(n).start))
                .collect()
        })
        .collect();
    let mut group_max: HashMap<&[u64], Vec<f64>> = HashMap::new();
    for (key, cond) in keys.iter().zip(&conds) {
        let entry = group_max
            .entry(key.as_slice())
            .or_insert_with(|| vec![ext::NEG_INF; cond.len()]);
        for (m, c) in entry.iter_mut().zip(cond) {
            *m = m.max(*c);
        }
    }

    let mut per_measure = Vec::with_capacity(roots.len());
    let mut worst = 0.0;
    let mut witness = None;
    for (mi, key) in keys.iter().enumerate() {
        let rhs = &group_max[key.as_slice()];
        let mut dev: f64 = 0.0;
        let mut at = None;
        for (bi, mass_bits) in key.iter().enumerate() {
            if f64::from_bits(*mass_bits) <= 0.0 {
                continue;
            }
            let g = ext::gap(lhs[bi], rhs[bi]);
            if g > dev {
                dev = g;
                at = Some(bi);
            }
        }
        if dev > worst {
            worst = dev;
            witness = at.map(|bi| EsssupWitness {
                measure_index: mi,
                node: tau.boundary()[bi].clone(),
            });
        }
        per_measure.push(dev);
    }
    Ok(EsssupReport {
        status: if worst <= tol {
            Status::Pass
        } else {
            Status::Fail
        },
        tolerance: tol,
        worst_deviation: worst,
        per_measure,
        witness: if worst <= tol { None } else { witness },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionalSamplingReport {
    pub status: Status,
    pub mismatches: usize,
    pub witness: Option<PathId>,
}

/// Compares `E_τ(ξ)(ω)` with the process `t ↦ E_t(ξ)(ω)` sampled at
/// `t = τ(ω)`, exactly.
pub fn verify_optional_sampling(
    family: &AmbiguityFamily,
    tau: &StoppingRule,
    xi: &RandomVariable,
    cap: u64,
) -> Result<OptionalSamplingReport> {
    let l = family.lattice();
    let process: Vec<RandomVariable> = (0..=l.num_steps())
        .map(|t| oracle_rv(family, &StoppingRule::constant(l, t)?, xi, cap))
        .collect::<Result<_>>()?;
    let stopped = oracle_rv(family, tau, xi, cap)?;
    let bad: Vec<usize> = (0..l.num_paths())
        .filter(|&pi| stopped.value(pi).to_bits() != process[tau.time(pi)].value(pi).to_bits())
        .collect();
    Ok(OptionalSamplingReport {
        status: if bad.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        },
        mismatches: bad.len(),
        witness: bad.first().map(|&pi| l.path_at(pi)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Maximizing measure at each boundary node with a nonempty set.
    pub kernel: Kernel,
    /// Position of the selected measure in the node's enumeration.
    pub choice: BTreeMap<Node, usize>,
    /// Boundary nodes whose scenario set is empty.
    pub empty_nodes: Vec<Node>,
}

/// Exact maximizer of `E^P[ξ^{τ,n}]` over `P(τ, n)` at every boundary node;
/// ties go to the earliest measure in enumeration order.
pub fn optimal_kernel(
    family: &AmbiguityFamily,
    tau: &StoppingRule,
    xi: &RandomVariable,
    cap: u64,
) -> Result<Selection> {
    let l = family.lattice();
    let mut kernel = Kernel::new();
    let mut choice = BTreeMap::new();
    let mut empty_nodes = Vec::new();
    for n in tau.boundary() {
        let measures = family.enumerate_measures(n, cap)?;
        let sub = xi.restrict(l, n);
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in measures.iter().enumerate() {
            let v = expectation(p, &sub);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, _)) => {
                kernel.insert(n.clone(), measures[i].clone());
                choice.insert(n.clone(), i);
            }
            None => empty_nodes.push(n.clone()),
        }
    }
    Ok(Selection {
        kernel,
        choice,
        empty_nodes,
    })
}
