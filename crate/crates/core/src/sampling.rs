//! Seeded random generators for families, measures, rules, and payoffs.
//! Used by the randomized checks and by the CLI.

use rand::Rng;

use crate::ambiguity::RectangularFamily;
use crate::error::{Error, Result};
use crate::measure::TreeMeasure;
use crate::pathspace::{Lattice, RandomVariable, StoppingRule};

/// A probability vector of length `b` with every entry positive.
pub fn random_law<R: Rng + ?Sized>(rng: &mut R, b: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..b).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// A random rectangular family: alphabet of `b` distinct increments
/// (homogeneous), and between 1 and `max_laws` full-support laws per node.
pub fn random_rectangular<R: Rng + ?Sized>(
    rng: &mut R,
    num_steps: usize,
    b: usize,
    max_laws: usize,
) -> Result<RectangularFamily> {
    let mut alphabet: Vec<f64> = Vec::with_capacity(b);
    while alphabet.len() < b {
        let x = (rng.gen_range(-2.0..2.0) * 8.0_f64).round() / 8.0;
        if !alphabet.contains(&x) {
            alphabet.push(x);
        }
    }
    alphabet.sort_by(|a, c| a.total_cmp(c));
    let lattice = Lattice::homogeneous(num_steps, 1.0, alphabet)?;
    let sets: Vec<Vec<Vec<f64>>> = (0..lattice.num_nonterminal())
        .map(|_| {
            let n = rng.gen_range(1..=max_laws);
            (0..n).map(|_| random_law(rng, b)).collect()
        })
        .collect();
    RectangularFamily::new(lattice, sets)
}

/// A mean-zero law on `alphabet`: a random mixture of two-point laws
/// straddling zero (plus the point mass at zero if available).
pub fn random_martingale_law<R: Rng + ?Sized>(rng: &mut R, alphabet: &[f64]) -> Result<Vec<f64>> {
    let neg: Vec<usize> = (0..alphabet.len()).filter(|&i| alphabet[i] < 0.0).collect();
    let pos: Vec<usize> = (0..alphabet.len()).filter(|&i| alphabet[i] > 0.0).collect();
    let zero = alphabet.iter().position(|x| *x == 0.0);
    let mut law = vec![0.0; alphabet.len()];
    let mut parts: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for &d in &neg {
        for &u in &pos {
            let (xd, xu) = (alphabet[d], alphabet[u]);
            let pu = -xd / (xu - xd);
            parts.push((vec![(u, pu), (d, 1.0 - pu)], rng.gen_range(0.0..1.0)));
        }
    }
    if let Some(z) = zero {
        parts.push((vec![(z, 1.0)], rng.gen_range(0.0..0.5)));
    }
    if parts.is_empty() {
        return Err(Error::InvalidMeasure(
            "no mean-zero law exists on this alphabet".into(),
        ));
    }
    let total: f64 = parts.iter().map(|p| p.1).sum();
    for (atoms, w) in &parts {
        for (i, q) in atoms {
            law[*i] += q * w / total;
        }
    }
    Ok(law)
}

pub fn random_martingale_measure<R: Rng + ?Sized>(
    rng: &mut R,
    lattice: &Lattice,
) -> Result<TreeMeasure> {
    let transitions = (0..lattice.num_steps())
        .flat_map(|j| (0..lattice.level_size(j)).map(move |_| j))
        .map(|j| random_martingale_law(rng, lattice.alphabet(j)))
        .collect::<Result<Vec<_>>>()?;
    TreeMeasure::new(lattice.clone(), transitions)
}

/// A pair of rules with `σ ≤ τ` pointwise.
pub fn random_rule_pair<R: Rng + ?Sized>(
    rng: &mut R,
    lattice: &Lattice,
) -> (StoppingRule, StoppingRule) {
    let tau = StoppingRule::random(lattice, rng, 0.4);
    let other = StoppingRule::random(lattice, rng, 0.5);
    (other.min(lattice, &tau), tau)
}

/// Independent uniform values in `[lo, hi)` on every path.
pub fn random_variable<R: Rng + ?Sized>(
    rng: &mut R,
    lattice: &Lattice,
    lo: f64,
    hi: f64,
) -> RandomVariable {
    let values = (0..lattice.num_paths())
        .map(|_| rng.gen_range(lo..hi))
        .collect();
    RandomVariable::from_values(lattice, values).expect("finite values")
}
