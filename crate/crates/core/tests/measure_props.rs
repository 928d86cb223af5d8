use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sublinear::measure::{
    conditional_expectation, expectation, is_martingale_measure, paste, rcpd_shift, realized_qv,
};
use sublinear::pathspace::{shift_path, shift_rv};
use sublinear::sampling::{random_martingale_measure, random_rule_pair, random_variable};
use sublinear::{Kernel, Lattice, Node, StoppingRule, TreeMeasure};

fn alphabets() -> Vec<Vec<f64>> {
    vec![
        vec![-1.0, 1.0],
        vec![-1.0, 0.0, 1.0],
        vec![-1.5, 0.5, 2.0],
        vec![-0.75, 0.0, 0.25],
    ]
}

fn lattice_strategy() -> impl Strategy<Value = Lattice> {
    (1usize..=3, 0usize..4)
        .prop_map(|(k, a)| Lattice::homogeneous(k, 0.25, alphabets()[a].clone()).unwrap())
}

/// A law that sometimes puts zero mass on some letters.
fn sparse_law(rng: &mut ChaCha8Rng, b: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..b)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(0.1..1.0)
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            return w.into_iter().map(|x| x / s).collect();
        }
    }
}

fn sparse_measure(rng: &mut ChaCha8Rng, l: &Lattice) -> TreeMeasure {
    let transitions = (0..l.num_steps())
        .flat_map(|j| std::iter::repeat_n(j, l.level_size(j)))
        .map(|j| sparse_law(rng, l.branching(j)))
        .collect();
    TreeMeasure::new(l.clone(), transitions).unwrap()
}

/// Path probabilities by multiplying transitions along each path.
fn path_probs_brute(p: &TreeMeasure) -> Vec<f64> {
    let l = p.lattice();
    l.paths()
        .map(|w| {
            (0..l.num_steps())
                .map(|j| p.transition(&w.prefix(j))[w.indices()[j]])
                .product()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conditional_expectation_tower(l in lattice_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_measure(&mut rng, &l);
        let (sigma, tau) = random_rule_pair(&mut rng, &l);
        let xi = random_variable(&mut rng, &l, -5.0, 5.0);
        let inner = conditional_expectation(&p, &xi, &tau);
        let lhs = conditional_expectation(&p, &inner.values, &sigma);
        let rhs = conditional_expectation(&p, &xi, &sigma);
        let probs = p.path_probs();
        for (i, q) in probs.iter().enumerate() {
            if *q > 0.0 {
                prop_assert!((lhs.values.value(i) - rhs.values.value(i)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn rcpd_identity(l in lattice_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_measure(&mut rng, &l);
        let tau = StoppingRule::random(&l, &mut rng, 0.4);
        let xi = random_variable(&mut rng, &l, -5.0, 5.0);
        let probs = path_probs_brute(&p);
        let ce = conditional_expectation(&p, &xi, &tau);
        for (i, omega) in l.paths().enumerate() {
            let node = tau.stopped_node(&l, i);
            let block = l.block(&node);
            let mass: f64 = probs[block.clone()].iter().sum();
            if mass <= 0.0 {
                prop_assert!(rcpd_shift(&p, &tau, &omega).is_err());
                prop_assert_eq!(ce.values.value(i), f64::NEG_INFINITY);
                continue;
            }
            let direct: f64 = block.clone().map(|j| probs[j] * xi.value(j)).sum::<f64>() / mass;
            let shifted = rcpd_shift(&p, &tau, &omega).unwrap();
            let e = expectation(&shifted, &shift_rv(&l, &xi, &tau, &omega));
            prop_assert!((e - ce.values.value(i)).abs() <= 1e-12, "{} vs {}", e, ce.values.value(i));
            prop_assert!((e - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn martingales_survive_shift_and_paste(l in lattice_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_martingale_measure(&mut rng, &l).unwrap();
        prop_assert!(is_martingale_measure(&p));
        let tau = StoppingRule::random(&l, &mut rng, 0.4);
        for omega in l.paths() {
            if let Ok(q) = rcpd_shift(&p, &tau, &omega) {
                prop_assert!(is_martingale_measure(&q));
            }
        }
        let nu = martingale_kernel(&mut rng, &l, &tau);
        let pasted = paste(&p, &tau, &nu).unwrap();
        prop_assert!(is_martingale_measure(&pasted));
    }

    #[test]
    fn paste_matches_definition_and_restricts(l in lattice_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_measure(&mut rng, &l);
        let theta = StoppingRule::random(&l, &mut rng, 0.4);
        let nu: Kernel = theta
            .boundary()
            .iter()
            .map(|n| (n.clone(), random_measure(&mut rng, &l.suffix(n.depth()))))
            .collect();
        let pasted = paste(&p, &theta, &nu).unwrap();
        let before = path_probs_brute(&p);
        let after = path_probs_brute(&pasted);
        for (i, w) in l.paths().enumerate() {
            let n = theta.stopped_node(&l, i);
            let head: f64 = before[l.block(&n)].iter().sum();
            let q = &nu[&n];
            let tail = path_probs_brute(q)[q.lattice().path_index(&w.suffix(n.depth()))];
            prop_assert!((after[i] - head * tail).abs() <= 1e-12);
        }
        let (pn, qn) = (p.node_probs(), pasted.node_probs());
        for n in l.nodes() {
            let at_or_before = (l.block(&n).start..l.block(&n).end)
                .all(|i| theta.time(i) >= n.depth());
            if at_or_before {
                prop_assert!((pn[l.node_index(&n)] - qn[l.node_index(&n)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn qv_rate_shift_identity(l in lattice_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = StoppingRule::random(&l, &mut rng, 0.4);
        for (i, omega) in l.paths().enumerate() {
            let t = tau.time(i);
            let sub = l.suffix(t);
            let shifted = realized_qv(&sub, &shift_path(&l, &omega, &tau));
            let full = realized_qv(&l, &omega);
            for u in 0..l.num_steps() - t {
                prop_assert_eq!(shifted.rate[u], full.rate[u + t]);
            }
        }
    }
}

fn random_measure(rng: &mut ChaCha8Rng, l: &Lattice) -> TreeMeasure {
    sparse_measure(rng, l)
}

fn martingale_kernel(rng: &mut ChaCha8Rng, l: &Lattice, theta: &StoppingRule) -> Kernel {
    let mut nu = BTreeMap::new();
    for n in theta.boundary() {
        let sub = l.suffix(n.depth());
        let m = if sub.num_steps() == 0 {
            TreeMeasure::new(sub, vec![]).unwrap()
        } else {
            random_martingale_measure(rng, &sub).unwrap()
        };
        nu.insert(n.clone(), m);
    }
    nu
}

#[test]
fn zero_step_suffix_has_one_path() {
    let l = Lattice::homogeneous(2, 1.0, vec![-1.0, 1.0]).unwrap();
    let sub = l.suffix(2);
    assert_eq!(sub.num_paths(), 1);
    assert_eq!(sub.paths().next().unwrap(), Node::root());
}
