use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sublinear::ambiguity::{
    check_invariance, check_pasting, pasting_violation, CheckConfig, DEFAULT_MAX_ENUM,
};
use sublinear::engine::{
    dpp_values, optimal_kernel, oracle_at_node, oracle_rv, sublinear_expectation_dpp,
    verify_esssup_representation, verify_optional_sampling, verify_tower, DERIVED_TOL,
};
use sublinear::measure::expectation;
use sublinear::sampling::{random_rectangular, random_rule_pair, random_variable};
use sublinear::{
    AmbiguityFamily, Lattice, Node, RandomVariable, RectangularFamily, Status, StoppingRule,
};

const CAP: u64 = DEFAULT_MAX_ENUM;

fn family_strategy() -> impl Strategy<Value = (RectangularFamily, u64)> {
    (1usize..=3, 2usize..=2, 1usize..=3, any::<u64>()).prop_map(|(k, b, m, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_rectangular(&mut rng, k, b, m).unwrap(), seed)
    })
}

fn small_family_strategy() -> impl Strategy<Value = (RectangularFamily, u64)> {
    (1usize..=2, 2usize..=3, 1usize..=2, any::<u64>()).prop_map(|(k, b, m, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_rectangular(&mut rng, k, b, m).unwrap(), seed)
    })
}

fn approx_le(a: f64, b: f64) -> bool {
    a <= b + DERIVED_TOL
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn enumeration_is_deterministic_and_duplicate_free((f, _) in family_strategy()) {
        let fam: AmbiguityFamily = f.into();
        for n in fam.lattice().nodes() {
            let a = fam.enumerate_measures(&n, CAP).unwrap();
            let b = fam.enumerate_measures(&n, CAP).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.len() as u128, fam.count(&n));
            for i in 0..a.len() {
                for j in 0..i {
                    prop_assert!(!a[i].same_law(&a[j], 0.0));
                }
                prop_assert!(fam.contains(&n, &a[i]));
            }
        }
    }

    #[test]
    fn oracle_matches_backward_induction((f, seed) in family_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let l = f.lattice().clone();
        let xi = random_variable(&mut rng, &l, -4.0, 4.0);
        let v = dpp_values(&f, &xi);
        let fam: AmbiguityFamily = f.into();
        for n in l.nodes() {
            let o = oracle_at_node(&fam, &n, &xi.restrict(&l, &n), CAP).unwrap();
            prop_assert!((o - v[l.node_index(&n)]).abs() <= DERIVED_TOL);
        }
    }

    #[test]
    fn monotone_and_sublinear((f, seed) in family_strategy(), lambda in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let l = f.lattice().clone();
        let tau = StoppingRule::random(&l, &mut rng, 0.4);
        let xi = random_variable(&mut rng, &l, -4.0, 4.0);
        let eta = random_variable(&mut rng, &l, -4.0, 4.0);
        let bump = random_variable(&mut rng, &l, 0.0, 2.0);
        let fam: AmbiguityFamily = f.into();
        let e = |x: &RandomVariable| oracle_rv(&fam, &tau, x, CAP).unwrap();
        let ex = e(&xi);
        let higher = e(&xi.zip_with(&bump, |a, b| a + b));
        let sum = e(&xi.zip_with(&eta, |a, b| a + b));
        let eeta = e(&eta);
        let scaled = e(&xi.map(|a| lambda * a));
        for i in 0..l.num_paths() {
            prop_assert!(approx_le(ex.value(i), higher.value(i)));
            prop_assert!(approx_le(sum.value(i), ex.value(i) + eeta.value(i)));
            prop_assert!((scaled.value(i) - lambda * ex.value(i)).abs() <= DERIVED_TOL);
        }
    }

    #[test]
    fn f_tau_locality((f, seed) in family_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let l = f.lattice().clone();
        let tau = StoppingRule::random(&l, &mut rng, 0.4);
        let xi = random_variable(&mut rng, &l, -4.0, 4.0);
        // A is a union of boundary blocks, hence F_τ-measurable.
        let mut ind = vec![0.0; l.num_paths()];
        for n in tau.boundary() {
            if rand::Rng::gen_bool(&mut rng, 0.5) {
                l.block(n).for_each(|i| ind[i] = 1.0);
            }
        }
        let a = RandomVariable::from_values(&l, ind).unwrap();
        prop_assert!(a.is_measurable(&l, &tau));
        let fam: AmbiguityFamily = f.into();
        let lhs = oracle_rv(&fam, &tau, &a.zip_with(&xi, |x, y| x * y), CAP).unwrap();
        let rhs = oracle_rv(&fam, &tau, &xi, CAP).unwrap();
        for i in 0..l.num_paths() {
            prop_assert!((lhs.value(i) - a.value(i) * rhs.value(i)).abs() <= DERIVED_TOL);
        }
    }

    #[test]
    fn version_insensitivity(seed in any::<u64>(), k in 1usize..=3) {
        // Laws with zero entries leave some paths uncharged by every measure.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = Lattice::homogeneous(k, 1.0, vec![-1.0, 0.0, 1.0]).unwrap();
        let f = RectangularFamily::from_fn(l.clone(), |n| {
            if n.depth() % 2 == 0 {
                vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0]]
            } else {
                vec![vec![0.25, 0.5, 0.25]]
            }
        })
        .unwrap();
        let tau = StoppingRule::random(&l, &mut rng, 0.4);
        let xi = random_variable(&mut rng, &l, -4.0, 4.0);
        let fam: AmbiguityFamily = f.into();
        let roots = fam.enumerate_measures(&Node::root(), CAP).unwrap();
        let charged: Vec<bool> = (0..l.num_paths())
            .map(|i| roots.iter().any(|p| p.path_probs()[i] > 0.0))
            .collect();
        let noise = random_variable(&mut rng, &l, -100.0, 100.0);
        let other = RandomVariable::from_values(
            &l,
            (0..l.num_paths())
                .map(|i| if charged[i] { xi.value(i) } else { noise.value(i) })
                .collect(),
        )
        .unwrap();
        let a = oracle_rv(&fam, &tau, &xi, CAP).unwrap();
        let b = oracle_rv(&fam, &tau, &other, CAP).unwrap();
        for (i, n) in (0..l.num_paths()).map(|i| (i, tau.stopped_node(&l, i))) {
            let reachable = l.block(&n).any(|j| charged[j]);
            if reachable {
                prop_assert_eq!(a.value(i), b.value(i));
            }
        }
    }

    #[test]
    fn tower_and_esssup_hold_for_rectangular((f, seed) in family_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let l = f.lattice().clone();
        let (sigma, tau) = random_rule_pair(&mut rng, &l);
        let xi = random_variable(&mut rng, &l, -4.0, 4.0);
        let fam: AmbiguityFamily = f.into();
        let t = verify_tower(&fam, &sigma, &tau, &xi, CAP).unwrap();
        prop_assert!(t.deviation <= DERIVED_TOL);
        prop_assert!(t.dpp_deviation.unwrap() <= DERIVED_TOL);
        prop_assert!(t.one_sided);
        let e = verify_esssup_representation(&fam, &tau, &xi, CAP, DERIVED_TOL).unwrap();
        prop_assert_eq!(e.status, Status::Pass);
        let hit = StoppingRule::hitting(&l, 1.0);
        prop_assert_eq!(verify_optional_sampling(&fam, &hit, &xi, CAP).unwrap().status, Status::Pass);
    }

    #[test]
    fn optimal_kernel_attains_the_sup((f, seed) in family_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        let l = f.lattice().clone();
        let tau = StoppingRule::random(&l, &mut rng, 0.4);
        let xi = random_variable(&mut rng, &l, -4.0, 4.0);
        let dpp = sublinear_expectation_dpp(&f, &tau, &xi);
        let fam: AmbiguityFamily = f.into();
        let sel = optimal_kernel(&fam, &tau, &xi, CAP).unwrap();
        prop_assert!(sel.empty_nodes.is_empty());
        for n in tau.boundary() {
            let v = expectation(&sel.kernel[n], &xi.restrict(&l, n));
            prop_assert!((v - dpp.value(l.block(n).start)).abs() <= DERIVED_TOL);
        }
    }

    #[test]
    fn agreeing_on_f_tau_means_same_laws_before_the_boundary((f, seed) in family_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 6);
        let l = f.lattice().clone();
        let tau = StoppingRule::random(&l, &mut rng, 0.4);
        let fam: AmbiguityFamily = f.into();
        let roots = fam.enumerate_measures(&Node::root(), CAP).unwrap();
        let strictly_before: Vec<Node> = l
            .nodes()
            .filter(|n| n.depth() < l.num_steps() && l.block(n).all(|i| tau.time(i) > n.depth()))
            .collect();
        let masses = |p: &sublinear::TreeMeasure| -> Vec<u64> {
            tau.boundary().iter().map(|n| p.node_prob(n).to_bits()).collect()
        };
        for p in roots.iter().take(16) {
            for q in &roots {
                let by_mass = masses(p) == masses(q);
                let by_laws = strictly_before.iter().all(|n| p.transition(n) == q.transition(n));
                prop_assert_eq!(by_mass, by_laws);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rectangular_families_pass_exhaustive_checks((f, _) in small_family_strategy()) {
        let fam: AmbiguityFamily = f.into();
        let cfg = CheckConfig::exhaustive();
        prop_assert_eq!(check_invariance(&fam, &cfg).unwrap().status, Status::Pass);
        prop_assert_eq!(check_pasting(&fam, &cfg).unwrap().status, Status::Pass);
    }

    #[test]
    fn rectangular_families_pass_sampled_checks((f, seed) in family_strategy()) {
        let fam: AmbiguityFamily = f.into();
        let cfg = CheckConfig { seed, measure_cap: 64, kernel_cap: 4, rule_samples: 16, rule_cap: 32, ..CheckConfig::default() };
        prop_assert_eq!(check_invariance(&fam, &cfg).unwrap().status, Status::Pass);
        prop_assert_eq!(check_pasting(&fam, &cfg).unwrap().status, Status::Pass);
    }

    #[test]
    fn one_sided_tower_without_pasting(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam: AmbiguityFamily = pasting_violation().into();
        let l = fam.lattice().clone();
        let (sigma, tau) = random_rule_pair(&mut rng, &l);
        let xi = random_variable(&mut rng, &l, -4.0, 4.0);
        let t = verify_tower(&fam, &sigma, &tau, &xi, CAP).unwrap();
        prop_assert!(t.one_sided);
    }
}

#[test]
fn pasting_failure_breaks_the_tower() {
    let fam: AmbiguityFamily = pasting_violation().into();
    let l = fam.lattice().clone();
    let sigma = StoppingRule::constant(&l, 0).unwrap();
    let tau = StoppingRule::constant(&l, 1).unwrap();
    let xi = RandomVariable::from_fn(&l, |p| l.value_at(p).powi(2));
    let t = verify_tower(&fam, &sigma, &tau, &xi, CAP).unwrap();
    // Root: E[B_2²] = 2 under the uniform law; after conditioning each
    // depth-1 node may pick the point mass pushing |B_2| to 2.
    assert_eq!(t.lhs.value(0), 2.0);
    assert_eq!(t.rhs.value(0), 4.0);
    assert!(t.deviation > 1e-6);
    assert!(t.one_sided);
}

#[test]
fn tower_rejects_misordered_rules() {
    let l = Lattice::homogeneous(2, 1.0, vec![-1.0, 1.0]).unwrap();
    let f: AmbiguityFamily = RectangularFamily::from_fn(l.clone(), |_| vec![vec![0.5, 0.5]])
        .unwrap()
        .into();
    let xi = RandomVariable::terminal_value(&l);
    let a = StoppingRule::constant(&l, 2).unwrap();
    let b = StoppingRule::constant(&l, 1).unwrap();
    assert!(verify_tower(&f, &a, &b, &xi, CAP).is_err());
}
