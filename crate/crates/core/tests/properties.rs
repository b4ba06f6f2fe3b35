mod common;

use std::collections::BTreeSet;

use common::*;
use mdpst::automata::{fixture_dra, fixture_ldba};
use mdpst::io::{canonical_json, model_from_json, model_to_json};
use mdpst::ltl::{eval_lasso, parse_ltl, Lasso};
use mdpst::model::LabelSet;
use mdpst::oracle::{brute_force_value, MarkovChain, Objective};
use mdpst::synthesis::{solve_product, SynthOptions};
use mdpst::winning_region::{robust_reach_vi, Arena};
use proptest::prelude::*;

fn opts() -> SynthOptions {
    SynthOptions {
        wr: tight(1e-12),
        round_robin: false,
    }
}

const ATOMS: [&str; 6] = ["b1", "b2", "b3", "b4", "b5", "obs"];

// obs is rare so that most words reach the interesting tail
fn letter() -> impl Strategy<Value = LabelSet> {
    (prop::collection::vec(any::<bool>(), 5), prop::bool::weighted(0.1)).prop_map(|(bases, obs)| {
        let mut l = LabelSet::new();
        for (i, on) in bases.into_iter().enumerate() {
            if on {
                l.insert(ATOMS[i]);
            }
        }
        if obs {
            l.insert("obs");
        }
        l
    })
}

fn lasso() -> impl Strategy<Value = Lasso> {
    (prop::collection::vec(letter(), 0..5), prop::collection::vec(letter(), 1..7))
        .prop_map(|(stem, cycle)| Lasso::new(stem, cycle))
}

fn chain() -> impl Strategy<Value = (MarkovChain, Vec<bool>)> {
    (2usize..9, any::<u64>()).prop_map(|(n, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|_| {
                let k = rng.random_range(1..=3);
                let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
                let total: f64 = w.iter().sum();
                w.iter().map(|x| (rng.random_range(0..n), x / total)).collect()
            })
            .collect();
        let good = (0..n).map(|_| rng.random_bool(0.3)).collect();
        (MarkovChain::new(rows, 0).unwrap(), good)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_json_round_trip(seed in any::<u64>()) {
        let m = random_product(seed, false).model;
        let text = canonical_json(&model_to_json(&m));
        let back = model_from_json(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(canonical_json(&model_to_json(&back)), text);
    }

    #[test]
    fn fixtures_decide_the_formula(w in lasso()) {
        let kind = persist_avoid();
        let phi = parse_ltl(&kind.formula()).unwrap();
        let truth = eval_lasso(&phi, &w);
        prop_assert_eq!(fixture_ldba(&kind).unwrap().accepts_lasso(&w), truth);
        prop_assert_eq!(fixture_dra(&kind).unwrap().accepts_lasso(&w), truth);
    }

    #[test]
    fn vi_is_monotone_in_sweeps(seed in any::<u64>(), k in 1usize..20) {
        let p = random_product(seed, false);
        let arena = Arena::from_product(&p);
        let targets: Vec<bool> = (0..p.num_states()).map(|s| p.accepting.contains(&s)).collect();
        let a = robust_reach_vi(&arena, &targets, 1e-300, k).values;
        let b = robust_reach_vi(&arena, &targets, 1e-300, k + 1).values;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(*y >= *x - 1e-15);
            prop_assert!((0.0..=1.0).contains(y));
        }
    }

    #[test]
    fn shrinking_sets_never_hurts(seed in any::<u64>(), r in any::<u64>()) {
        let p = random_product(seed, false);
        let q = refine(&p, r);
        // states the refined product can no longer reach are pruned there
        let live = forward_reachable(&q);
        let v = solve_product(p, &opts()).unwrap().strategy.values.values;
        let w = solve_product(q, &opts()).unwrap().strategy.values.values;
        for s in live {
            prop_assert!(w[s] >= v[s] - 1e-9, "state {}: {} < {}", s, w[s], v[s]);
        }
    }

    #[test]
    fn linear_solve_matches_iteration((c, good) in chain()) {
        let exact = c.reach_probabilities(&good).unwrap();
        let approx = c.reach_probabilities_iterative(&good, 200_000);
        for (x, y) in exact.iter().zip(&approx) {
            prop_assert!((x - y).abs() < 1e-6, "{} vs {}", x, y);
        }
    }

    #[test]
    fn reaching_bounds_buchi(seed in any::<u64>()) {
        let p = random_product(seed, false);
        let acc: BTreeSet<usize> = p.accepting.clone();
        let reach = brute_force_value(&p, &Objective::Reach(acc.clone())).unwrap();
        let buchi = brute_force_value(&p, &Objective::Buchi(acc)).unwrap();
        prop_assert!(reach >= buchi - 1e-12);
    }
}
