mod common;

use std::collections::BTreeSet;

use common::*;
use mdpst::oracle::{brute_force_value, brute_force_values, induced_chain, Objective};
use mdpst::synthesis::{solve_product, SynthOptions};
use mdpst::winning_region::compute_winning_region;

fn idx(name: &str) -> usize {
    appendix_b().model.state_index(name).unwrap()
}

fn set(names: &[&str]) -> BTreeSet<usize> {
    names.iter().map(|n| idx(n)).collect()
}

fn solved() -> mdpst::synthesis::Solution {
    let opts = SynthOptions {
        wr: tight(1e-12),
        round_robin: false,
    };
    solve_product(appendix_b(), &opts).unwrap()
}

#[test]
fn values_match_hand_computation() {
    let sol = solved();
    let v = &sol.strategy.values.values;
    // S1: 0.8 straight into S2; S9: 0.7 + 0.3 * 0.8
    assert!((v[idx("S1")] - 0.8).abs() < 1e-9);
    assert!((v[idx("S9")] - 0.94).abs() < 1e-9);
    for s in ["S2", "S3", "S4"] {
        assert_eq!(v[idx(s)], 1.0, "{s}");
    }
    for s in ["S5", "S6", "S7", "S8", "S10"] {
        assert!(v[idx(s)].abs() < 1e-12, "{s}");
    }
}

#[test]
fn region_and_choice_at_s2() {
    let sol = solved();
    assert_eq!(sol.region.states, set(&["S2", "S3", "S4"]));
    let b = sol.product.model.action_index("b").unwrap();
    assert_eq!(sol.strategy.choice[idx("S2")], Some(b));
}

#[test]
fn wr_removes_s5_after_first_pass() {
    let wr = compute_winning_region(&appendix_b(), &tight(1e-9));
    assert_eq!(wr.iterations.len(), 2);
    assert!(wr.iterations[0].removed_accepting.contains(&idx("S5")));
    assert_eq!(wr.accepting, set(&["S4"]));
}

#[test]
fn brute_force_agrees() {
    let p = appendix_b();
    let reach = brute_force_value(&p, &Objective::Reach(set(&["S2", "S3", "S4"]))).unwrap();
    let buchi = brute_force_value(&p, &Objective::Buchi(p.accepting.clone())).unwrap();
    assert!((reach - 0.8).abs() < 1e-12);
    assert!((buchi - 0.8).abs() < 1e-12);
    let all = brute_force_values(&p, &Objective::Buchi(p.accepting.clone())).unwrap();
    let sol = solved();
    for (s, want) in all.iter().enumerate() {
        assert!((sol.strategy.values.values[s] - want).abs() < 1e-9, "state {s}");
    }
}

fn positions(p: &mdpst::product::ProductMdpst, actions: &[Option<usize>]) -> Vec<usize> {
    (0..p.num_states())
        .map(|s| {
            let a = actions[s].unwrap_or(p.model.choices(s)[0].action);
            p.model.choices(s).iter().position(|c| c.action == a).unwrap()
        })
        .collect()
}

#[test]
fn chain_under_synthesised_choice() {
    let sol = solved();
    let p = &sol.product;
    let sigma = positions(p, &sol.strategy.choice);
    let chain = induced_chain(&p.model, &sigma, &[], p.initial());
    let r = chain.buchi_probabilities(&set(&["S4"])).unwrap();
    assert!((r[idx("S1")] - 0.8).abs() < 1e-12);
    assert_eq!(r[idx("S2")], 1.0);
}

#[test]
fn action_a_at_s2_loses_to_nature() {
    let p = appendix_b();
    let mut choice = vec![None; p.num_states()];
    choice[idx("S2")] = p.model.action_index("a");
    let sigma = positions(&p, &choice);
    let nature = [(idx("S2"), 0, idx("S5")), (idx("S6"), 0, idx("S8")), (idx("S8"), 0, idx("S7"))];
    let chain = induced_chain(&p.model, &sigma, &nature, p.initial());
    let r = chain.buchi_probabilities(&p.accepting).unwrap();
    assert!(r[idx("S1")].abs() < 1e-12);
}
