#![allow(dead_code)]

use std::collections::BTreeSet;

use mdpst::automata::FixtureKind;
use mdpst::model::{LabelSet, MdpstModel};
use mdpst::product::ProductMdpst;
use mdpst::winning_region::{Classifier, WrOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn appendix_b() -> ProductMdpst {
    let text = std::fs::read_to_string(fixture_path("appendix_b.json")).unwrap();
    ProductMdpst::from_json(&text).unwrap()
}

pub fn persist_avoid() -> FixtureKind {
    FixtureKind::PersistAvoid {
        groups: vec![
            vec!["b1".into(), "b2".into()],
            vec!["b3".into()],
            vec!["b4".into(), "b5".into()],
        ],
        avoid: Some("obs".into()),
    }
}

pub fn tight(theta: f64) -> WrOptions {
    WrOptions {
        theta,
        classifier: Classifier::Qualitative,
        max_iter: 10_000_000,
    }
}

fn distinct(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut out = BTreeSet::new();
    while out.len() < k.min(n) {
        out.insert(rng.random_range(0..n));
    }
    out.into_iter().collect()
}

/// Small random product: 2..=8 states, 1..=2 actions, 1..=2 outcomes per
/// action with masses in quarters, sets of 1..=2 members (1 when
/// `singletons`), accepting states drawn with probability 0.3.
pub fn random_product(seed: u64, singletons: bool) -> ProductMdpst {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=8);
    let mut b = MdpstModel::builder(vec![], vec!["a0".into(), "a1".into()]);
    for _ in 0..n {
        b.add_state(None, LabelSet::new());
    }
    for s in 0..n {
        let acts = if rng.random_bool(0.5) { 2 } else { 1 };
        for a in 0..acts {
            let masses = if rng.random_bool(0.5) {
                vec![1.0]
            } else {
                let p = [0.25, 0.5, 0.75][rng.random_range(0..3)];
                vec![p, 1.0 - p]
            };
            let outs: Vec<(f64, Vec<usize>)> = masses
                .into_iter()
                .map(|p| {
                    let k = if singletons { 1 } else { rng.random_range(1..=2) };
                    (p, distinct(&mut rng, n, k))
                })
                .collect();
            b.add_outcomes(s, a, outs);
        }
    }
    let model = b.build(0).unwrap();
    let acc: BTreeSet<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
    ProductMdpst::from_model(model, acc)
}

/// Same product with every set replaced by a random nonempty subset.
pub fn refine(p: &ProductMdpst, seed: u64) -> ProductMdpst {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = &p.model;
    let mut b = MdpstModel::builder(m.props().to_vec(), m.actions().to_vec());
    for s in 0..m.num_states() {
        b.add_state(m.state(s).name.clone(), m.label(s).clone());
    }
    for s in 0..m.num_states() {
        for c in m.choices(s) {
            let outs: Vec<(f64, Vec<usize>)> = c
                .outcomes
                .iter()
                .map(|o| {
                    let keep: Vec<usize> = loop {
                        let k: Vec<usize> = o.targets.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                        if !k.is_empty() {
                            break k;
                        }
                    };
                    (o.prob, keep)
                })
                .collect();
            b.add_outcomes(s, c.action, outs);
        }
    }
    ProductMdpst::from_model(b.build(m.initial()).unwrap(), p.accepting.clone())
}

/// States reachable from the initial state along any member of any set.
pub fn forward_reachable(p: &ProductMdpst) -> BTreeSet<usize> {
    let m = &p.model;
    let mut seen = BTreeSet::from([m.initial()]);
    let mut stack = vec![m.initial()];
    while let Some(s) = stack.pop() {
        for c in m.choices(s) {
            for o in &c.outcomes {
                for &t in &o.targets {
                    if seen.insert(t) {
                        stack.push(t);
                    }
                }
            }
        }
    }
    seen
}
