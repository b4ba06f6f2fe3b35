//! Synchronous product of an MDPST with an LDBA or DRA.
//!
//! Product state `(s, q)` has index `s · |Q| + q`. The automaton reads the
//! label of the current model state, so every model action taken at `(s, q)`
//! moves the automaton to `δ(q, L(s))`. Büchi acceptance of that move is
//! attached to `(s, q)` itself.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde_json::Value;
use thiserror::Error;

use crate::automata::{Component, Dra, Ldba, RabinPair};
use crate::io::{parse_raw, raw_from_model, RawPair};
use crate::model::{MdpstModel, ModelError, Path};

pub const REJECT_ACTION: &str = "tau_rej";
const JUMP_PREFIX: &str = "eps_";

#[derive(Debug, Error)]
pub enum ProductError {
    #[error("automaton atoms missing from the model vocabulary: {0:?}")]
    ApMismatch(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("product file: {0}")]
    Format(String),
}

/// What a product action stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductAction {
    /// Model action with this index in the source model.
    Model(usize),
    /// ε-jump of the automaton to this state.
    Jump(usize),
    /// Self-loop of a state where the automaton has no move.
    Reject,
}

impl ProductAction {
    fn from_name(name: &str, index: usize) -> Self {
        if name == REJECT_ACTION {
            return ProductAction::Reject;
        }
        match name.strip_prefix(JUMP_PREFIX).and_then(|q| q.parse().ok()) {
            Some(q) => ProductAction::Jump(q),
            None => ProductAction::Model(index),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductMdpst {
    pub model: MdpstModel,
    pub accepting: BTreeSet<usize>,
    /// Lifted Rabin pairs; empty for Büchi products.
    pub pairs: Vec<RabinPair>,
    /// `(s, q)` per product state when built from a model and an automaton.
    pub coords: Option<Vec<(usize, usize)>>,
    /// Meaning of each action of `model`.
    pub kinds: Vec<ProductAction>,
    /// Automaton size when `coords` is present.
    pub num_q: Option<usize>,
}

fn check_ap(model: &MdpstModel, ap: &[String]) -> Result<(), ProductError> {
    let missing: Vec<String> = ap
        .iter()
        .filter(|a| !model.props().contains(a))
        .cloned()
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ProductError::ApMismatch(missing))
    }
}

fn qname(names: impl Fn(usize) -> Option<String>, q: usize) -> String {
    names(q).unwrap_or_else(|| format!("q{q}"))
}

/// Shared skeleton: `succ(s, q)` gives the automaton move on `L(s)`,
/// `jumps(q)` the ε-targets.
fn assemble(
    model: &MdpstModel,
    nq: usize,
    q0: usize,
    qnames: impl Fn(usize) -> Option<String>,
    succ: impl Fn(usize, usize) -> Option<usize>,
    jumps: impl Fn(usize) -> Vec<usize>,
) -> (MdpstModel, Vec<ProductAction>) {
    let jump_targets: BTreeSet<usize> = (0..nq).flat_map(&jumps).collect();
    let mut actions: Vec<String> = model.actions().to_vec();
    let mut kinds: Vec<ProductAction> = (0..actions.len()).map(ProductAction::Model).collect();
    let mut jump_action = vec![usize::MAX; nq];
    for &t in &jump_targets {
        jump_action[t] = actions.len();
        actions.push(format!("{JUMP_PREFIX}{t}"));
        kinds.push(ProductAction::Jump(t));
    }
    let idx = |s: usize, q: usize| s * nq + q;
    let moves = |s: usize, q: usize| succ(s, q).filter(|_| !model.choices(s).is_empty());
    let need_reject =
        (0..model.num_states()).any(|s| (0..nq).any(|q| moves(s, q).is_none() && jumps(q).is_empty()));
    let reject = actions.len();
    if need_reject {
        actions.push(REJECT_ACTION.into());
        kinds.push(ProductAction::Reject);
    }

    let mut b = MdpstModel::builder(model.props().to_vec(), actions);
    for s in 0..model.num_states() {
        for q in 0..nq {
            let name = format!("({},{})", model.state_name(s), qname(&qnames, q));
            let p = b.add_state(Some(name), model.label(s).clone());
            debug_assert_eq!(p, idx(s, q));
            if let Some(q2) = moves(s, q) {
                for c in model.choices(s) {
                    b.add_outcomes(
                        p,
                        c.action,
                        c.outcomes
                            .iter()
                            .map(|o| (o.prob, o.targets.iter().map(move |&t| idx(t, q2)))),
                    );
                }
            }
            let jumps = jumps(q);
            for &t in &jumps {
                b.add_outcomes(p, jump_action[t], [(1.0, [idx(s, t)])]);
            }
            if moves(s, q).is_none() && jumps.is_empty() {
                b.add_outcomes(p, reject, [(1.0, [p])]);
            }
        }
    }
    (b.build_unchecked(idx(model.initial(), q0)), kinds)
}

pub fn build_product(model: &MdpstModel, a: &Ldba) -> Result<ProductMdpst, ProductError> {
    check_ap(model, &a.ap)?;
    let nq = a.num_states();
    let (pm, kinds) = assemble(
        model,
        nq,
        a.initial,
        |q| a.states[q].name.clone(),
        |s, q| a.step(q, model.label(s)),
        |q| {
            if a.states[q].component == Component::Initial {
                a.eps[q].iter().copied().collect()
            } else {
                Vec::new()
            }
        },
    );
    let mut accepting = BTreeSet::new();
    for s in 0..model.num_states() {
        for q in 0..nq {
            if let Some((_, true)) = a.step_accepting(q, model.label(s)) {
                accepting.insert(s * nq + q);
            }
        }
    }
    Ok(ProductMdpst {
        model: pm,
        accepting,
        pairs: Vec::new(),
        coords: Some(coords(model.num_states(), nq)),
        kinds,
        num_q: Some(nq),
    })
}

pub fn build_product_dra(model: &MdpstModel, d: &Dra) -> Result<ProductMdpst, ProductError> {
    check_ap(model, &d.ap)?;
    let nq = d.num_states();
    let (pm, kinds) = assemble(
        model,
        nq,
        d.initial,
        |q| d.names[q].clone(),
        |s, q| d.step(q, model.label(s)),
        |_| Vec::new(),
    );
    let lift = |set: &BTreeSet<usize>| -> BTreeSet<usize> {
        (0..model.num_states())
            .flat_map(|s| set.iter().map(move |&q| s * nq + q))
            .collect()
    };
    Ok(ProductMdpst {
        model: pm,
        accepting: BTreeSet::new(),
        pairs: d
            .pairs
            .iter()
            .map(|p| RabinPair {
                fin: lift(&p.fin),
                inf: lift(&p.inf),
            })
            .collect(),
        coords: Some(coords(model.num_states(), nq)),
        kinds,
        num_q: Some(nq),
    })
}

fn coords(ns: usize, nq: usize) -> Vec<(usize, usize)> {
    (0..ns).flat_map(|s| (0..nq).map(move |q| (s, q))).collect()
}

impl ProductMdpst {
    /// Wraps a model whose states already are product states.
    pub fn from_model(model: MdpstModel, accepting: BTreeSet<usize>) -> Self {
        let kinds = model
            .actions()
            .iter()
            .enumerate()
            .map(|(i, n)| ProductAction::from_name(n, i))
            .collect();
        Self {
            model,
            accepting,
            pairs: Vec::new(),
            coords: None,
            kinds,
            num_q: None,
        }
    }

    pub fn num_states(&self) -> usize {
        self.model.num_states()
    }

    pub fn initial(&self) -> usize {
        self.model.initial()
    }

    pub fn is_rabin(&self) -> bool {
        !self.pairs.is_empty()
    }

    pub fn coord(&self, p: usize) -> Option<(usize, usize)> {
        self.coords.as_ref().map(|c| c[p])
    }

    /// Product index of `(s, q)`, if this product was built from parts.
    pub fn index_of(&self, s: usize, q: usize) -> Option<usize> {
        let nq = self.num_q?;
        let p = s * nq + q;
        (q < nq && p < self.num_states()).then_some(p)
    }

    /// Drops ε- and reject steps and maps product states to model states.
    pub fn project_path(&self, path: &Path) -> Option<Path> {
        let c = self.coords.as_ref()?;
        let mut out = Path {
            states: vec![c[*path.states.first()?].0],
            actions: Vec::new(),
        };
        for (i, &a) in path.actions.iter().enumerate() {
            let Some(&next) = path.states.get(i + 1) else {
                break;
            };
            if let ProductAction::Model(m) = self.kinds[a] {
                out.actions.push(m);
                out.states.push(c[next].0);
            }
        }
        Some(out)
    }

    pub fn to_json(&self) -> Value {
        let mut raw = raw_from_model(&self.model);
        raw.accepting = Some(self.accepting.iter().copied().collect());
        if self.is_rabin() {
            raw.pairs = Some(
                self.pairs
                    .iter()
                    .map(|p| RawPair {
                        fin: p.fin.iter().copied().collect(),
                        inf: p.inf.iter().copied().collect(),
                    })
                    .collect(),
            );
        }
        raw.coords = self
            .coords
            .as_ref()
            .map(|c| c.iter().map(|&(s, q)| [s, q]).collect());
        serde_json::to_value(raw).expect("product serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ProductError> {
        let (raw, model) = parse_raw(text)?;
        let n = model.num_states();
        let accepting: BTreeSet<usize> = raw.accepting.unwrap_or_default().into_iter().collect();
        let pairs: Vec<RabinPair> = raw
            .pairs
            .unwrap_or_default()
            .into_iter()
            .map(|p| RabinPair {
                fin: p.fin.into_iter().collect(),
                inf: p.inf.into_iter().collect(),
            })
            .collect();
        let out_of_range = accepting
            .iter()
            .chain(pairs.iter().flat_map(|p| p.fin.iter().chain(&p.inf)))
            .find(|&&p| p >= n);
        if let Some(p) = out_of_range {
            return Err(ProductError::Format(format!("accepting state {p} out of range")));
        }
        let coords = match raw.coords {
            Some(c) if c.len() != n => {
                return Err(ProductError::Format("coords length differs from state count".into()))
            }
            c => c.map(|c| c.into_iter().map(|[s, q]| (s, q)).collect()),
        };
        let mut p = Self::from_model(model, accepting);
        p.pairs = pairs;
        p.num_q = coords
            .as_ref()
            .map(|c: &Vec<(usize, usize)>| c.iter().map(|&(_, q)| q + 1).max().unwrap_or(0));
        p.coords = coords;
        Ok(p)
    }

    /// Graphviz rendering; set-valued outcomes go through a small point node.
    pub fn to_dot(&self) -> String {
        let m = &self.model;
        let mut out = String::from("digraph product {\n  rankdir=LR;\n");
        for s in 0..m.num_states() {
            let shape = if self.accepting.contains(&s) {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(out, "  n{s} [label={:?}, shape={shape}];", m.state_name(s));
        }
        let _ = writeln!(out, "  init [shape=point];\n  init -> n{};", m.initial());
        for s in 0..m.num_states() {
            for c in m.choices(s) {
                let a = m.action_name(c.action);
                for (k, o) in c.outcomes.iter().enumerate() {
                    let label = format!("{a}:{}", o.prob);
                    if let [t] = o.targets[..] {
                        let _ = writeln!(out, "  n{s} -> n{t} [label={label:?}];");
                    } else {
                        let h = format!("h{s}_{}_{k}", c.action);
                        let _ = writeln!(out, "  {h} [shape=point];");
                        let _ = writeln!(out, "  n{s} -> {h} [label={label:?}, arrowhead=none];");
                        for t in &o.targets {
                            let _ = writeln!(out, "  {h} -> n{t} [style=dashed];");
                        }
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{fixture_dra, fixture_ldba, FixtureKind};
    use crate::model::LabelSet;

    fn loop_model(label: &[&str]) -> MdpstModel {
        let mut b = MdpstModel::builder(vec!["a".into()], vec!["stay".into()]);
        b.add_state(None, label.iter().copied().collect::<LabelSet>());
        b.add_outcomes(0, 0, [(1.0, [0])]);
        b.build(0).unwrap()
    }

    #[test]
    fn gf_single_state() {
        let a = fixture_ldba(&FixtureKind::Gf("a".into())).unwrap();
        let p = build_product(&loop_model(&["a"]), &a).unwrap();
        assert_eq!(p.num_states(), 2);
        assert!(p.model.validate().is_empty());
        let init = p.initial();
        let jumps: Vec<_> = p
            .model
            .choices(init)
            .iter()
            .filter(|c| matches!(p.kinds[c.action], ProductAction::Jump(_)))
            .collect();
        assert_eq!(jumps.len(), 1);
        assert_eq!(jumps[0].outcomes[0].targets, vec![1]);
        assert_eq!(p.accepting, BTreeSet::from([1]));
        assert_eq!(p.model.choice(1, 0).unwrap().outcomes[0].targets, vec![1]);
    }

    #[test]
    fn dead_end_gets_reject_loop() {
        let kind = FixtureKind::PersistAvoid {
            groups: vec![vec!["a".into()]],
            avoid: Some("obs".into()),
        };
        let mut b = MdpstModel::builder(vec!["a".into(), "obs".into()], vec!["stay".into()]);
        b.add_state(None, ["obs"].into_iter().collect());
        b.add_outcomes(0, 0, [(1.0, [0])]);
        let m = b.build(0).unwrap();
        let p = build_product(&m, &fixture_ldba(&kind).unwrap()).unwrap();
        for s in 0..p.num_states() {
            let cs = p.model.choices(s);
            if cs.iter().all(|c| p.kinds[c.action] == ProductAction::Reject) {
                assert_eq!(cs.len(), 1);
                assert_eq!(cs[0].outcomes[0].targets, vec![s]);
            }
        }
        // (s, wait1) has no model move and no jump
        let c = p.model.choices(1);
        assert_eq!(c.len(), 1);
        assert_eq!(p.kinds[c[0].action], ProductAction::Reject);
        assert!(p.accepting.is_empty());
        assert!(p.model.validate().is_empty());
    }

    #[test]
    fn ap_mismatch() {
        let a = fixture_ldba(&FixtureKind::Gf("zzz".into())).unwrap();
        assert!(matches!(
            build_product(&loop_model(&[]), &a),
            Err(ProductError::ApMismatch(_))
        ));
    }

    #[test]
    fn dra_pairs_lift_pointwise() {
        let kind = FixtureKind::Gf("a".into());
        let d = fixture_dra(&kind).unwrap();
        let p = build_product_dra(&loop_model(&["a"]), &d).unwrap();
        assert_eq!(p.num_states(), d.num_states());
        assert_eq!(p.pairs.len(), d.pairs.len());
        assert_eq!(p.pairs[0].fin, d.pairs[0].fin);
    }

    #[test]
    fn json_round_trip() {
        let a = fixture_ldba(&FixtureKind::Gf("a".into())).unwrap();
        let p = build_product(&loop_model(&["a"]), &a).unwrap();
        let back = ProductMdpst::from_json(&p.to_json().to_string()).unwrap();
        assert_eq!(back, p);
        assert!(p.to_dot().contains("doublecircle"));
    }
}
