use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AutState, Automaton, AutomatonError, Component, Dra, Edge, Guard, Ldba, RabinPair};

#[derive(Serialize, Deserialize)]
struct RawAutomaton {
    kind: String,
    ap: Vec<String>,
    states: Vec<RawState>,
    initial: usize,
    #[serde(default)]
    edges: Vec<RawEdge>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    eps: Vec<RawEps>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pairs: Vec<RawPair>,
}

#[derive(Serialize, Deserialize)]
struct RawState {
    id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    component: Option<String>,
    #[serde(default)]
    accepting: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RawEdge {
    from: usize,
    guard: String,
    to: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    accepting: bool,
}

#[derive(Serialize, Deserialize)]
struct RawEps {
    from: usize,
    to: usize,
}

#[derive(Serialize, Deserialize)]
struct RawPair {
    fin: Vec<usize>,
    inf: Vec<usize>,
}

fn bad(msg: impl Into<String>) -> AutomatonError {
    AutomatonError::Json(msg.into())
}

pub fn automaton_from_json(text: &str) -> Result<Automaton, AutomatonError> {
    let raw: RawAutomaton = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let n = raw.states.len();
    let mut order = vec![usize::MAX; n];
    for (i, st) in raw.states.iter().enumerate() {
        if st.id >= n || order[st.id] != usize::MAX {
            return Err(bad(format!("state ids must be 0..{n} without repeats, found {}", st.id)));
        }
        order[st.id] = i;
    }
    let mut edges = vec![Vec::new(); n];
    for e in &raw.edges {
        if e.from >= n {
            return Err(bad(format!("edge source {} out of range", e.from)));
        }
        let guard = Guard::parse(&e.guard).map_err(|m| bad(format!("guard {:?}: {m}", e.guard)))?;
        edges[e.from].push(Edge {
            guard,
            to: e.to,
            accepting: e.accepting,
        });
    }
    let state = |id: usize| &raw.states[order[id]];
    match raw.kind.as_str() {
        "ldba" => {
            let mut states = Vec::with_capacity(n);
            for id in 0..n {
                let st = state(id);
                let component = match st.component.as_deref() {
                    Some("init") => Component::Initial,
                    Some("acc") => Component::Accepting,
                    other => return Err(bad(format!("state {id}: bad component {other:?}"))),
                };
                states.push(AutState {
                    name: st.name.clone(),
                    component,
                    accepting: st.accepting,
                });
            }
            let mut eps = vec![BTreeSet::new(); n];
            for j in &raw.eps {
                if j.from >= n {
                    return Err(bad(format!("ε-jump source {} out of range", j.from)));
                }
                eps[j.from].insert(j.to);
            }
            let l = Ldba {
                ap: raw.ap,
                states,
                initial: raw.initial,
                edges,
                eps,
            };
            let report = l.validate();
            if !report.is_empty() {
                return Err(AutomatonError::Invalid(report));
            }
            Ok(Automaton::Ldba(l))
        }
        "dra" => {
            let d = Dra {
                ap: raw.ap,
                names: (0..n).map(|id| state(id).name.clone()).collect(),
                initial: raw.initial,
                edges,
                pairs: raw
                    .pairs
                    .into_iter()
                    .map(|p| RabinPair {
                        fin: p.fin.into_iter().collect(),
                        inf: p.inf.into_iter().collect(),
                    })
                    .collect(),
            };
            let report = d.validate();
            if !report.is_empty() {
                return Err(AutomatonError::Invalid(report));
            }
            Ok(Automaton::Dra(d))
        }
        other => Err(bad(format!("unknown kind {other:?}"))),
    }
}

fn raw_edges(edges: &[Vec<Edge>]) -> Vec<RawEdge> {
    edges
        .iter()
        .enumerate()
        .flat_map(|(q, es)| {
            es.iter().map(move |e| RawEdge {
                from: q,
                guard: e.guard.to_string(),
                to: e.to,
                accepting: e.accepting,
            })
        })
        .collect()
}

pub fn automaton_to_json(a: &Automaton) -> serde_json::Value {
    let raw = match a {
        Automaton::Ldba(l) => RawAutomaton {
            kind: "ldba".into(),
            ap: l.ap.clone(),
            states: l
                .states
                .iter()
                .enumerate()
                .map(|(id, s)| RawState {
                    id,
                    component: Some(
                        match s.component {
                            Component::Initial => "init",
                            Component::Accepting => "acc",
                        }
                        .into(),
                    ),
                    accepting: s.accepting,
                    name: s.name.clone(),
                })
                .collect(),
            initial: l.initial,
            edges: raw_edges(&l.edges),
            eps: l
                .eps
                .iter()
                .enumerate()
                .flat_map(|(q, ts)| ts.iter().map(move |&t| RawEps { from: q, to: t }))
                .collect(),
            pairs: Vec::new(),
        },
        Automaton::Dra(d) => RawAutomaton {
            kind: "dra".into(),
            ap: d.ap.clone(),
            states: d
                .names
                .iter()
                .enumerate()
                .map(|(id, name)| RawState {
                    id,
                    component: None,
                    accepting: false,
                    name: name.clone(),
                })
                .collect(),
            initial: d.initial,
            edges: raw_edges(&d.edges),
            eps: Vec::new(),
            pairs: d
                .pairs
                .iter()
                .map(|p| RawPair {
                    fin: p.fin.iter().copied().collect(),
                    inf: p.inf.iter().copied().collect(),
                })
                .collect(),
        },
    };
    serde_json::to_value(raw).expect("automaton serializes")
}
