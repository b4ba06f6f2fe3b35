//! Limit-deterministic Büchi automata and deterministic Rabin automata.
//!
//! Transition functions may be partial: a letter without a matching edge
//! rejects the word. Büchi acceptance may be marked on states, on edges, or
//! both; a run is accepting when it leaves an accepting state or takes an
//! accepting edge infinitely often.

mod fixtures;
mod guard;
mod hoa;
mod json;

use std::collections::{BTreeSet, HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::Lasso;
use crate::model::{LabelSet, ValidationReport};

pub use fixtures::{fixture_dra, fixture_ldba, FixtureKind};
pub use guard::Guard;
pub use hoa::parse_hoa;
pub use json::{automaton_from_json, automaton_to_json};

pub(crate) use guard::assignments;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("line {line}: {msg}")]
    Hoa { line: usize, msg: String },
    #[error("automaton json: {0}")]
    Json(String),
    #[error("invalid automaton:\n{0}")]
    Invalid(ValidationReport),
    #[error("fixture: {0}")]
    Fixture(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Initial,
    Accepting,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutState {
    pub name: Option<String>,
    pub component: Component,
    pub accepting: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub guard: Guard,
    pub to: usize,
    pub accepting: bool,
}

/// Limit-deterministic Büchi automaton. Deterministic inside the initial and
/// accepting components, nondeterministic only through ε-jumps from the
/// initial into the accepting component.
#[derive(Clone, Debug, PartialEq)]
pub struct Ldba {
    pub ap: Vec<String>,
    pub states: Vec<AutState>,
    pub initial: usize,
    pub edges: Vec<Vec<Edge>>,
    pub eps: Vec<BTreeSet<usize>>,
}

impl Ldba {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// The edge whose guard `letter` satisfies, if any.
    pub fn step_edge(&self, q: usize, letter: &LabelSet) -> Option<&Edge> {
        self.edges[q].iter().find(|e| e.guard.eval(letter))
    }

    pub fn step(&self, q: usize, letter: &LabelSet) -> Option<usize> {
        self.step_edge(q, letter).map(|e| e.to)
    }

    /// Successor and whether this move counts as an accepting visit.
    pub fn step_accepting(&self, q: usize, letter: &LabelSet) -> Option<(usize, bool)> {
        self.step_edge(q, letter)
            .map(|e| (e.to, e.accepting || self.states[q].accepting))
    }

    pub fn has_acceptance(&self) -> bool {
        self.states.iter().any(|s| s.accepting) || self.edges.iter().flatten().any(|e| e.accepting)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let n = self.states.len();
        if self.initial >= n {
            r.push(None, None, format!("initial state {} out of range", self.initial));
            return r;
        }
        if self.edges.len() != n || self.eps.len() != n {
            r.push(None, None, "edge table size differs from state count");
            return r;
        }
        if self.states[self.initial].component != Component::Initial {
            r.push(Some(self.initial), None, "initial state not in the initial component");
        }
        for (q, st) in self.states.iter().enumerate() {
            if st.accepting && st.component != Component::Accepting {
                r.push(Some(q), None, "accepting state in the initial component");
            }
            for (i, e) in self.edges[q].iter().enumerate() {
                if e.to >= n {
                    r.push(Some(q), None, format!("edge target {} out of range", e.to));
                    continue;
                }
                if self.states[e.to].component != st.component {
                    r.push(
                        Some(q),
                        None,
                        format!("edge to {} leaves the {:?} component", e.to, st.component),
                    );
                }
                if e.accepting && st.component != Component::Accepting {
                    r.push(Some(q), None, "accepting edge in the initial component");
                }
                for a in e.guard.atoms() {
                    if !self.ap.contains(&a) {
                        r.push(Some(q), None, format!("guard atom {a:?} not in AP"));
                    }
                }
                for other in &self.edges[q][i + 1..] {
                    if !Guard::disjoint(&e.guard, &other.guard) {
                        r.push(
                            Some(q),
                            None,
                            format!("nondeterministic edges: {} and {}", e.guard, other.guard),
                        );
                    }
                }
            }
            for &t in &self.eps[q] {
                if st.component != Component::Initial {
                    r.push(Some(q), None, "ε-jump from the accepting component");
                }
                if t >= n || self.states[t].component != Component::Accepting {
                    r.push(Some(q), None, format!("ε-jump target {t} not in the accepting component"));
                }
            }
        }
        if r.is_empty() {
            if !self.has_acceptance() {
                r.warn("no accepting states or edges");
            } else if !self.acceptance_reachable() {
                r.warn("acceptance unreachable from the initial state");
            }
        }
        r
    }

    fn acceptance_reachable(&self) -> bool {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(q) = queue.pop_front() {
            if self.states[q].accepting || self.edges[q].iter().any(|e| e.accepting) {
                return true;
            }
            for t in self.edges[q].iter().map(|e| e.to).chain(self.eps[q].iter().copied()) {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        false
    }

    /// Exact acceptance of `stem · loop^ω`: some run, possibly using one
    /// ε-jump, takes an accepting move on a cycle of the position×state graph.
    pub fn accepts_lasso(&self, w: &Lasso) -> bool {
        let n = w.positions();
        let mut ids: HashMap<(usize, usize), petgraph::graph::NodeIndex> = HashMap::new();
        let mut g: DiGraph<(), bool> = DiGraph::new();
        let start = (0, self.initial);
        ids.insert(start, g.add_node(()));
        let mut queue = VecDeque::from([start]);
        let add = |g: &mut DiGraph<(), bool>,
                       ids: &mut HashMap<_, _>,
                       queue: &mut VecDeque<_>,
                       from,
                       to: (usize, usize),
                       acc: bool| {
            let ti = *ids.entry(to).or_insert_with(|| {
                queue.push_back(to);
                g.add_node(())
            });
            g.add_edge(from, ti, acc);
        };
        while let Some((i, q)) = queue.pop_front() {
            debug_assert!(i < n);
            let from = ids[&(i, q)];
            if let Some((t, acc)) = self.step_accepting(q, w.letter(i)) {
                add(&mut g, &mut ids, &mut queue, from, (w.succ(i), t), acc);
            }
            for &t in &self.eps[q] {
                add(&mut g, &mut ids, &mut queue, from, (i, t), false);
            }
        }
        accepting_cycle(&g)
    }
}

/// Does some edge marked `true` lie inside a strongly connected component?
fn accepting_cycle(g: &DiGraph<(), bool>) -> bool {
    let mut comp = vec![usize::MAX; g.node_count()];
    for (c, scc) in tarjan_scc(g).into_iter().enumerate() {
        for v in scc {
            comp[v.index()] = c;
        }
    }
    g.raw_edges()
        .iter()
        .any(|e| e.weight && comp[e.source().index()] == comp[e.target().index()])
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RabinPair {
    pub fin: BTreeSet<usize>,
    pub inf: BTreeSet<usize>,
}

/// Deterministic Rabin automaton with state-based pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Dra {
    pub ap: Vec<String>,
    pub names: Vec<Option<String>>,
    pub initial: usize,
    pub edges: Vec<Vec<Edge>>,
    pub pairs: Vec<RabinPair>,
}

impl Dra {
    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    pub fn step(&self, q: usize, letter: &LabelSet) -> Option<usize> {
        self.edges[q].iter().find(|e| e.guard.eval(letter)).map(|e| e.to)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let n = self.edges.len();
        if self.initial >= n {
            r.push(None, None, format!("initial state {} out of range", self.initial));
        }
        if self.pairs.is_empty() {
            r.push(None, None, "no Rabin pairs");
        }
        for (k, p) in self.pairs.iter().enumerate() {
            if p.fin.iter().chain(&p.inf).any(|&q| q >= n) {
                r.push(None, None, format!("pair {k} references a missing state"));
            }
        }
        for (q, edges) in self.edges.iter().enumerate() {
            let atoms: BTreeSet<String> = edges.iter().flat_map(|e| e.guard.atoms()).collect();
            for a in &atoms {
                if !self.ap.contains(a) {
                    r.push(Some(q), None, format!("guard atom {a:?} not in AP"));
                }
            }
            if edges.iter().any(|e| e.to >= n) {
                r.push(Some(q), None, "edge target out of range");
            }
            let atoms: Vec<String> = atoms.into_iter().collect();
            for letter in assignments(&atoms) {
                let hits = edges.iter().filter(|e| e.guard.eval(&letter)).count();
                if hits == 0 {
                    r.push(Some(q), None, format!("no edge for letter {letter}"));
                    break;
                }
                if hits > 1 {
                    r.push(Some(q), None, format!("nondeterministic edges for letter {letter}"));
                    break;
                }
            }
        }
        r
    }

    pub fn accepts_lasso(&self, w: &Lasso) -> bool {
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut trail = Vec::new();
        let (mut i, mut q) = (0, self.initial);
        loop {
            if let Some(&start) = seen.get(&(i, q)) {
                let cycle: BTreeSet<usize> = trail[start..].iter().copied().collect();
                return self
                    .pairs
                    .iter()
                    .any(|p| p.fin.is_disjoint(&cycle) && !p.inf.is_disjoint(&cycle));
            }
            seen.insert((i, q), trail.len());
            trail.push(q);
            match self.step(q, w.letter(i)) {
                Some(t) => {
                    q = t;
                    i = w.succ(i);
                }
                None => return false,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Automaton {
    Ldba(Ldba),
    Dra(Dra),
}

impl Automaton {
    pub fn ap(&self) -> &[String] {
        match self {
            Automaton::Ldba(a) => &a.ap,
            Automaton::Dra(d) => &d.ap,
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Automaton::Ldba(a) => a.num_states(),
            Automaton::Dra(d) => d.num_states(),
        }
    }

    pub fn initial(&self) -> usize {
        match self {
            Automaton::Ldba(a) => a.initial,
            Automaton::Dra(d) => d.initial,
        }
    }

    pub fn step(&self, q: usize, letter: &LabelSet) -> Option<usize> {
        match self {
            Automaton::Ldba(a) => a.step(q, letter),
            Automaton::Dra(d) => d.step(q, letter),
        }
    }

    pub fn accepts_lasso(&self, w: &Lasso) -> bool {
        match self {
            Automaton::Ldba(a) => a.accepts_lasso(w),
            Automaton::Dra(d) => d.accepts_lasso(w),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            Automaton::Ldba(a) => a.validate(),
            Automaton::Dra(d) => d.validate(),
        }
    }

    /// Loads HOA text or native JSON, whichever `text` looks like.
    pub fn load(text: &str) -> Result<Self, AutomatonError> {
        if text.trim_start().starts_with("HOA:") {
            parse_hoa(text)
        } else {
            automaton_from_json(text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ls(atoms: &[&str]) -> LabelSet {
        atoms.iter().copied().collect()
    }

    fn gf(a: &str) -> Ldba {
        fixture_ldba(&FixtureKind::Gf(a.into())).unwrap()
    }

    #[test]
    fn gf_fixture_valid_and_accepts() {
        let a = gf("a");
        assert!(a.validate().is_empty(), "{}", a.validate());
        assert!(a.validate().warnings.is_empty());
        assert!(a.accepts_lasso(&Lasso::new(vec![], vec![ls(&["a"])])));
        assert!(!a.accepts_lasso(&Lasso::new(vec![], vec![ls(&[])])));
        assert!(a.accepts_lasso(&Lasso::new(vec![ls(&[])], vec![ls(&[]), ls(&["a"])])));
    }

    #[test]
    fn true_self_loop_step() {
        let a = gf("a");
        assert_eq!(a.step(a.initial, &ls(&["zzz"])), Some(a.initial));
    }

    #[test]
    fn accepting_state_in_initial_component_is_violation() {
        let mut a = gf("a");
        a.states[a.initial].accepting = true;
        let r = a.validate();
        assert!(r.issues.iter().any(|i| i.message.contains("accepting state in the initial")));
    }

    #[test]
    fn eps_into_initial_component_is_violation() {
        let mut a = gf("a");
        let q0 = a.initial;
        a.eps[q0].insert(q0);
        let r = a.validate();
        assert!(r.issues.iter().any(|i| i.message.contains("ε-jump target")), "{r}");
    }

    #[test]
    fn overlapping_guards_are_nondeterministic() {
        let mut a = gf("a");
        let q = 1;
        a.edges[q].push(Edge {
            guard: Guard::True,
            to: q,
            accepting: false,
        });
        assert!(a
            .validate()
            .issues
            .iter()
            .any(|i| i.message.contains("nondeterministic")));
    }

    #[test]
    fn unreachable_acceptance_warns() {
        let mut a = gf("a");
        a.eps[a.initial].clear();
        let r = a.validate();
        assert!(r.is_empty());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn dra_partial_run_rejects() {
        let d = Dra {
            ap: vec!["a".into()],
            names: vec![None],
            initial: 0,
            edges: vec![vec![Edge {
                guard: Guard::atom("a"),
                to: 0,
                accepting: false,
            }]],
            pairs: vec![RabinPair {
                fin: BTreeSet::new(),
                inf: BTreeSet::from([0]),
            }],
        };
        assert!(d.accepts_lasso(&Lasso::new(vec![], vec![ls(&["a"])])));
        assert!(!d.accepts_lasso(&Lasso::new(vec![], vec![ls(&[])])));
        assert!(!d.validate().is_empty());
    }
}
