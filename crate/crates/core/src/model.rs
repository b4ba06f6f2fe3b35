//! MDPs with set-valued transitions: data model, validation and feasible
//! distributions.
//!
//! A transition of an [`MdpstModel`] assigns a probability mass to a *set* of
//! successor states. Which member of the set is actually entered is left to an
//! adversarial nature; [`AlphaParams`] fixes one such resolution.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for every probability-sum check.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),
    #[error("no such action at state {state}: {action}")]
    NoSuchAction { state: usize, action: usize },
    #[error("state {0} out of range")]
    StateOutOfRange(usize),
    #[error("alpha parameters: {0}")]
    Alpha(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
}

/// Set of atomic propositions holding in a state (one letter of `2^Prop`).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(BTreeSet<String>);

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, atom: &str) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: impl Into<String>) {
        self.0.insert(atom.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl<S: Into<String>> FromIterator<S> for LabelSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

/// One set-valued outcome `Θ` of a state-action pair together with its mass.
#[derive(Clone, Debug, PartialEq)]
pub struct SetOutcome {
    pub prob: f64,
    /// Sorted, duplicate-free.
    pub targets: Vec<usize>,
}

impl SetOutcome {
    pub fn new(prob: f64, targets: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = targets.into_iter().collect();
        Self {
            prob,
            targets: set.into_iter().collect(),
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.targets.len() == 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateData {
    pub name: Option<String>,
    pub label: LabelSet,
}

/// Outcomes of one action applicable at a state.
#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub action: usize,
    pub outcomes: Vec<SetOutcome>,
}

/// Finite MDPST `(S, s0, A, F, T, L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MdpstModel {
    props: Vec<String>,
    states: Vec<StateData>,
    initial: usize,
    actions: Vec<String>,
    /// Per state, sorted by action index.
    choices: Vec<Vec<Choice>>,
}

impl MdpstModel {
    pub fn builder(props: Vec<String>, actions: Vec<String>) -> ModelBuilder {
        ModelBuilder {
            props,
            actions,
            states: Vec::new(),
            transitions: Vec::new(),
        }
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, s: usize) -> &StateData {
        &self.states[s]
    }

    pub fn states(&self) -> &[StateData] {
        &self.states
    }

    pub fn label(&self, s: usize) -> &LabelSet {
        &self.states[s].label
    }

    pub fn state_name(&self, s: usize) -> String {
        self.states[s]
            .name
            .clone()
            .unwrap_or_else(|| format!("s{s}"))
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states
            .iter()
            .position(|st| st.name.as_deref() == Some(name))
    }

    /// Actions applicable at `s`, in action-index order.
    pub fn choices(&self, s: usize) -> &[Choice] {
        &self.choices[s]
    }

    pub fn choice(&self, s: usize, a: usize) -> Option<&Choice> {
        self.choices[s]
            .binary_search_by_key(&a, |c| c.action)
            .ok()
            .map(|i| &self.choices[s][i])
    }

    pub fn outcomes(&self, s: usize, a: usize) -> Result<&[SetOutcome], ModelError> {
        if s >= self.states.len() {
            return Err(ModelError::StateOutOfRange(s));
        }
        self.choice(s, a)
            .map(|c| c.outcomes.as_slice())
            .ok_or(ModelError::NoSuchAction {
                state: s,
                action: a,
            })
    }

    /// Number of `(state, action, Θ)` triples.
    pub fn num_transitions(&self) -> usize {
        self.choices
            .iter()
            .flat_map(|cs| cs.iter())
            .map(|c| c.outcomes.len())
            .sum()
    }

    /// `Post(s, a)`: every state some positive-mass outcome can lead to.
    pub fn post_states(&self, s: usize, a: usize) -> Result<BTreeSet<usize>, ModelError> {
        Ok(self
            .outcomes(s, a)?
            .iter()
            .filter(|o| o.prob > 0.0)
            .flat_map(|o| o.targets.iter().copied())
            .collect())
    }

    /// True iff every outcome is a singleton, i.e. the model is a plain MDP.
    pub fn is_classical_mdp(&self) -> bool {
        self.choices
            .iter()
            .flat_map(|cs| cs.iter())
            .flat_map(|c| c.outcomes.iter())
            .all(SetOutcome::is_singleton)
    }

    /// Concrete successor distribution obtained by resolving every `Θ` with
    /// the selection weights in `alpha`.
    pub fn realize_feasible_distribution(
        &self,
        s: usize,
        a: usize,
        alpha: &AlphaParams,
    ) -> Result<BTreeMap<usize, f64>, ModelError> {
        let outcomes = self.outcomes(s, a)?;
        let mut dist: BTreeMap<usize, f64> = BTreeMap::new();
        for (k, o) in outcomes.iter().enumerate() {
            let w = if o.is_singleton() {
                match alpha.get(s, a, k) {
                    Some(w) if w.len() != 1 => {
                        return Err(ModelError::Alpha(format!(
                            "weights for ({s},{a},{k}) have length {} but the set has 1 member",
                            w.len()
                        )))
                    }
                    _ => &[1.0][..],
                }
            } else {
                alpha.get(s, a, k).ok_or_else(|| {
                    ModelError::Alpha(format!("missing weights for ({s},{a},{k})"))
                })?
            };
            check_weights(w, o.targets.len())
                .map_err(|e| ModelError::Alpha(format!("({s},{a},{k}): {e}")))?;
            for (&t, &wt) in o.targets.iter().zip(w) {
                *dist.entry(t).or_insert(0.0) += wt * o.prob;
            }
        }
        Ok(dist)
    }

    /// Checks every structural invariant and reports each violation.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.states.len();
        if n == 0 {
            report.push(None, None, "model has no states");
            return report;
        }
        if self.initial >= n {
            report.push(None, None, format!("initial state {} out of range", self.initial));
        }
        let mut seen_names = BTreeSet::new();
        for (s, st) in self.states.iter().enumerate() {
            if let Some(name) = &st.name {
                if !seen_names.insert(name.clone()) {
                    report.push(Some(s), None, format!("duplicate state name {name:?}"));
                }
            }
            for atom in st.label.iter() {
                if !self.props.iter().any(|p| p == atom) {
                    report.push(
                        Some(s),
                        None,
                        format!("label atom {atom:?} not in proposition vocabulary"),
                    );
                }
            }
            if self.choices[s].is_empty() {
                report.push(Some(s), None, "state has no applicable action");
            }
            for c in &self.choices[s] {
                let aname = self.actions.get(c.action).cloned();
                if aname.is_none() {
                    report.push(Some(s), None, format!("action index {} out of range", c.action));
                }
                let mut mass = 0.0;
                for o in &c.outcomes {
                    mass += o.prob;
                    if !(o.prob > 0.0 && o.prob <= 1.0 + PROB_TOL) {
                        report.push(
                            Some(s),
                            aname.clone(),
                            format!("outcome probability {} outside (0,1]", o.prob),
                        );
                    }
                    if o.targets.is_empty() {
                        report.push(Some(s), aname.clone(), "empty target set");
                    }
                    for &t in &o.targets {
                        if t >= n {
                            report.push(Some(s), aname.clone(), format!("target {t} out of range"));
                        }
                    }
                }
                if (mass - 1.0).abs() > PROB_TOL {
                    report.push(
                        Some(s),
                        aname.clone(),
                        format!("probability mass {} ≠ 1", fmt_mass(mass)),
                    );
                }
            }
        }
        report
    }

}

fn fmt_mass(m: f64) -> String {
    let r = (m * 1e9).round() / 1e9;
    format!("{r}")
}

fn check_weights(w: &[f64], len: usize) -> Result<(), String> {
    if w.len() != len {
        return Err(format!("{} weights for a set of {} members", w.len(), len));
    }
    if w.iter().any(|&x| !(x >= 0.0)) {
        return Err("negative weight".into());
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(format!("weights sum to {sum}, expected 1"));
    }
    Ok(())
}

/// Incremental construction; duplicate target sets under one `(s, a)` are
/// merged by summing their masses.
#[derive(Clone, Debug)]
pub struct ModelBuilder {
    props: Vec<String>,
    actions: Vec<String>,
    states: Vec<StateData>,
    transitions: Vec<BTreeMap<usize, BTreeMap<Vec<usize>, f64>>>,
}

impl ModelBuilder {
    pub fn add_state(&mut self, name: Option<String>, label: LabelSet) -> usize {
        self.states.push(StateData { name, label });
        self.transitions.push(BTreeMap::new());
        self.states.len() - 1
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Adds outcomes for `(s, a)`; `a` indexes the action list.
    pub fn add_outcomes<I, T>(&mut self, s: usize, a: usize, outcomes: I)
    where
        I: IntoIterator<Item = (f64, T)>,
        T: IntoIterator<Item = usize>,
    {
        let entry = self.transitions[s].entry(a).or_default();
        for (p, targets) in outcomes {
            let set: BTreeSet<usize> = targets.into_iter().collect();
            *entry.entry(set.into_iter().collect()).or_insert(0.0) += p;
        }
    }

    /// Finishes without validating.
    pub fn build_unchecked(self, initial: usize) -> MdpstModel {
        let choices = self
            .transitions
            .into_iter()
            .map(|per_action| {
                per_action
                    .into_iter()
                    .map(|(action, outs)| Choice {
                        action,
                        outcomes: outs
                            .into_iter()
                            .map(|(targets, prob)| SetOutcome { prob, targets })
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        MdpstModel {
            props: self.props,
            states: self.states,
            initial,
            actions: self.actions,
            choices,
        }
    }

    pub fn build(self, initial: usize) -> Result<MdpstModel, ModelError> {
        let m = self.build_unchecked(initial);
        let report = m.validate();
        if report.is_empty() {
            Ok(m)
        } else {
            Err(ModelError::Invalid(report))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Issue {
    pub state: Option<usize>,
    pub action: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        match (&self.state, &self.action) {
            (Some(s), Some(a)) => write!(f, "(state {s}, action {a}): ")?,
            (Some(s), None) => write!(f, "(state {s}): ")?,
            (None, Some(a)) => write!(f, "(action {a}): ")?,
            (None, None) => {}
        }
        write!(f, "{}", self.message)
    }
}

/// List of violated invariants; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
    /// Non-fatal findings.
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn push(&mut self, state: Option<usize>, action: Option<String>, msg: impl Into<String>) {
        self.issues.push(Issue {
            state,
            action,
            line: None,
            message: msg.into(),
        });
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.issues {
            writeln!(f, "{i}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Per `(state, action, outcome index)` selection weights `α` over the
/// members of `Θ`, aligned with `SetOutcome::targets`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlphaParams {
    weights: HashMap<(usize, usize, usize), Vec<f64>>,
}

impl AlphaParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, s: usize, a: usize, outcome: usize, w: Vec<f64>) {
        self.weights.insert((s, a, outcome), w);
    }

    pub fn get(&self, s: usize, a: usize, outcome: usize) -> Option<&[f64]> {
        self.weights.get(&(s, a, outcome)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Checks that every set-valued outcome of `model` has valid weights.
    pub fn check(&self, model: &MdpstModel) -> Result<(), ModelError> {
        for s in 0..model.num_states() {
            for c in model.choices(s) {
                for (k, o) in c.outcomes.iter().enumerate() {
                    match self.get(s, c.action, k) {
                        Some(w) => check_weights(w, o.targets.len()),
                        None if o.is_singleton() => Ok(()),
                        None => Err("missing".into()),
                    }
                    .map_err(|e| ModelError::Alpha(format!("({s},{},{k}): {e}", c.action)))?;
                }
            }
        }
        Ok(())
    }
}

/// Path `s0 a0 s1 a1 …` of a model, stored as parallel vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Path {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Path {
    /// Each action applicable at its state, each successor inside some `Θ`.
    pub fn is_valid_in(&self, model: &MdpstModel) -> bool {
        if self.states.is_empty() || self.actions.len() + 1 < self.states.len() {
            return false;
        }
        self.states.windows(2).zip(&self.actions).all(|(w, &a)| {
            model
                .post_states(w[0], a)
                .map(|post| post.contains(&w[1]))
                .unwrap_or(false)
        })
    }

    pub fn trace(&self, model: &MdpstModel) -> Vec<LabelSet> {
        self.states.iter().map(|&s| model.label(s).clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_state(mass: f64) -> MdpstModel {
        let mut b = MdpstModel::builder(vec![], vec!["a".into()]);
        let s = b.add_state(None, LabelSet::new());
        b.add_outcomes(s, 0, [(mass, [s])]);
        b.build_unchecked(s)
    }

    #[test]
    fn self_loop_is_valid() {
        assert!(one_state(1.0).validate().is_empty());
    }

    #[test]
    fn short_mass_is_reported() {
        let r = one_state(0.9).validate();
        assert_eq!(r.issues.len(), 1);
        assert!(r.issues[0].message.contains("probability mass 0.9 ≠ 1"), "{r}");
        assert_eq!(r.issues[0].state, Some(0));
        assert_eq!(r.issues[0].action.as_deref(), Some("a"));
    }

    #[test]
    fn actionless_state_rejected() {
        let mut b = MdpstModel::builder(vec![], vec!["a".into()]);
        b.add_state(None, LabelSet::new());
        assert!(matches!(b.build(0), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn duplicate_sets_merge() {
        let mut b = MdpstModel::builder(vec![], vec!["a".into()]);
        let s = b.add_state(None, LabelSet::new());
        let t = b.add_state(None, LabelSet::new());
        b.add_outcomes(s, 0, [(0.25, vec![t, s]), (0.5, vec![s, t]), (0.25, vec![t])]);
        b.add_outcomes(t, 0, [(1.0, [t])]);
        let m = b.build(s).unwrap();
        let outs = m.outcomes(s, 0).unwrap();
        assert_eq!(outs.len(), 2);
        let total: f64 = outs.iter().map(|o| o.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(outs.iter().find(|o| o.targets == vec![0, 1]).unwrap().prob, 0.75);
    }

    #[test]
    fn post_of_missing_action_errors() {
        let m = one_state(1.0);
        assert!(matches!(m.post_states(0, 3), Err(ModelError::NoSuchAction { .. })));
        assert_eq!(m.post_states(0, 0).unwrap(), BTreeSet::from([0]));
    }

    #[test]
    fn alpha_validation() {
        let mut b = MdpstModel::builder(vec![], vec!["a".into()]);
        let s = b.add_state(None, LabelSet::new());
        let t = b.add_state(None, LabelSet::new());
        b.add_outcomes(s, 0, [(1.0, vec![s, t])]);
        b.add_outcomes(t, 0, [(1.0, [t])]);
        let m = b.build(s).unwrap();
        let alpha = AlphaParams::new();
        assert!(m.realize_feasible_distribution(s, 0, &alpha).is_err());
        let mut alpha = AlphaParams::new();
        alpha.insert(s, 0, 0, vec![0.7, 0.2]);
        assert!(m.realize_feasible_distribution(s, 0, &alpha).is_err());
        let mut alpha = AlphaParams::new();
        alpha.insert(s, 0, 0, vec![0.7, 0.3]);
        let d = m.realize_feasible_distribution(s, 0, &alpha).unwrap();
        assert_eq!(d[&0], 0.7);
        assert!(alpha.check(&m).is_ok());
    }
}
