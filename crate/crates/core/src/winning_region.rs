//! Almost-sure Büchi winning regions of product MDPSTs.
//!
//! The region is computed by repeatedly splitting every accepting state `t`
//! into an in-copy `t^in` (absorbing target) and an out-copy `t^out` (which
//! keeps the outgoing behaviour), and asking which states can reach the
//! in-copies with probability 1 against every nature. States that cannot are
//! dropped until the accepting out-copies themselves are all certified.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::product::ProductMdpst;

/// Action id of the self-loop given to in-copies.
pub const TAU0: usize = usize::MAX;

const PAR_THRESHOLD: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub struct ArenaOutcome {
    pub prob: f64,
    pub targets: Vec<usize>,
    /// Some member lies outside the arena; nature may pick it and the play is
    /// lost.
    pub escapes: bool,
}

impl ArenaOutcome {
    fn value(&self, v: &[f64]) -> f64 {
        if self.escapes {
            return 0.0;
        }
        self.targets.iter().map(|&t| v[t]).fold(f64::INFINITY, f64::min)
    }

    fn inside(&self, set: &[bool]) -> bool {
        !self.escapes && self.targets.iter().all(|&t| set[t])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArenaAction {
    /// Product action index, or [`TAU0`].
    pub id: usize,
    pub outcomes: Vec<ArenaOutcome>,
}

impl ArenaAction {
    /// `Σ_Θ T(Θ) · min_{s' ∈ Θ} v(s')`.
    pub fn q_value(&self, v: &[f64]) -> f64 {
        self.outcomes.iter().map(|o| o.prob * o.value(v)).sum()
    }
}

/// A set-valued game graph over dense indices; the common input of value
/// iteration and the qualitative fixpoint.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Arena {
    pub actions: Vec<Vec<ArenaAction>>,
}

impl Arena {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// The whole product, nothing escapes.
    pub fn from_product(p: &ProductMdpst) -> Self {
        let m = &p.model;
        Arena {
            actions: (0..m.num_states())
                .map(|s| {
                    m.choices(s)
                        .iter()
                        .map(|c| ArenaAction {
                            id: c.action,
                            outcomes: c
                                .outcomes
                                .iter()
                                .map(|o| ArenaOutcome {
                                    prob: o.prob,
                                    targets: o.targets.clone(),
                                    escapes: false,
                                })
                                .collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Best action value and the lowest-index action attaining it.
    pub fn backup(&self, s: usize, v: &[f64]) -> (f64, Option<usize>) {
        let mut best = (0.0, None);
        for (i, a) in self.actions[s].iter().enumerate() {
            let q = a.q_value(v);
            if best.1.is_none() || q > best.0 {
                best = (q, Some(i));
            }
        }
        best
    }
}

/// Retained states `S_p` of the product with their surviving actions.
#[derive(Clone, Debug, PartialEq)]
pub struct SubProduct {
    pub retained: Vec<bool>,
    /// Surviving product action indices per state (empty when not retained).
    pub actions: Vec<Vec<usize>>,
}

impl SubProduct {
    pub fn states(&self) -> BTreeSet<usize> {
        (0..self.retained.len()).filter(|&s| self.retained[s]).collect()
    }

    pub fn len(&self) -> usize {
        self.retained.iter().filter(|&&r| r).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn evict(&mut self, p: &ProductMdpst, keep: impl Fn(&[bool], &[usize]) -> bool) {
        loop {
            let mut changed = false;
            for s in 0..self.retained.len() {
                if !self.retained[s] {
                    continue;
                }
                let retained = &self.retained;
                let before = self.actions[s].len();
                self.actions[s].retain(|&a| {
                    let c = p.model.choice(s, a).expect("surviving action exists");
                    c.outcomes.iter().all(|o| keep(retained, &o.targets))
                        && c.outcomes.iter().any(|o| o.targets.iter().any(|&t| retained[t]))
                });
                changed |= before != self.actions[s].len();
                if self.actions[s].is_empty() {
                    self.retained[s] = false;
                    changed = true;
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Strict restriction: an action dies as soon as one of its sets leaves
    /// `S_p`; states without actions leave too, until nothing changes.
    pub fn evict_strict(&mut self, p: &ProductMdpst) {
        self.evict(p, |r, ts| ts.iter().all(|&t| r[t]));
    }

    /// Exactly `states`, with the actions that never leave them.
    pub fn restricted_to(p: &ProductMdpst, states: &BTreeSet<usize>) -> Self {
        let n = p.num_states();
        let retained: Vec<bool> = (0..n).map(|s| states.contains(&s)).collect();
        let actions = (0..n)
            .map(|s| {
                if !retained[s] {
                    return Vec::new();
                }
                p.model
                    .choices(s)
                    .iter()
                    .filter(|c| c.outcomes.iter().all(|o| o.targets.iter().all(|&t| retained[t])))
                    .map(|c| c.action)
                    .collect()
            })
            .collect();
        SubProduct { retained, actions }
    }

    pub fn remove(&mut self, states: impl IntoIterator<Item = usize>) {
        for s in states {
            self.retained[s] = false;
            self.actions[s].clear();
        }
    }
}

fn successors(p: &ProductMdpst, s: usize) -> impl Iterator<Item = usize> + '_ {
    p.model
        .choices(s)
        .iter()
        .flat_map(|c| c.outcomes.iter().flat_map(|o| o.targets.iter().copied()))
}

/// States forward-reachable from the initial state and backward-reachable
/// from `acc` (avoiding `excluded` on the way back), with actions kept while
/// any of their targets stays relevant.
pub fn prune_relevant(p: &ProductMdpst, acc: &BTreeSet<usize>, excluded: &BTreeSet<usize>) -> SubProduct {
    let n = p.num_states();
    let mut fwd = vec![false; n];
    let mut stack = vec![p.initial()];
    fwd[p.initial()] = true;
    while let Some(s) = stack.pop() {
        for t in successors(p, s) {
            if !fwd[t] {
                fwd[t] = true;
                stack.push(t);
            }
        }
    }
    let mut preds = vec![Vec::new(); n];
    for s in 0..n {
        for t in successors(p, s) {
            preds[t].push(s);
        }
    }
    let mut bwd = vec![false; n];
    let mut stack: Vec<usize> = acc.iter().copied().filter(|s| !excluded.contains(s)).collect();
    for &s in &stack {
        bwd[s] = true;
    }
    while let Some(t) = stack.pop() {
        for &s in &preds[t] {
            if !bwd[s] && !excluded.contains(&s) {
                bwd[s] = true;
                stack.push(s);
            }
        }
    }
    let retained: Vec<bool> = (0..n).map(|s| fwd[s] && bwd[s] && !excluded.contains(&s)).collect();
    let actions = (0..n)
        .map(|s| {
            if retained[s] {
                p.model.choices(s).iter().map(|c| c.action).collect()
            } else {
                Vec::new()
            }
        })
        .collect();
    let mut sub = SubProduct { retained, actions };
    // optimistic: only sets that lie entirely outside are dropped
    sub.evict(p, |_, _| true);
    sub
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SplitKind {
    Plain,
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SplitState {
    pub orig: usize,
    pub kind: SplitKind,
}

/// `S_p` with each retained accepting state split into an in- and an out-copy.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitProduct {
    pub arena: Arena,
    pub states: Vec<SplitState>,
    /// In-copies.
    pub targets: Vec<bool>,
    plain: Vec<Option<usize>>,
    in_copy: Vec<Option<usize>>,
    out_copy: Vec<Option<usize>>,
}

impl SplitProduct {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index(&self, orig: usize, kind: SplitKind) -> Option<usize> {
        let table = match kind {
            SplitKind::Plain => &self.plain,
            SplitKind::In => &self.in_copy,
            SplitKind::Out => &self.out_copy,
        };
        table.get(orig).copied().flatten()
    }

    /// The copy that carries the state's own behaviour: plain or out-copy.
    pub fn actor(&self, orig: usize) -> Option<usize> {
        self.index(orig, SplitKind::Plain)
            .or_else(|| self.index(orig, SplitKind::Out))
    }

    pub fn name(&self, p: &ProductMdpst, i: usize) -> String {
        let st = self.states[i];
        let base = p.model.state_name(st.orig);
        match st.kind {
            SplitKind::Plain => base,
            SplitKind::In => format!("{base}^in"),
            SplitKind::Out => format!("{base}^out"),
        }
    }
}

pub fn split_accepting(p: &ProductMdpst, sub: &SubProduct, acc: &BTreeSet<usize>) -> SplitProduct {
    let n = p.num_states();
    let mut states = Vec::new();
    let mut plain = vec![None; n];
    let mut in_copy = vec![None; n];
    let mut out_copy = vec![None; n];
    for s in 0..n {
        if !sub.retained[s] {
            continue;
        }
        if acc.contains(&s) {
            in_copy[s] = Some(states.len());
            states.push(SplitState {
                orig: s,
                kind: SplitKind::In,
            });
            out_copy[s] = Some(states.len());
            states.push(SplitState {
                orig: s,
                kind: SplitKind::Out,
            });
        } else {
            plain[s] = Some(states.len());
            states.push(SplitState {
                orig: s,
                kind: SplitKind::Plain,
            });
        }
    }
    // Θ̂: accepting members become in-copies, others stay, missing ones escape
    let hat = |targets: &[usize]| -> ArenaOutcome {
        let mut out = BTreeSet::new();
        let mut escapes = false;
        for &t in targets {
            match in_copy[t].or(plain[t]) {
                Some(i) => {
                    out.insert(i);
                }
                None => escapes = true,
            }
        }
        ArenaOutcome {
            prob: 0.0,
            targets: out.into_iter().collect(),
            escapes,
        }
    };
    let actions = states
        .iter()
        .map(|st| match st.kind {
            SplitKind::In => vec![ArenaAction {
                id: TAU0,
                outcomes: vec![ArenaOutcome {
                    prob: 1.0,
                    targets: vec![in_copy[st.orig].expect("in-copy exists")],
                    escapes: false,
                }],
            }],
            SplitKind::Plain | SplitKind::Out => sub.actions[st.orig]
                .iter()
                .map(|&a| ArenaAction {
                    id: a,
                    outcomes: p
                        .model
                        .choice(st.orig, a)
                        .expect("surviving action exists")
                        .outcomes
                        .iter()
                        .map(|o| ArenaOutcome {
                            prob: o.prob,
                            ..hat(&o.targets)
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    let targets = states.iter().map(|st| st.kind == SplitKind::In).collect();
    SplitProduct {
        arena: Arena { actions },
        states,
        targets,
        plain,
        in_copy,
        out_copy,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sweep(arena: &Arena, targets: &[bool], v: &[f64]) -> Vec<f64> {
    let f = |s: usize| if targets[s] { 1.0 } else { arena.backup(s, v).0 };
    if arena.len() >= PAR_THRESHOLD {
        (0..arena.len()).into_par_iter().map(f).collect()
    } else {
        (0..arena.len()).map(f).collect()
    }
}

/// Robust value iteration for `max_σ min_nature Pr(◇ targets)`, started from
/// the indicator of `targets`, with synchronous sweeps.
pub fn robust_reach_vi(arena: &Arena, targets: &[bool], theta: f64, max_iter: usize) -> ValueFunction {
    assert!(theta > 0.0, "theta must be positive");
    let mut v: Vec<f64> = targets.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    if targets.iter().all(|&t| t) {
        return ValueFunction {
            values: v,
            iterations: 0,
            converged: true,
        };
    }
    for it in 1..=max_iter {
        let next = sweep(arena, targets, &v);
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        debug_assert!(next.iter().zip(&v).all(|(a, b)| *a >= *b - 1e-12));
        v = next;
        if delta < theta {
            return ValueFunction {
                values: v,
                iterations: it,
                converged: true,
            };
        }
    }
    ValueFunction {
        values: v,
        iterations: max_iter,
        converged: false,
    }
}

/// Exact almost-sure reachability with the rank layering of the final inner
/// fixpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Qualitative {
    pub winning: Vec<bool>,
    /// Layer at which each winning state entered; targets have rank 0.
    pub rank: Vec<Option<usize>>,
    /// Position (in `arena.actions[s]`) of an action justifying the rank.
    pub witness: Vec<Option<usize>>,
}

impl Qualitative {
    pub fn set(&self) -> BTreeSet<usize> {
        (0..self.winning.len()).filter(|&s| self.winning[s]).collect()
    }
}

fn layers(arena: &Arena, targets: &[bool], x: &[bool]) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let n = arena.len();
    let mut rank: Vec<Option<usize>> = (0..n).map(|s| (targets[s] && x[s]).then_some(0)).collect();
    let mut witness = vec![None; n];
    let mut in_rank: Vec<bool> = rank.iter().map(Option::is_some).collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in (0..n).filter(|&s| x[s] && !in_rank[s]) {
        for a in &arena.actions[s] {
            for o in &a.outcomes {
                for &t in &o.targets {
                    preds[t].push(s);
                }
            }
        }
    }
    // a state can only qualify once the last member of one of its sets got
    // ranked, so each layer only looks at predecessors of the previous one
    let mut frontier: Vec<usize> = (0..n).filter(|&s| in_rank[s]).collect();
    let mut k = 0;
    loop {
        let mut candidates: Vec<usize> = frontier.iter().flat_map(|&t| preds[t].iter().copied()).collect();
        candidates.sort_unstable();
        candidates.dedup();
        let mut added = Vec::new();
        for s in candidates {
            if in_rank[s] {
                continue;
            }
            let found = arena.actions[s].iter().position(|a| {
                a.outcomes.iter().all(|o| o.inside(x)) && a.outcomes.iter().any(|o| o.inside(&in_rank))
            });
            if let Some(i) = found {
                added.push((s, i));
            }
        }
        if added.is_empty() {
            return (rank, witness);
        }
        k += 1;
        frontier.clear();
        for (s, i) in added {
            in_rank[s] = true;
            rank[s] = Some(k);
            witness[s] = Some(i);
            frontier.push(s);
        }
    }
}

/// `{s : max_σ min_nature Pr(◇ targets) = 1}` by the classical double
/// fixpoint: shrink `X` to the states whose rank layering toward
/// `targets ∩ X` covers them, until `X` is stable.
pub fn qualitative_as_reach(arena: &Arena, targets: &[bool]) -> Qualitative {
    let n = arena.len();
    let mut x = vec![true; n];
    loop {
        let (rank, witness) = layers(arena, targets, &x);
        let next: Vec<bool> = rank.iter().map(Option::is_some).collect();
        if next == x {
            return Qualitative {
                winning: x,
                rank,
                witness,
            };
        }
        x = next;
    }
}

const STEP_SWEEPS: usize = 20_000;

/// A quicker almost-sure strategy than the rank witnesses: each state plays
/// the action of least worst-case expected time to `targets`, except where
/// the resulting positional strategy would not itself reach `targets` almost
/// surely; there the rank witness is kept. The returned ranks are those of
/// the chosen strategy, so each chosen action justifies its state's rank.
pub fn quickest_witness(arena: &Arena, targets: &[bool], q: &Qualitative) -> Qualitative {
    let n = arena.len();
    let win = &q.winning;
    let safe: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            if !win[s] || targets[s] {
                return Vec::new();
            }
            (0..arena.actions[s].len())
                .filter(|&i| arena.actions[s][i].outcomes.iter().all(|o| o.inside(win)))
                .collect()
        })
        .collect();
    let cost = |s: usize, i: usize, e: &[f64]| -> f64 {
        1.0 + arena.actions[s][i]
            .outcomes
            .iter()
            .map(|o| o.prob * o.targets.iter().map(|&t| e[t]).fold(0.0, f64::max))
            .sum::<f64>()
    };
    // in-place sweeps from below
    let mut e = vec![0.0; n];
    for _ in 0..STEP_SWEEPS {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if safe[s].is_empty() {
                continue;
            }
            let best = safe[s].iter().map(|&i| cost(s, i, &e)).fold(f64::INFINITY, f64::min);
            delta = delta.max((best - e[s]) / best.max(1.0));
            e[s] = best;
        }
        if delta < 1e-6 {
            break;
        }
    }
    let mut choice: Vec<Option<usize>> = (0..n)
        .map(|s| {
            safe[s]
                .iter()
                .copied()
                .min_by(|&a, &b| cost(s, a, &e).total_cmp(&cost(s, b, &e)))
                .or(q.witness[s])
        })
        .collect();
    loop {
        let fixed = Arena {
            actions: (0..n)
                .map(|s| match choice[s] {
                    Some(i) => vec![arena.actions[s][i].clone()],
                    None => arena.actions[s].clone(),
                })
                .collect(),
        };
        let check = qualitative_as_reach(&fixed, targets);
        let bad: Vec<usize> = (0..n)
            .filter(|&s| win[s] && !check.winning[s] && choice[s] != q.witness[s])
            .collect();
        if bad.is_empty() {
            return Qualitative {
                winning: check.winning,
                rank: check.rank,
                witness: choice,
            };
        }
        for s in bad {
            choice[s] = q.witness[s];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Classifier {
    Qualitative,
    /// Probability 1 means a value of at least `1 - kappa`.
    Numeric { kappa: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WrOptions {
    pub theta: f64,
    pub classifier: Classifier,
    pub max_iter: usize,
}

impl Default for WrOptions {
    fn default() -> Self {
        Self {
            theta: 1e-3,
            classifier: Classifier::Qualitative,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub retained: usize,
    pub split_states: usize,
    /// Split-state name and value of the iteration's value iteration.
    pub values: BTreeMap<String, f64>,
    pub vi_sweeps: usize,
    pub prob_one: Vec<String>,
    /// Product states dropped after this iteration.
    pub removed: Vec<usize>,
    pub removed_accepting: Vec<usize>,
}

/// Per-state rank toward acceptance and the action realising it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionPlan {
    pub rank: Vec<Option<usize>>,
    /// Product action index to play in the region.
    pub action: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WinningRegion {
    pub states: BTreeSet<usize>,
    /// Accepting states still inside the region.
    pub accepting: BTreeSet<usize>,
    pub iterations: Vec<IterationLog>,
    pub warnings: Vec<String>,
    /// Region strategy data; one entry per Rabin pair (a single one for Büchi).
    pub plans: Vec<RegionPlan>,
    /// For Rabin products, the pair each region state is won through.
    pub pair_of: Vec<Option<usize>>,
    /// Final split model, for the round-robin variant.
    pub final_split: Option<SplitProduct>,
}

impl WinningRegion {
    fn empty(n: usize) -> Self {
        WinningRegion {
            states: BTreeSet::new(),
            accepting: BTreeSet::new(),
            iterations: Vec::new(),
            warnings: Vec::new(),
            plans: Vec::new(),
            pair_of: vec![None; n],
            final_split: None,
        }
    }

    pub fn contains(&self, s: usize) -> bool {
        self.states.contains(&s)
    }

    pub fn to_json(&self, p: &ProductMdpst) -> serde_json::Value {
        serde_json::json!({
            "states": self.states.iter().map(|&s| p.model.state_name(s)).collect::<Vec<_>>(),
            "state_ids": self.states,
            "accepting": self.accepting,
            "iterations": self.iterations,
            "warnings": self.warnings,
        })
    }
}

fn classify(split: &SplitProduct, vf: &ValueFunction, c: Classifier) -> Vec<bool> {
    match c {
        Classifier::Qualitative => qualitative_as_reach(&split.arena, &split.targets).winning,
        Classifier::Numeric { kappa } => vf.values.iter().map(|&v| v >= 1.0 - kappa).collect(),
    }
}

/// Algorithm 1 on the Büchi objective `□◇ acc`, with the states in
/// `excluded` forbidden.
pub fn winning_region_for(
    p: &ProductMdpst,
    acc: &BTreeSet<usize>,
    excluded: &BTreeSet<usize>,
    opts: &WrOptions,
) -> WinningRegion {
    let n = p.num_states();
    let mut wr = WinningRegion::empty(n);
    let mut sub = prune_relevant(p, acc, excluded);
    if !sub.retained[p.initial()] {
        wr.warnings
            .push(format!("initial state {} pruned as irrelevant", p.model.state_name(p.initial())));
    }
    let mut acc: BTreeSet<usize> = acc.iter().copied().filter(|&s| sub.retained[s]).collect();
    let mut iteration = 0;
    while !acc.is_empty() {
        iteration += 1;
        let split = split_accepting(p, &sub, &acc);
        let vf = robust_reach_vi(&split.arena, &split.targets, opts.theta, opts.max_iter);
        let certified = classify(&split, &vf, opts.classifier);
        let mut removed = Vec::new();
        let mut removed_accepting = Vec::new();
        for s in sub.states() {
            let actor = split.actor(s).expect("retained state has a copy");
            if !certified[actor] {
                removed.push(s);
                if acc.contains(&s) {
                    removed_accepting.push(s);
                }
            }
        }
        wr.iterations.push(IterationLog {
            iteration,
            retained: sub.len(),
            split_states: split.len(),
            values: (0..split.len())
                .map(|i| (split.name(p, i), vf.values[i]))
                .collect(),
            vi_sweeps: vf.iterations,
            prob_one: (0..split.len())
                .filter(|&i| certified[i])
                .map(|i| split.name(p, i))
                .collect(),
            removed: removed.clone(),
            removed_accepting: removed_accepting.clone(),
        });
        for s in &removed_accepting {
            acc.remove(s);
        }
        sub.remove(removed);
        sub.evict_strict(p);
        acc.retain(|&s| sub.retained[s]);
        if removed_accepting.is_empty() {
            break;
        }
    }
    if acc.is_empty() {
        return wr;
    }
    wr.states = sub.states();
    wr.accepting = acc;
    let split = split_accepting(p, &sub, &wr.accepting);
    let qual = qualitative_as_reach(&split.arena, &split.targets);
    let qual = quickest_witness(&split.arena, &split.targets, &qual);
    let mut plan = RegionPlan {
        rank: vec![None; n],
        action: vec![None; n],
    };
    for &s in &wr.states {
        let i = split.actor(s).expect("region state has a copy");
        plan.rank[s] = qual.rank[i];
        plan.action[s] = qual.witness[i].map(|k| split.arena.actions[i][k].id);
        wr.pair_of[s] = Some(0);
    }
    wr.plans.push(plan);
    wr.final_split = Some(split);
    wr
}

pub fn compute_winning_region(p: &ProductMdpst, opts: &WrOptions) -> WinningRegion {
    winning_region_for(p, &p.accepting, &BTreeSet::new(), opts)
}

/// Union over Rabin pairs of the Büchi regions for `Inf_k` with `Fin_k`
/// removed.
pub fn winning_region_rabin(p: &ProductMdpst, opts: &WrOptions) -> WinningRegion {
    let n = p.num_states();
    let mut out = WinningRegion::empty(n);
    for (k, pair) in p.pairs.iter().enumerate() {
        let wr = winning_region_for(p, &pair.inf, &pair.fin, opts);
        for &s in &wr.states {
            if out.pair_of[s].is_none() {
                out.pair_of[s] = Some(k);
            }
        }
        out.states.extend(&wr.states);
        out.accepting.extend(&wr.accepting);
        out.iterations.extend(wr.iterations);
        out.warnings.extend(wr.warnings.into_iter().map(|w| format!("pair {k}: {w}")));
        out.plans.push(wr.plans.into_iter().next().unwrap_or_default());
    }
    out
}

/// Büchi or Rabin, whichever the product carries.
pub fn winning_region(p: &ProductMdpst, opts: &WrOptions) -> WinningRegion {
    if p.is_rabin() {
        winning_region_rabin(p, opts)
    } else {
        compute_winning_region(p, opts)
    }
}
