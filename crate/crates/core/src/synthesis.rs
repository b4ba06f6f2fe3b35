//! From winning regions to strategies: the reachability values toward the
//! region, a positional product strategy, and its translation into a
//! finite-memory strategy of the original model.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::automata::Automaton;
use crate::model::MdpstModel;
use crate::product::{build_product, build_product_dra, ProductAction, ProductError, ProductMdpst};
use crate::winning_region::{
    qualitative_as_reach, quickest_witness, robust_reach_vi, split_accepting, winning_region, Arena, SubProduct,
    ValueFunction, WinningRegion, WrOptions,
};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error("region state {0} has no rank")]
    Unranked(String),
    #[error("cycle of ε-jumps at model state {s}, automaton state {q}")]
    EpsCycle { s: usize, q: usize },
    #[error("product has no (state, automaton state) coordinates")]
    NoCoords,
    #[error("strategy file: {0}")]
    Format(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthOptions {
    pub wr: WrOptions,
    pub round_robin: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            wr: WrOptions::default(),
            round_robin: false,
        }
    }
}

/// One round-robin phase: steer toward `target` while it is reachable
/// almost surely inside the region.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub target: usize,
    pub choice: Vec<Option<usize>>,
}

/// Positional product strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductStrategy {
    /// Product action per state.
    pub choice: Vec<Option<usize>>,
    pub in_region: Vec<bool>,
    /// Region ranks; outside the region, the distance layer toward it.
    pub rank: Vec<Option<usize>>,
    pub values: ValueFunction,
    pub stages: Vec<Stage>,
}

/// Robust reachability of the region over the whole product.
pub fn reach_values_to_wr(p: &ProductMdpst, w: &WinningRegion, theta: f64) -> ValueFunction {
    reach_values_with(p, &Arena::from_product(p), w, theta, WrOptions::default().max_iter)
}

fn reach_values_with(
    p: &ProductMdpst,
    arena: &Arena,
    w: &WinningRegion,
    theta: f64,
    max_iter: usize,
) -> ValueFunction {
    let targets: Vec<bool> = (0..p.num_states()).map(|s| w.contains(s)).collect();
    robust_reach_vi(arena, &targets, theta, max_iter)
}

/// Outside the region: among actions within `tol` of the best, one whose
/// some set lies entirely in a lower distance layer (lowest index first);
/// inside: the rank-justifying action of the region plan.
pub fn extract_strategy(
    p: &ProductMdpst,
    w: &WinningRegion,
    v: &ValueFunction,
    tol: f64,
) -> Result<ProductStrategy, SynthesisError> {
    let n = p.num_states();
    let arena = Arena::from_product(p);
    let mut choice = vec![None; n];
    let mut rank = vec![None; n];
    let mut in_region = vec![false; n];
    for &s in &w.states {
        let k = w.pair_of[s].unwrap_or(0);
        let plan = &w.plans[k];
        match (plan.rank[s], plan.action[s]) {
            (Some(r), Some(a)) => {
                rank[s] = Some(r);
                choice[s] = Some(a);
                in_region[s] = true;
            }
            _ => return Err(SynthesisError::Unranked(p.model.state_name(s))),
        }
    }

    let values = &v.values;
    let near_optimal: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let best = arena.backup(s, values).0;
            (0..arena.actions[s].len())
                .filter(|&i| arena.actions[s][i].q_value(values) >= best - tol)
                .collect()
        })
        .collect();
    let mut layered: Vec<bool> = in_region.clone();
    let mut k = 0;
    loop {
        let mut added = Vec::new();
        for s in 0..n {
            if layered[s] || values[s] <= 0.0 {
                continue;
            }
            let found = near_optimal[s].iter().copied().find(|&i| {
                arena.actions[s][i]
                    .outcomes
                    .iter()
                    .any(|o| o.prob > 0.0 && o.targets.iter().all(|&t| layered[t]))
            });
            if let Some(i) = found {
                added.push((s, i));
            }
        }
        if added.is_empty() {
            break;
        }
        k += 1;
        for (s, i) in added {
            layered[s] = true;
            rank[s] = Some(k);
            choice[s] = Some(arena.actions[s][i].id);
        }
    }
    for s in 0..n {
        if choice[s].is_none() {
            choice[s] = arena.backup(s, values).1.map(|i| arena.actions[s][i].id);
        }
    }
    Ok(ProductStrategy {
        choice,
        in_region,
        rank,
        values: v.clone(),
        stages: Vec::new(),
    })
}

/// Round-robin phases over the accepting states of a Büchi region.
pub fn round_robin_stages(p: &ProductMdpst, w: &WinningRegion) -> Vec<Stage> {
    if p.is_rabin() {
        return Vec::new();
    }
    let sub = SubProduct::restricted_to(p, &w.states);
    w.accepting
        .iter()
        .map(|&t| {
            let split = split_accepting(p, &sub, &BTreeSet::from([t]));
            let q = qualitative_as_reach(&split.arena, &split.targets);
            let q = quickest_witness(&split.arena, &split.targets, &q);
            let mut choice = vec![None; p.num_states()];
            for &s in &w.states {
                let i = split.actor(s).expect("region state has a copy");
                if q.winning[i] {
                    choice[s] = q.witness[i].map(|k| split.arena.actions[i][k].id);
                }
            }
            Stage { target: t, choice }
        })
        .collect()
}

/// Actions and ε-jumps keyed by `(model state, automaton state)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Policy {
    pub choices: BTreeMap<(usize, usize), String>,
    pub jumps: BTreeMap<(usize, usize), usize>,
}

impl Policy {
    fn defines(&self, s: usize, q: usize) -> bool {
        self.choices.contains_key(&(s, q)) || self.jumps.contains_key(&(s, q))
    }
}

/// Finite-memory strategy of the model: the memory is the automaton state.
#[derive(Clone, Debug, PartialEq)]
pub struct MdpstStrategy {
    pub initial_memory: usize,
    pub policy: Policy,
    /// Round-robin phases `(target (s, q), policy)`; empty for the default
    /// rank-following strategy.
    pub stages: Vec<((usize, usize), Policy)>,
    pub value: f64,
}

impl MdpstStrategy {
    /// Follows ε-jumps from `(s, q)` and returns the resulting memory and
    /// the model action to play, if any.
    pub fn resolve(&self, stage: Option<usize>, s: usize, q: usize) -> Result<(usize, Option<&str>), SynthesisError> {
        let mut q = q;
        let mut seen = BTreeSet::new();
        loop {
            if !seen.insert(q) {
                return Err(SynthesisError::EpsCycle { s, q });
            }
            let pol = match stage.and_then(|k| self.stages.get(k)) {
                Some((_, p)) if p.defines(s, q) => p,
                _ => &self.policy,
            };
            if let Some(&t) = pol.jumps.get(&(s, q)) {
                q = t;
                continue;
            }
            return Ok((q, pol.choices.get(&(s, q)).map(String::as_str)));
        }
    }

    pub fn to_json(&self) -> Value {
        fn pol(p: &Policy) -> (Vec<Value>, Vec<Value>) {
            (
                p.choices
                    .iter()
                    .map(|(&(s, q), a)| serde_json::json!({"s": s, "q": q, "action": a}))
                    .collect(),
                p.jumps
                    .iter()
                    .map(|(&(s, q), &t)| serde_json::json!({"s": s, "q": q, "to_q": t}))
                    .collect(),
            )
        }
        let (choices, jumps) = pol(&self.policy);
        let mut v = serde_json::json!({
            "memory": "automaton-state",
            "initial_memory": self.initial_memory,
            "choices": choices,
            "jumps": jumps,
            "value": self.value,
        });
        if !self.stages.is_empty() {
            v["round_robin"] = self
                .stages
                .iter()
                .map(|(t, p)| {
                    let (choices, jumps) = pol(p);
                    serde_json::json!({"target": {"s": t.0, "q": t.1}, "choices": choices, "jumps": jumps})
                })
                .collect();
        }
        v
    }

    pub fn from_json(text: &str) -> Result<Self, SynthesisError> {
        #[derive(Deserialize)]
        struct RawChoice {
            s: usize,
            q: usize,
            action: String,
        }
        #[derive(Deserialize)]
        struct RawJump {
            s: usize,
            q: usize,
            to_q: usize,
        }
        #[derive(Deserialize)]
        struct RawTarget {
            s: usize,
            q: usize,
        }
        #[derive(Deserialize)]
        struct RawStage {
            target: RawTarget,
            choices: Vec<RawChoice>,
            #[serde(default)]
            jumps: Vec<RawJump>,
        }
        #[derive(Deserialize)]
        struct Raw {
            initial_memory: usize,
            choices: Vec<RawChoice>,
            #[serde(default)]
            jumps: Vec<RawJump>,
            value: f64,
            #[serde(default)]
            round_robin: Vec<RawStage>,
        }
        let policy = |c: Vec<RawChoice>, j: Vec<RawJump>| Policy {
            choices: c.into_iter().map(|c| ((c.s, c.q), c.action)).collect(),
            jumps: j.into_iter().map(|j| ((j.s, j.q), j.to_q)).collect(),
        };
        let raw: Raw = serde_json::from_str(text).map_err(|e| SynthesisError::Format(e.to_string()))?;
        Ok(MdpstStrategy {
            initial_memory: raw.initial_memory,
            policy: policy(raw.choices, raw.jumps),
            stages: raw
                .round_robin
                .into_iter()
                .map(|st| ((st.target.s, st.target.q), policy(st.choices, st.jumps)))
                .collect(),
            value: raw.value,
        })
    }
}

fn induce_policy(choice: &[Option<usize>], p: &ProductMdpst, coords: &[(usize, usize)]) -> Policy {
    let mut pol = Policy::default();
    for (x, a) in choice.iter().enumerate() {
        let Some(a) = *a else { continue };
        let (s, q) = coords[x];
        match p.kinds[a] {
            ProductAction::Model(_) => {
                pol.choices.insert((s, q), p.model.action_name(a).to_string());
            }
            ProductAction::Jump(t) => {
                pol.jumps.insert((s, q), t);
            }
            ProductAction::Reject => {}
        }
    }
    pol
}

/// Collapses ε-actions into memory updates.
pub fn induce_strategy(ps: &ProductStrategy, p: &ProductMdpst) -> Result<MdpstStrategy, SynthesisError> {
    let coords = p.coords.as_ref().ok_or(SynthesisError::NoCoords)?;
    let policy = induce_policy(&ps.choice, p, coords);
    let stages = ps
        .stages
        .iter()
        .map(|st| (coords[st.target], induce_policy(&st.choice, p, coords)))
        .collect();
    let (_, q0) = coords[p.initial()];
    let out = MdpstStrategy {
        initial_memory: q0,
        policy,
        stages,
        value: ps.values.values[p.initial()],
    };
    for &(s, q) in out.policy.jumps.keys() {
        out.resolve(None, s, q)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    /// Product construction, seconds.
    pub t_mdl: f64,
    pub t_wr: f64,
    pub t_vi: f64,
    pub t_extract: f64,
    /// Everything after product construction.
    pub t_sys: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolutionReport {
    pub value: f64,
    pub product_states: usize,
    pub product_transitions: usize,
    pub wr_size: usize,
    pub wr_iterations: usize,
    pub vi_sweeps: usize,
    pub vi_converged: bool,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub report: SolutionReport,
    pub product: ProductMdpst,
    pub region: WinningRegion,
    pub strategy: ProductStrategy,
}

/// Region, values and positional strategy for an already built product.
pub fn solve_product(p: ProductMdpst, opts: &SynthOptions) -> Result<Solution, SynthesisError> {
    let t0 = Instant::now();
    let region = winning_region(&p, &opts.wr);
    let t_wr = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let arena = Arena::from_product(&p);
    let values = reach_values_with(&p, &arena, &region, opts.wr.theta, opts.wr.max_iter);
    let t_vi = t1.elapsed().as_secs_f64();
    let t2 = Instant::now();
    let mut strategy = extract_strategy(&p, &region, &values, opts.wr.theta.max(1e-12))?;
    if opts.round_robin {
        strategy.stages = round_robin_stages(&p, &region);
    }
    let t_extract = t2.elapsed().as_secs_f64();
    let report = SolutionReport {
        value: values.values[p.initial()],
        product_states: p.num_states(),
        product_transitions: p.model.num_transitions(),
        wr_size: region.states.len(),
        wr_iterations: region.iterations.len(),
        vi_sweeps: values.iterations,
        vi_converged: values.converged,
        timings: Timings {
            t_mdl: 0.0,
            t_wr,
            t_vi,
            t_extract,
            t_sys: t0.elapsed().as_secs_f64(),
        },
    };
    Ok(Solution {
        report,
        product: p,
        region,
        strategy,
    })
}

pub fn build(model: &MdpstModel, aut: &Automaton) -> Result<ProductMdpst, ProductError> {
    match aut {
        Automaton::Ldba(l) => build_product(model, l),
        Automaton::Dra(d) => build_product_dra(model, d),
    }
}

/// The whole pipeline; returns the report, the induced model strategy and
/// the intermediate results.
pub fn solve(
    model: &MdpstModel,
    aut: &Automaton,
    opts: &SynthOptions,
) -> Result<(Solution, MdpstStrategy), SynthesisError> {
    let t0 = Instant::now();
    let p = build(model, aut)?;
    let t_mdl = t0.elapsed().as_secs_f64();
    let mut sol = solve_product(p, opts)?;
    sol.report.timings.t_mdl = t_mdl;
    let induced = induce_strategy(&sol.strategy, &sol.product)?;
    Ok((sol, induced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{fixture_ldba, FixtureKind};
    use crate::model::LabelSet;

    fn loop_model() -> MdpstModel {
        let mut b = MdpstModel::builder(vec!["a".into()], vec!["stay".into()]);
        b.add_state(None, ["a"].into_iter().collect::<LabelSet>());
        b.add_outcomes(0, 0, [(1.0, [0])]);
        b.build(0).unwrap()
    }

    #[test]
    fn gf_jump_collapses_into_memory() {
        let aut = Automaton::Ldba(fixture_ldba(&FixtureKind::Gf("a".into())).unwrap());
        let (sol, strat) = solve(&loop_model(), &aut, &SynthOptions::default()).unwrap();
        assert_eq!(sol.report.value, 1.0);
        assert_eq!(strat.initial_memory, 0);
        // from the initial memory the strategy jumps and then plays `stay`
        let (q, a) = strat.resolve(None, 0, 0).unwrap();
        assert_eq!(q, 1);
        assert_eq!(a, Some("stay"));
        assert_eq!(strat.policy.jumps.get(&(0, 0)), Some(&1));
    }

    #[test]
    fn no_jumps_is_identity() {
        let mut ps = ProductStrategy {
            choice: vec![Some(0), Some(0)],
            in_region: vec![true; 2],
            rank: vec![Some(1); 2],
            values: ValueFunction {
                values: vec![1.0; 2],
                iterations: 0,
                converged: true,
            },
            stages: Vec::new(),
        };
        let aut = fixture_ldba(&FixtureKind::Gf("a".into())).unwrap();
        let p = build_product(&loop_model(), &aut).unwrap();
        let s = induce_strategy(&ps, &p).unwrap();
        assert!(s.policy.jumps.is_empty());
        assert_eq!(s.policy.choices.len(), 2);
        ps.choice[0] = None;
        assert_eq!(induce_strategy(&ps, &p).unwrap().policy.choices.len(), 1);
    }

    #[test]
    fn strategy_json_round_trip() {
        let aut = Automaton::Ldba(fixture_ldba(&FixtureKind::Gf("a".into())).unwrap());
        let (_, strat) = solve(&loop_model(), &aut, &SynthOptions::default()).unwrap();
        let back = MdpstStrategy::from_json(&strat.to_json().to_string()).unwrap();
        assert_eq!(back, strat);
    }

    #[test]
    fn dead_start_has_value_zero() {
        let mut b = MdpstModel::builder(vec!["a".into(), "obs".into()], vec!["stay".into()]);
        b.add_state(None, ["obs"].into_iter().collect::<LabelSet>());
        b.add_outcomes(0, 0, [(1.0, [0])]);
        let m = b.build(0).unwrap();
        let kind = FixtureKind::PersistAvoid {
            groups: vec![vec!["a".into()]],
            avoid: Some("obs".into()),
        };
        let aut = Automaton::Ldba(fixture_ldba(&kind).unwrap());
        let (sol, _) = solve(&m, &aut, &SynthOptions::default()).unwrap();
        assert_eq!(sol.report.value, 0.0);
        assert!(sol.region.states.is_empty());
    }
}
