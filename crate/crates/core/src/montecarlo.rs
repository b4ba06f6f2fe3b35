//! Monte Carlo evaluation of model strategies against sampled or
//! adversarial natures, with a windowed finite-horizon satisfaction check.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::automata::Automaton;
use crate::hexworld::decode_state;
use crate::model::{AlphaParams, MdpstModel};
use crate::product::{ProductError, ProductMdpst};
use crate::synthesis::{build, solve_product, MdpstStrategy, SynthOptions, SynthesisError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NatureMode {
    Random,
    Adversarial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
    pub nature: NatureMode,
    /// `(m, w)`: the last `m` windows of `w` steps must each contain an
    /// accepting visit.
    pub windows: (usize, usize),
}

impl SimConfig {
    pub fn new(runs: usize, horizon: usize, seed: u64) -> Self {
        Self {
            runs,
            horizon,
            seed,
            nature: NatureMode::Random,
            windows: (5, 200),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let (m, w) = self.windows;
        if self.runs == 0 {
            return Err(SimError::Config("runs must be at least 1".into()));
        }
        if m == 0 || w == 0 {
            return Err(SimError::Config("windows must be nonempty".into()));
        }
        if self.horizon < m * w {
            return Err(SimError::Config(format!(
                "horizon {} shorter than {m} windows of {w} steps",
                self.horizon
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunVerdict {
    pub satisfied: bool,
    pub accepting_visits: usize,
    /// Step at which the automaton rejected (dead end or reject loop).
    pub violation_step: Option<usize>,
    pub aborted: Option<String>,
}

/// Unit-concentration Dirichlet weights for every set-valued outcome.
pub fn sample_nature_with(model: &MdpstModel, rng: &mut impl Rng) -> AlphaParams {
    let mut alpha = AlphaParams::new();
    for s in 0..model.num_states() {
        for c in model.choices(s) {
            for (k, o) in c.outcomes.iter().enumerate() {
                let w = if o.is_singleton() {
                    vec![1.0]
                } else {
                    let draws: Vec<f64> = o.targets.iter().map(|_| Exp1.sample(rng)).collect();
                    let total: f64 = draws.iter().sum();
                    draws.into_iter().map(|x| x / total).collect()
                };
                alpha.insert(s, c.action, k, w);
            }
        }
    }
    alpha
}

pub fn sample_nature(model: &MdpstModel, seed: u64) -> AlphaParams {
    sample_nature_with(model, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Positional worst-case resolution read off the final reachability values:
/// the member of lowest value, preferring higher region rank on ties.
#[derive(Clone, Debug)]
pub struct AdversarialNature {
    values: Vec<f64>,
    rank: Vec<Option<usize>>,
    nq: usize,
}

impl AdversarialNature {
    pub fn new(p: &ProductMdpst, values: Vec<f64>, rank: Vec<Option<usize>>) -> Self {
        Self {
            values,
            rank,
            nq: p.num_q.unwrap_or(1),
        }
    }

    /// Member of `targets` chosen when the automaton moves to `q`.
    pub fn choose(&self, targets: &[usize], q: usize) -> usize {
        *targets
            .iter()
            .min_by(|&&a, &&b| {
                let (x, y) = (a * self.nq + q, b * self.nq + q);
                self.values[x]
                    .total_cmp(&self.values[y])
                    .then(self.rank[y].cmp(&self.rank[x]))
            })
            .expect("nonempty set")
    }
}

enum Resolver<'a> {
    Random(AlphaParams),
    Adversarial(&'a AdversarialNature),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub state: usize,
    pub q: usize,
    pub action: Option<String>,
}

struct Acceptance {
    /// Büchi set, or one `(fin, inf)` pair of membership vectors per pair.
    buchi: Option<Vec<bool>>,
    pairs: Vec<(Vec<bool>, Vec<bool>)>,
}

impl Acceptance {
    fn of(p: &ProductMdpst) -> Self {
        let mark = |set: &std::collections::BTreeSet<usize>| {
            let mut v = vec![false; p.num_states()];
            for &x in set {
                v[x] = true;
            }
            v
        };
        if p.is_rabin() {
            Self {
                buchi: None,
                pairs: p.pairs.iter().map(|r| (mark(&r.fin), mark(&r.inf))).collect(),
            }
        } else {
            Self {
                buchi: Some(mark(&p.accepting)),
                pairs: Vec::new(),
            }
        }
    }

    fn tracks(&self) -> usize {
        if self.buchi.is_some() { 1 } else { self.pairs.len() }
    }

    /// Per track: (good visit, bad visit).
    fn visit(&self, x: usize, track: usize) -> (bool, bool) {
        match &self.buchi {
            Some(acc) => (acc[x], false),
            None => (self.pairs[track].1[x], self.pairs[track].0[x]),
        }
    }
}

struct Ctx<'a> {
    model: &'a MdpstModel,
    aut: &'a Automaton,
    strategy: &'a MdpstStrategy,
    nq: usize,
    acc: Acceptance,
    cfg: SimConfig,
}

fn run_one(ctx: &Ctx, rng: &mut ChaCha8Rng, nature: &Resolver, mut trace: Option<&mut Vec<TraceStep>>) -> RunVerdict {
    let model = ctx.model;
    let (m, w) = ctx.cfg.windows;
    let h = ctx.cfg.horizon;
    let tail = h - m * w;
    let tracks = ctx.acc.tracks();
    let mut window_hits = vec![vec![false; m]; tracks];
    let mut tail_bad = vec![false; tracks];
    let mut verdict = RunVerdict::default();
    let mut stage = (!ctx.strategy.stages.is_empty()).then_some(0);
    let mut s = model.initial();
    let mut q = ctx.strategy.initial_memory;
    for step in 0..h {
        let (q1, act) = match ctx.strategy.resolve(stage, s, q) {
            Ok(r) => r,
            Err(e) => {
                verdict.aborted = Some(e.to_string());
                return verdict;
            }
        };
        q = q1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceStep {
                step,
                state: s,
                q,
                action: act.map(String::from),
            });
        }
        let Some(q_next) = ctx.aut.step(q, model.label(s)) else {
            verdict.violation_step = Some(step);
            return verdict;
        };
        let x = s * ctx.nq + q;
        if let Some(k) = stage {
            if ctx.strategy.stages[k].0 == (s, q) {
                stage = Some((k + 1) % ctx.strategy.stages.len());
            }
        }
        for (track, hits) in window_hits.iter_mut().enumerate() {
            let (good, bad) = ctx.acc.visit(x, track);
            if good && track == 0 {
                verdict.accepting_visits += 1;
            }
            if step >= tail {
                hits[(step - tail) / w] |= good;
                tail_bad[track] |= bad;
            }
        }
        let Some(a) = act.and_then(|a| model.action_index(a)) else {
            verdict.aborted = Some(format!(
                "strategy undefined at ({}, {q})",
                model.state_name(s)
            ));
            return verdict;
        };
        let Some(choice) = model.choice(s, a) else {
            verdict.aborted = Some(format!("action {} not enabled at {}", model.action_name(a), model.state_name(s)));
            return verdict;
        };
        let mut u: f64 = rng.random();
        let k = choice
            .outcomes
            .iter()
            .position(|o| {
                u -= o.prob;
                u < 0.0
            })
            .unwrap_or(choice.outcomes.len() - 1);
        let targets = &choice.outcomes[k].targets;
        s = match nature {
            _ if targets.len() == 1 => targets[0],
            Resolver::Adversarial(adv) => adv.choose(targets, q_next),
            Resolver::Random(alpha) => {
                let weights = alpha.get(s, a, k).expect("sampled for every set");
                let mut u: f64 = rng.random();
                let i = weights
                    .iter()
                    .position(|&wt| {
                        u -= wt;
                        u < 0.0
                    })
                    .unwrap_or(weights.len() - 1);
                targets[i]
            }
        };
        q = q_next;
    }
    verdict.satisfied = (0..tracks).any(|t| !tail_bad[t] && window_hits[t].iter().all(|&b| b));
    verdict
}

fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Worst-case nature for `strategy` on the product of `model` and `aut`.
pub fn adversarial_nature(model: &MdpstModel, aut: &Automaton, opts: &SynthOptions) -> Result<AdversarialNature, SimError> {
    let p = build(model, aut)?;
    let sol = solve_product(p, opts)?;
    Ok(AdversarialNature::new(
        &sol.product,
        sol.strategy.values.values.clone(),
        sol.strategy.rank.clone(),
    ))
}

fn context<'a>(
    model: &'a MdpstModel,
    aut: &'a Automaton,
    strategy: &'a MdpstStrategy,
    cfg: &SimConfig,
) -> Result<Ctx<'a>, SimError> {
    cfg.validate()?;
    let p = build(model, aut)?;
    if strategy.initial_memory >= aut.num_states() {
        return Err(SimError::Config("strategy memory does not fit the automaton".into()));
    }
    Ok(Ctx {
        model,
        aut,
        strategy,
        nq: aut.num_states(),
        acc: Acceptance::of(&p),
        cfg: *cfg,
    })
}

/// Runs `cfg.runs` independent simulations; run `i` draws from its own
/// stream of the seeded generator, so results do not depend on scheduling.
pub fn simulate(
    model: &MdpstModel,
    aut: &Automaton,
    strategy: &MdpstStrategy,
    cfg: &SimConfig,
) -> Result<Vec<RunVerdict>, SimError> {
    let ctx = context(model, aut, strategy, cfg)?;
    let adv = match cfg.nature {
        NatureMode::Adversarial => Some(adversarial_nature(model, aut, &SynthOptions::default())?),
        NatureMode::Random => None,
    };
    Ok((0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(cfg.seed, run);
            let nature = match &adv {
                Some(a) => Resolver::Adversarial(a),
                None => Resolver::Random(sample_nature_with(model, &mut rng)),
            };
            run_one(&ctx, &mut rng, &nature, None)
        })
        .collect())
}

/// Same as [`simulate`] with one fixed `α` shared by every run.
pub fn simulate_with_alpha(
    model: &MdpstModel,
    aut: &Automaton,
    strategy: &MdpstStrategy,
    alpha: &AlphaParams,
    cfg: &SimConfig,
) -> Result<Vec<RunVerdict>, SimError> {
    alpha.check(model).map_err(|e| SimError::Config(e.to_string()))?;
    let ctx = context(model, aut, strategy, cfg)?;
    Ok((0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(cfg.seed, run);
            run_one(&ctx, &mut rng, &Resolver::Random(alpha.clone()), None)
        })
        .collect())
}

/// States, memory and actions of a single run.
pub fn trajectory(
    model: &MdpstModel,
    aut: &Automaton,
    strategy: &MdpstStrategy,
    cfg: &SimConfig,
    run: usize,
) -> Result<(RunVerdict, Vec<TraceStep>), SimError> {
    let ctx = context(model, aut, strategy, cfg)?;
    let adv = match cfg.nature {
        NatureMode::Adversarial => Some(adversarial_nature(model, aut, &SynthOptions::default())?),
        NatureMode::Random => None,
    };
    let mut rng = run_rng(cfg.seed, run);
    let nature = match &adv {
        Some(a) => Resolver::Adversarial(a),
        None => Resolver::Random(sample_nature_with(model, &mut rng)),
    };
    let mut trace = Vec::new();
    let v = run_one(&ctx, &mut rng, &nature, Some(&mut trace));
    Ok((v, trace))
}

/// `step,cell,orientation,q` rows for hexworld models.
pub fn hex_trajectory_csv(trace: &[TraceStep]) -> String {
    let mut out = String::from("step,cell,orientation,q\n");
    for t in trace {
        let (cell, o) = decode_state(t.state);
        writeln!(out, "{},{},{},{}", t.step, cell, o.letter(), t.q).expect("write to string");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub runs: usize,
    pub satisfied: usize,
    pub fraction: f64,
    /// Value the strategy guarantees, for comparison.
    pub value: f64,
    pub nature: NatureMode,
    pub seed: u64,
    pub horizon: usize,
    pub verdicts: Vec<RunVerdict>,
}

impl SimReport {
    pub fn new(cfg: &SimConfig, value: f64, verdicts: Vec<RunVerdict>) -> Self {
        let satisfied = verdicts.iter().filter(|v| v.satisfied).count();
        Self {
            runs: verdicts.len(),
            satisfied,
            fraction: satisfied as f64 / verdicts.len().max(1) as f64,
            value,
            nature: cfg.nature,
            seed: cfg.seed,
            horizon: cfg.horizon,
            verdicts,
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,satisfied,accepting_visits,violation_step,aborted\n");
        for (i, r) in self.verdicts.iter().enumerate() {
            writeln!(
                out,
                "{i},{},{},{},{}",
                r.satisfied,
                r.accepting_visits,
                r.violation_step.map(|s| s.to_string()).unwrap_or_default(),
                r.aborted.as_deref().unwrap_or("").replace(',', ";")
            )
            .expect("write to string");
        }
        out
    }
}
