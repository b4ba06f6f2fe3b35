//! Ground truth for small instances: Markov-chain analysis with exact
//! linear solves, and exhaustive enumeration of positional strategies and
//! natures.

use std::collections::BTreeSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ltl::Lasso;
use crate::model::{LabelSet, MdpstModel, PROB_TOL};
use crate::product::ProductMdpst;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
    #[error("singular linear system (pivot {pivot:e} at row {row}); chain is numerically ill-conditioned")]
    Singular { row: usize, pivot: f64 },
    #[error("invalid chain: {0}")]
    Invalid(String),
    #[error("at least one sample is required")]
    NoSamples,
}

pub const MAX_STATES: usize = 14;
pub const MAX_ACTIONS: usize = 3;
const MAX_COMBINATIONS: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    /// Sparse rows `(successor, probability)`.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub initial: usize,
}

impl MarkovChain {
    pub fn new(rows: Vec<Vec<(usize, f64)>>, initial: usize) -> Result<Self, OracleError> {
        let n = rows.len();
        if initial >= n {
            return Err(OracleError::Invalid(format!("initial state {initial} out of range")));
        }
        for (s, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > PROB_TOL || row.iter().any(|&(t, p)| t >= n || p < 0.0) {
                return Err(OracleError::Invalid(format!("row {s} is not a distribution")));
            }
        }
        Ok(Self { rows, initial })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn graph(&self) -> DiGraph<(), ()> {
        let mut g = DiGraph::new();
        let nodes: Vec<_> = (0..self.len()).map(|_| g.add_node(())).collect();
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, p) in row {
                if p > 0.0 {
                    g.add_edge(nodes[s], nodes[t], ());
                }
            }
        }
        g
    }

    /// Bottom strongly connected components.
    pub fn bsccs(&self) -> Vec<Vec<usize>> {
        let g = self.graph();
        let sccs = tarjan_scc(&g);
        let mut comp = vec![0; self.len()];
        for (c, scc) in sccs.iter().enumerate() {
            for v in scc {
                comp[v.index()] = c;
            }
        }
        sccs.into_iter()
            .enumerate()
            .filter(|(c, scc)| {
                scc.iter().all(|v| {
                    self.rows[v.index()]
                        .iter()
                        .all(|&(t, p)| p == 0.0 || comp[t] == *c)
                })
            })
            .map(|(_, scc)| {
                let mut v: Vec<usize> = scc.into_iter().map(|x| x.index()).collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    /// Probability of eventually reaching `good`, from every state.
    pub fn reach_probabilities(&self, good: &[bool]) -> Result<Vec<f64>, OracleError> {
        let n = self.len();
        // states that can reach `good` at all
        let mut can = good.to_vec();
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                if !can[s] && self.rows[s].iter().any(|&(t, p)| p > 0.0 && can[t]) {
                    can[s] = true;
                    changed = true;
                }
            }
        }
        let unknown: Vec<usize> = (0..n).filter(|&s| can[s] && !good[s]).collect();
        let mut pos = vec![usize::MAX; n];
        for (i, &s) in unknown.iter().enumerate() {
            pos[s] = i;
        }
        // (I - P_uu) x = P_u,good · 1
        let m = unknown.len();
        let mut a = vec![vec![0.0; m + 1]; m];
        for (i, &s) in unknown.iter().enumerate() {
            a[i][i] += 1.0;
            for &(t, p) in &self.rows[s] {
                if good[t] {
                    a[i][m] += p;
                } else if pos[t] != usize::MAX {
                    a[i][pos[t]] -= p;
                }
            }
        }
        let x = gauss(a)?;
        Ok((0..n)
            .map(|s| {
                if good[s] {
                    1.0
                } else if pos[s] != usize::MAX {
                    x[pos[s]].clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Same quantity by plain iteration; used as a numeric cross-check.
    pub fn reach_probabilities_iterative(&self, good: &[bool], sweeps: usize) -> Vec<f64> {
        let mut x: Vec<f64> = good.iter().map(|&g| if g { 1.0 } else { 0.0 }).collect();
        for _ in 0..sweeps {
            x = (0..self.len())
                .map(|s| {
                    if good[s] {
                        1.0
                    } else {
                        self.rows[s].iter().map(|&(t, p)| p * x[t]).sum()
                    }
                })
                .collect();
        }
        x
    }

    /// `Pr(□◇ acc)` from every state: reach the accepting BSCCs.
    pub fn buchi_probabilities(&self, acc: &BTreeSet<usize>) -> Result<Vec<f64>, OracleError> {
        let mut good = vec![false; self.len()];
        for b in self.bsccs() {
            if b.iter().any(|s| acc.contains(s)) {
                for s in b {
                    good[s] = true;
                }
            }
        }
        self.reach_probabilities(&good)
    }
}

/// Dense Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>, OracleError> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[piv][col].abs() < 1e-12 {
            return Err(OracleError::Singular {
                row: col,
                pivot: a[piv][col],
            });
        }
        a.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][m] - s) / a[r][r];
    }
    Ok(x)
}

pub fn chain_buchi_probability(c: &MarkovChain, acc: &BTreeSet<usize>) -> Result<f64, OracleError> {
    Ok(c.buchi_probabilities(acc)?[c.initial])
}

pub fn chain_reach_probability(c: &MarkovChain, targets: &BTreeSet<usize>) -> Result<f64, OracleError> {
    let good: Vec<bool> = (0..c.len()).map(|s| targets.contains(&s)).collect();
    Ok(c.reach_probabilities(&good)?[c.initial])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Objective {
    Buchi(BTreeSet<usize>),
    Reach(BTreeSet<usize>),
}

/// Nature's positional choice: `(state, outcome index, member)` for every
/// set-valued outcome of the chosen actions.
pub type PositionalNature = Vec<(usize, usize, usize)>;

/// Markov chain induced by a positional strategy (position into
/// `choices(s)`) and a positional nature.
pub fn induced_chain(model: &MdpstModel, sigma: &[usize], nature: &[(usize, usize, usize)], start: usize) -> MarkovChain {
    let rows = (0..model.num_states())
        .map(|s| {
            let c = &model.choices(s)[sigma[s]];
            c.outcomes
                .iter()
                .enumerate()
                .map(|(k, o)| {
                    let member = nature
                        .iter()
                        .find(|&&(ns, nk, _)| ns == s && nk == k)
                        .map_or(o.targets[0], |&(_, _, m)| m);
                    (member, o.prob)
                })
                .collect()
        })
        .collect();
    MarkovChain { rows, initial: start }
}

fn decode(mut idx: u64, radices: &[usize]) -> Vec<usize> {
    radices
        .iter()
        .map(|&r| {
            let d = (idx % r as u64) as usize;
            idx /= r as u64;
            d
        })
        .collect()
}

fn reachable_under(model: &MdpstModel, sigma: &[usize], start: usize) -> Vec<bool> {
    let mut seen = vec![false; model.num_states()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(s) = stack.pop() {
        for o in &model.choices(s)[sigma[s]].outcomes {
            for &t in &o.targets {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    seen
}

fn worst_case(model: &MdpstModel, sigma: &[usize], obj: &Objective, start: usize) -> Result<f64, OracleError> {
    let reach = reachable_under(model, sigma, start);
    let mut slots = Vec::new();
    for s in (0..model.num_states()).filter(|&s| reach[s]) {
        for (k, o) in model.choices(s)[sigma[s]].outcomes.iter().enumerate() {
            if o.targets.len() > 1 {
                slots.push((s, k, &o.targets));
            }
        }
    }
    let radices: Vec<usize> = slots.iter().map(|(_, _, t)| t.len()).collect();
    let total = radices.iter().try_fold(1u64, |acc, &r| acc.checked_mul(r as u64));
    let total = match total {
        Some(t) if t <= MAX_COMBINATIONS => t,
        _ => return Err(OracleError::TooLarge(format!("{} nature choices", slots.len()))),
    };
    let mut best = f64::INFINITY;
    for idx in 0..total {
        let digits = decode(idx, &radices);
        let nature: PositionalNature = slots
            .iter()
            .zip(&digits)
            .map(|(&(s, k, t), &d)| (s, k, t[d]))
            .collect();
        let c = induced_chain(model, sigma, &nature, start);
        let v = match obj {
            Objective::Buchi(acc) => chain_buchi_probability(&c, acc)?,
            Objective::Reach(t) => chain_reach_probability(&c, t)?,
        };
        best = best.min(v);
    }
    Ok(best)
}

fn check_size(model: &MdpstModel) -> Result<Vec<usize>, OracleError> {
    if model.num_states() > MAX_STATES {
        return Err(OracleError::TooLarge(format!("{} states (limit {MAX_STATES})", model.num_states())));
    }
    let radices: Vec<usize> = (0..model.num_states()).map(|s| model.choices(s).len()).collect();
    if radices.iter().any(|&r| r > MAX_ACTIONS) {
        return Err(OracleError::TooLarge(format!("more than {MAX_ACTIONS} actions at a state")));
    }
    if radices.contains(&0) {
        return Err(OracleError::Invalid("state without actions".into()));
    }
    Ok(radices)
}

/// `max_σ min_nature` over positional deterministic strategies and natures,
/// from `start`.
pub fn brute_force_value_from(p: &ProductMdpst, obj: &Objective, start: usize) -> Result<f64, OracleError> {
    let model = &p.model;
    let radices = check_size(model)?;
    let total: u64 = radices.iter().map(|&r| r as u64).product();
    if total > MAX_COMBINATIONS {
        return Err(OracleError::TooLarge(format!("{total} strategies")));
    }
    let values: Result<Vec<f64>, OracleError> = (0..total)
        .into_par_iter()
        .map(|idx| worst_case(model, &decode(idx, &radices), obj, start))
        .collect();
    Ok(values?.into_iter().fold(0.0, f64::max))
}

pub fn brute_force_value(p: &ProductMdpst, obj: &Objective) -> Result<f64, OracleError> {
    brute_force_value_from(p, obj, p.initial())
}

/// Brute-force values from every state.
pub fn brute_force_values(p: &ProductMdpst, obj: &Objective) -> Result<Vec<f64>, OracleError> {
    (0..p.num_states()).map(|s| brute_force_value_from(p, obj, s)).collect()
}

/// Maximal end components of a model read as a plain MDP (every member of
/// every set counts as a successor).
pub fn mec_decomposition(model: &MdpstModel) -> Vec<BTreeSet<usize>> {
    let n = model.num_states();
    let mut alive = vec![true; n];
    let mut acts: Vec<Vec<usize>> = (0..n).map(|s| (0..model.choices(s).len()).collect()).collect();
    let succ = |s: usize, i: usize| -> Vec<usize> {
        model.choices(s)[i]
            .outcomes
            .iter()
            .flat_map(|o| o.targets.iter().copied())
            .collect()
    };
    loop {
        let mut g = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
        for s in (0..n).filter(|&s| alive[s]) {
            for &i in &acts[s] {
                for t in succ(s, i) {
                    g.add_edge(nodes[s], nodes[t], ());
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        for (c, scc) in tarjan_scc(&g).into_iter().enumerate() {
            for v in scc {
                comp[v.index()] = c;
            }
        }
        let mut changed = false;
        let live: Vec<usize> = (0..n).filter(|&s| alive[s]).collect();
        for s in live {
            let before = acts[s].len();
            acts[s].retain(|&i| succ(s, i).iter().all(|&t| alive[t] && comp[t] == comp[s]));
            changed |= acts[s].len() != before;
            if acts[s].is_empty() {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            let mut groups: std::collections::BTreeMap<usize, BTreeSet<usize>> = Default::default();
            for s in (0..n).filter(|&s| alive[s]) {
                groups.entry(comp[s]).or_default().insert(s);
            }
            return groups.into_values().collect();
        }
    }
}

/// States of a plain MDP that reach `targets` with probability 1 under
/// some strategy.
pub fn almost_sure_attractor(model: &MdpstModel, targets: &BTreeSet<usize>) -> BTreeSet<usize> {
    let n = model.num_states();
    let mut x = vec![true; n];
    loop {
        let mut y: Vec<bool> = (0..n).map(|s| targets.contains(&s)).collect();
        let mut grew = true;
        while grew {
            grew = false;
            for s in 0..n {
                if y[s] || !x[s] {
                    continue;
                }
                let ok = model.choices(s).iter().any(|c| {
                    let members = || c.outcomes.iter().flat_map(|o| o.targets.iter());
                    members().all(|&t| x[t]) && members().any(|&t| y[t])
                });
                if ok {
                    y[s] = true;
                    grew = true;
                }
            }
        }
        if y == x {
            return (0..n).filter(|&s| x[s]).collect();
        }
        x = y;
    }
}

/// Almost-sure Büchi region of a plain MDP: the attractor of the accepting
/// end components.
pub fn mdp_buchi_region(model: &MdpstModel, acc: &BTreeSet<usize>) -> BTreeSet<usize> {
    let good: BTreeSet<usize> = mec_decomposition(model)
        .into_iter()
        .filter(|m| !m.is_disjoint(acc))
        .flatten()
        .collect();
    almost_sure_attractor(model, &good)
}

/// Seeded lassos with `|stem| + |loop| ≤ max_len` and uniform letters.
pub fn sample_lassos(ap: &[String], max_len: usize, n: usize, seed: u64) -> Result<Vec<Lasso>, OracleError> {
    if n == 0 {
        return Err(OracleError::NoSamples);
    }
    if max_len == 0 {
        return Err(OracleError::Invalid("max_len must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letter = |rng: &mut ChaCha8Rng| -> LabelSet {
        ap.iter().filter(|_| rng.random_bool(0.5)).cloned().collect()
    };
    Ok((0..n)
        .map(|_| {
            let cycle_len = rng.random_range(1..=max_len);
            let stem_len = rng.random_range(0..=max_len - cycle_len);
            let stem = (0..stem_len).map(|_| letter(&mut rng)).collect();
            let cycle = (0..cycle_len).map(|_| letter(&mut rng)).collect();
            Lasso::new(stem, cycle)
        })
        .collect())
}
