//! Hand-built automata for the benchmark objectives.

use std::collections::BTreeSet;

use super::{AutState, AutomatonError, Component, Dra, Edge, Guard, Ldba, RabinPair};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    /// `G F a`
    Gf(String),
    /// `G F a1 & … & G F ak`
    GfConj(Vec<String>),
    /// `G F (g1) & … & G F (gk) & G !avoid`, each group a disjunction.
    PersistAvoid {
        groups: Vec<Vec<String>>,
        avoid: Option<String>,
    },
}

impl FixtureKind {
    fn groups(&self) -> (Vec<Vec<String>>, Option<String>) {
        match self {
            FixtureKind::Gf(a) => (vec![vec![a.clone()]], None),
            FixtureKind::GfConj(atoms) => (atoms.iter().map(|a| vec![a.clone()]).collect(), None),
            FixtureKind::PersistAvoid { groups, avoid } => (groups.clone(), avoid.clone()),
        }
    }

    /// The objective as an LTL string in the crate's surface syntax.
    pub fn formula(&self) -> String {
        let (groups, avoid) = self.groups();
        let mut parts: Vec<String> = groups
            .iter()
            .map(|g| format!("(G F ({}))", g.join(" | ")))
            .collect();
        if let Some(o) = avoid {
            parts.push(format!("(G !{o})"));
        }
        parts.join(" & ")
    }

    fn ap(&self) -> Vec<String> {
        let (groups, avoid) = self.groups();
        let mut ap: Vec<String> = Vec::new();
        for a in groups.iter().flatten().chain(avoid.iter()) {
            if !ap.contains(a) {
                ap.push(a.clone());
            }
        }
        ap
    }
}

fn check(groups: &[Vec<String>]) -> Result<(), AutomatonError> {
    if groups.is_empty() {
        return Err(AutomatonError::Fixture("empty goal group list".into()));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(AutomatonError::Fixture("empty goal group".into()));
    }
    Ok(())
}

fn safe(g: Guard, avoid: &Option<String>) -> Guard {
    match avoid {
        Some(o) => Guard::and(g, Guard::not(Guard::atom(o))),
        None => g,
    }
}

/// One initial state with a safe self-loop and an ε-jump into a round-robin
/// over the goal groups. The move completing a round is the accepting edge;
/// letters containing the avoid atom have no edge.
pub fn fixture_ldba(kind: &FixtureKind) -> Result<Ldba, AutomatonError> {
    let (groups, avoid) = kind.groups();
    check(&groups)?;
    let k = groups.len();
    let mut states = vec![AutState {
        name: Some("init".into()),
        component: Component::Initial,
        accepting: false,
    }];
    let mut edges = vec![vec![Edge {
        guard: safe(Guard::True, &avoid),
        to: 0,
        accepting: false,
    }]];
    for (i, g) in groups.iter().enumerate() {
        let me = i + 1;
        let next = (i + 1) % k + 1;
        let hit = Guard::any_of(g);
        states.push(AutState {
            name: Some(format!("wait{}", i + 1)),
            component: Component::Accepting,
            accepting: false,
        });
        edges.push(vec![
            Edge {
                guard: safe(hit.clone(), &avoid),
                to: next,
                accepting: i + 1 == k,
            },
            Edge {
                guard: safe(Guard::not(hit), &avoid),
                to: me,
                accepting: false,
            },
        ]);
    }
    let mut eps = vec![BTreeSet::new(); k + 1];
    eps[0].insert(1);
    Ok(Ldba {
        ap: kind.ap(),
        states,
        initial: 0,
        edges,
        eps,
    })
}

/// Round-robin over `k` goal groups with an explicit "round complete" state,
/// paired with an alive/dead safety bit: `2·(k+1)` states, one Rabin pair
/// with `Fin` = dead states and `Inf` = {complete, alive}.
pub fn fixture_dra(kind: &FixtureKind) -> Result<Dra, AutomatonError> {
    let (groups, avoid) = kind.groups();
    check(&groups)?;
    let k = groups.len();
    let rounds = k + 1;
    let idx = |r: usize, dead: bool| r + if dead { rounds } else { 0 };
    // position r < k waits for group r; r == k means a round just completed
    let progress = |r: usize| -> (Guard, usize) {
        if r < k {
            (Guard::any_of(&groups[r]), r + 1)
        } else {
            (Guard::any_of(&groups[0]), if k == 1 { k } else { 1 })
        }
    };
    let stay = |r: usize| if r < k { r } else { 0 };
    let mut edges = vec![Vec::new(); 2 * rounds];
    let mut names = vec![None; 2 * rounds];
    for dead in [false, true] {
        for r in 0..rounds {
            let q = idx(r, dead);
            names[q] = Some(format!(
                "{}{}",
                if r < k { format!("wait{}", r + 1) } else { "done".into() },
                if dead { "_dead" } else { "" }
            ));
            let (hit, fwd) = progress(r);
            let moves = [(hit.clone(), fwd), (Guard::not(hit), stay(r))];
            for (g, to) in moves {
                match (&avoid, dead) {
                    (Some(o), false) => {
                        edges[q].push(Edge {
                            guard: Guard::and(g.clone(), Guard::not(Guard::atom(o))),
                            to: idx(to, false),
                            accepting: false,
                        });
                        edges[q].push(Edge {
                            guard: Guard::and(g, Guard::atom(o)),
                            to: idx(to, true),
                            accepting: false,
                        });
                    }
                    _ => edges[q].push(Edge {
                        guard: g,
                        to: idx(to, dead),
                        accepting: false,
                    }),
                }
            }
        }
    }
    Ok(Dra {
        ap: kind.ap(),
        names,
        initial: idx(0, false),
        edges,
        pairs: vec![RabinPair {
            fin: (0..rounds).map(|r| idx(r, true)).collect(),
            inf: BTreeSet::from([idx(k, false)]),
        }],
    })
}
