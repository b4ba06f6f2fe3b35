use std::collections::BTreeSet;
use std::fmt;

use crate::ltl::{parse_ltl, Ltl};
use crate::model::LabelSet;

/// Propositional edge label over atomic propositions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    Atom(String),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn atom(a: impl Into<String>) -> Self {
        Guard::Atom(a.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: Guard) -> Self {
        match g {
            Guard::Not(inner) => *inner,
            g => Guard::Not(Box::new(g)),
        }
    }

    pub fn and(a: Guard, b: Guard) -> Self {
        match (a, b) {
            (Guard::True, g) | (g, Guard::True) => g,
            (a, b) => Guard::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: Guard, b: Guard) -> Self {
        Guard::Or(Box::new(a), Box::new(b))
    }

    /// Disjunction of atoms; `False` (as `!true`) when empty.
    pub fn any_of<S: AsRef<str>>(atoms: &[S]) -> Self {
        let mut it = atoms.iter();
        match it.next() {
            None => Guard::Not(Box::new(Guard::True)),
            Some(first) => it.fold(Guard::atom(first.as_ref()), |acc, a| {
                Guard::or(acc, Guard::atom(a.as_ref()))
            }),
        }
    }

    pub fn eval(&self, letter: &LabelSet) -> bool {
        match self {
            Guard::True => true,
            Guard::Atom(a) => letter.contains(a),
            Guard::Not(g) => !g.eval(letter),
            Guard::And(a, b) => a.eval(letter) && b.eval(letter),
            Guard::Or(a, b) => a.eval(letter) || b.eval(letter),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Guard::True => {}
            Guard::Atom(a) => {
                out.insert(a.clone());
            }
            Guard::Not(g) => g.collect(out),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    pub fn from_ltl(f: &Ltl) -> Result<Self, String> {
        Ok(match f {
            Ltl::True => Guard::True,
            Ltl::Atom(a) => Guard::Atom(a.clone()),
            Ltl::Not(g) => Guard::Not(Box::new(Self::from_ltl(g)?)),
            Ltl::And(a, b) => Guard::And(Box::new(Self::from_ltl(a)?), Box::new(Self::from_ltl(b)?)),
            Ltl::Or(a, b) => Guard::Or(Box::new(Self::from_ltl(a)?), Box::new(Self::from_ltl(b)?)),
            Ltl::Implies(a, b) => Guard::Or(
                Box::new(Guard::Not(Box::new(Self::from_ltl(a)?))),
                Box::new(Self::from_ltl(b)?),
            ),
            other => return Err(format!("temporal operator in guard: {other}")),
        })
    }

    pub fn to_ltl(&self) -> Ltl {
        match self {
            Guard::True => Ltl::True,
            Guard::Atom(a) => Ltl::Atom(a.clone()),
            Guard::Not(g) => Ltl::not(g.to_ltl()),
            Guard::And(a, b) => Ltl::and(a.to_ltl(), b.to_ltl()),
            Guard::Or(a, b) => Ltl::or(a.to_ltl(), b.to_ltl()),
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let f = parse_ltl(text).map_err(|e| e.to_string())?;
        Self::from_ltl(&f)
    }

    /// True iff no letter satisfies both guards.
    pub fn disjoint(a: &Guard, b: &Guard) -> bool {
        let atoms: Vec<String> = a.atoms().union(&b.atoms()).cloned().collect();
        let overlap = assignments(&atoms).any(|l| a.eval(&l) && b.eval(&l));
        !overlap
    }
}

/// Every letter over `atoms`.
pub(crate) fn assignments(atoms: &[String]) -> impl Iterator<Item = LabelSet> + '_ {
    assert!(atoms.len() < 25, "too many atoms to enumerate");
    (0u32..(1 << atoms.len())).map(move |mask| {
        atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| a.clone())
            .collect()
    })
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ltl())
    }
}
