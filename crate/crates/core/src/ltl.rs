//! LTL formulas: parsing, printing, and exact evaluation on lasso words.
//!
//! Surface syntax: `true`, identifiers, `!`, `&`, `|`, `->`, `X`, `U`, `F`,
//! `G`, parentheses. Unary operators bind tightest, then `U`
//! (right-associative), `&`, `|`, and `->` (right-associative).

use std::fmt;

use thiserror::Error;

use crate::model::LabelSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ltl {
    True,
    Atom(String),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    Eventually(Box<Ltl>),
    Always(Box<Ltl>),
}

#[derive(Debug, Error, PartialEq)]
pub enum LtlParseError {
    #[error("unknown token {token:?} at position {pos}")]
    UnknownToken { pos: usize, token: char },
    #[error("syntax error at {}: expected {expected}", at_display(*.pos))]
    Syntax { pos: Option<usize>, expected: String },
}

fn at_display(pos: Option<usize>) -> String {
    match pos {
        Some(p) => format!("position {p}"),
        None => "end of input".into(),
    }
}

impl Ltl {
    pub fn atom(name: impl Into<String>) -> Self {
        Ltl::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Ltl) -> Self {
        Ltl::Not(Box::new(f))
    }

    pub fn and(a: Ltl, b: Ltl) -> Self {
        Ltl::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ltl, b: Ltl) -> Self {
        Ltl::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Ltl) -> Self {
        Ltl::Next(Box::new(f))
    }

    pub fn until(a: Ltl, b: Ltl) -> Self {
        Ltl::Until(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Ltl, b: Ltl) -> Self {
        Ltl::Implies(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Ltl) -> Self {
        Ltl::Eventually(Box::new(f))
    }

    pub fn always(f: Ltl) -> Self {
        Ltl::Always(Box::new(f))
    }

    /// Atom names, deduplicated, in first-occurrence order.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<String>) {
        match self {
            Ltl::True => {}
            Ltl::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Ltl::Not(f) | Ltl::Next(f) | Ltl::Eventually(f) | Ltl::Always(f) => {
                f.collect_atoms(out)
            }
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Until(a, b) | Ltl::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// True when only core constructors occur.
    pub fn is_core(&self) -> bool {
        match self {
            Ltl::True | Ltl::Atom(_) => true,
            Ltl::Not(f) | Ltl::Next(f) => f.is_core(),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Until(a, b) => a.is_core() && b.is_core(),
            Ltl::Implies(..) | Ltl::Eventually(_) | Ltl::Always(_) => false,
        }
    }

    /// True when no temporal operator occurs.
    pub fn is_propositional(&self) -> bool {
        match self {
            Ltl::True | Ltl::Atom(_) => true,
            Ltl::Not(f) => f.is_propositional(),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) => {
                a.is_propositional() && b.is_propositional()
            }
            Ltl::Next(_) | Ltl::Until(..) | Ltl::Eventually(_) | Ltl::Always(_) => false,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Ltl::Implies(..) => 1,
            Ltl::Or(..) => 2,
            Ltl::And(..) => 3,
            Ltl::Until(..) => 4,
            Ltl::Not(_) | Ltl::Next(_) | Ltl::Eventually(_) | Ltl::Always(_) => 5,
            Ltl::True | Ltl::Atom(_) => 6,
        }
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, c: &Ltl, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        let p = self.precedence();
        match self {
            Ltl::True => write!(f, "true"),
            Ltl::Atom(a) => write!(f, "{a}"),
            Ltl::Not(c) => {
                write!(f, "!")?;
                child(f, c, c.precedence() < 5)
            }
            Ltl::Next(c) | Ltl::Eventually(c) | Ltl::Always(c) => {
                let op = match self {
                    Ltl::Next(_) => "X",
                    Ltl::Eventually(_) => "F",
                    _ => "G",
                };
                write!(f, "{op} ")?;
                child(f, c, c.precedence() < 5)
            }
            // left-associative
            Ltl::And(a, b) | Ltl::Or(a, b) => {
                let op = if matches!(self, Ltl::And(..)) { "&" } else { "|" };
                child(f, a, a.precedence() < p)?;
                write!(f, " {op} ")?;
                child(f, b, b.precedence() <= p)
            }
            // right-associative
            Ltl::Until(a, b) | Ltl::Implies(a, b) => {
                let op = if matches!(self, Ltl::Until(..)) { "U" } else { "->" };
                child(f, a, a.precedence() <= p)?;
                write!(f, " {op} ")?;
                child(f, b, b.precedence() < p)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    True,
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    Eventually,
    Always,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, LtlParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '!' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                Tok::Implies
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + 1 < chars.len() && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_')
                {
                    i += 1;
                }
                let word: String = chars[start..=i].iter().collect();
                match word.as_str() {
                    "true" => Tok::True,
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "F" => Tok::Eventually,
                    "G" => Tok::Always,
                    _ => Tok::Ident(word),
                }
            }
            other => return Err(LtlParseError::UnknownToken { pos: start, token: other }),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> Option<usize> {
        self.toks.get(self.pos).map(|(p, _)| *p)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, expected: &str) -> LtlParseError {
        LtlParseError::Syntax {
            pos: self.here(),
            expected: expected.into(),
        }
    }

    fn implies(&mut self) -> Result<Ltl, LtlParseError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            Ok(Ltl::implies(lhs, self.implies()?))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Ltl, LtlParseError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Or) {
            lhs = Ltl::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Ltl, LtlParseError> {
        let mut lhs = self.until()?;
        while self.eat(&Tok::And) {
            lhs = Ltl::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Ltl, LtlParseError> {
        let lhs = self.unary()?;
        if self.eat(&Tok::Until) {
            Ok(Ltl::until(lhs, self.until()?))
        } else {
            Ok(lhs)
        }
    }

    fn unary(&mut self) -> Result<Ltl, LtlParseError> {
        let ctor: fn(Ltl) -> Ltl = match self.peek() {
            Some(Tok::Not) => Ltl::not,
            Some(Tok::Next) => Ltl::next,
            Some(Tok::Eventually) => Ltl::eventually,
            Some(Tok::Always) => Ltl::always,
            _ => return self.primary(),
        };
        self.pos += 1;
        Ok(ctor(self.unary()?))
    }

    fn primary(&mut self) -> Result<Ltl, LtlParseError> {
        match self.peek().cloned() {
            Some(Tok::True) => {
                self.pos += 1;
                Ok(Ltl::True)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Ltl::Atom(name))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.implies()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.err("')'"));
                }
                Ok(inner)
            }
            _ => Err(self.err("formula")),
        }
    }
}

pub fn parse_ltl(text: &str) -> Result<Ltl, LtlParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let f = p.implies()?;
    if p.pos != p.toks.len() {
        return Err(p.err("end of input"));
    }
    Ok(f)
}

impl std::str::FromStr for Ltl {
    type Err = LtlParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ltl(s)
    }
}

/// Rewrites `->`, `F` and `G` into `!`, `|`, `U`.
pub fn expand_derived(f: &Ltl) -> Ltl {
    match f {
        Ltl::True | Ltl::Atom(_) => f.clone(),
        Ltl::Not(g) => Ltl::not(expand_derived(g)),
        Ltl::Next(g) => Ltl::next(expand_derived(g)),
        Ltl::And(a, b) => Ltl::and(expand_derived(a), expand_derived(b)),
        Ltl::Or(a, b) => Ltl::or(expand_derived(a), expand_derived(b)),
        Ltl::Until(a, b) => Ltl::until(expand_derived(a), expand_derived(b)),
        Ltl::Implies(a, b) => Ltl::or(Ltl::not(expand_derived(a)), expand_derived(b)),
        Ltl::Eventually(g) => Ltl::until(Ltl::True, expand_derived(g)),
        Ltl::Always(g) => Ltl::not(Ltl::until(Ltl::True, Ltl::not(expand_derived(g)))),
    }
}

/// Ultimately periodic word `stem · cycle^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lasso {
    pub stem: Vec<LabelSet>,
    /// Nonempty.
    pub cycle: Vec<LabelSet>,
}

impl Lasso {
    pub fn new(stem: Vec<LabelSet>, cycle: Vec<LabelSet>) -> Self {
        assert!(!cycle.is_empty(), "lasso loop must be nonempty");
        Self { stem, cycle }
    }

    /// Number of distinct positions, `|stem| + |loop|`.
    pub fn positions(&self) -> usize {
        self.stem.len() + self.cycle.len()
    }

    pub fn letter(&self, i: usize) -> &LabelSet {
        if i < self.stem.len() {
            &self.stem[i]
        } else {
            &self.cycle[(i - self.stem.len()) % self.cycle.len()]
        }
    }

    /// Successor position in the folded position space.
    pub fn succ(&self, i: usize) -> usize {
        if i + 1 < self.positions() {
            i + 1
        } else {
            self.stem.len()
        }
    }
}

/// Decides `stem · loop^ω ⊨ f` exactly.
pub fn eval_lasso(f: &Ltl, w: &Lasso) -> bool {
    eval_positions(f, w)[0]
}

fn eval_positions(f: &Ltl, w: &Lasso) -> Vec<bool> {
    let n = w.positions();
    match f {
        Ltl::True => vec![true; n],
        Ltl::Atom(a) => (0..n).map(|i| w.letter(i).contains(a)).collect(),
        Ltl::Not(g) => eval_positions(g, w).into_iter().map(|b| !b).collect(),
        Ltl::And(a, b) => zip_with(eval_positions(a, w), eval_positions(b, w), |x, y| x && y),
        Ltl::Or(a, b) => zip_with(eval_positions(a, w), eval_positions(b, w), |x, y| x || y),
        Ltl::Implies(a, b) => zip_with(eval_positions(a, w), eval_positions(b, w), |x, y| !x || y),
        Ltl::Next(g) => {
            let inner = eval_positions(g, w);
            (0..n).map(|i| inner[w.succ(i)]).collect()
        }
        Ltl::Until(a, b) => until_fixpoint(&eval_positions(a, w), &eval_positions(b, w), w),
        Ltl::Eventually(g) => until_fixpoint(&vec![true; n], &eval_positions(g, w), w),
        Ltl::Always(g) => {
            let neg: Vec<bool> = eval_positions(g, w).into_iter().map(|b| !b).collect();
            until_fixpoint(&vec![true; n], &neg, w)
                .into_iter()
                .map(|b| !b)
                .collect()
        }
    }
}

fn zip_with(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Least fixpoint of `v = rhs ∨ (lhs ∧ X v)` over the folded positions.
fn until_fixpoint(lhs: &[bool], rhs: &[bool], w: &Lasso) -> Vec<bool> {
    let n = w.positions();
    let mut v = rhs.to_vec();
    for _ in 0..=n {
        let mut changed = false;
        for i in (0..n).rev() {
            if !v[i] && lhs[i] && v[w.succ(i)] {
                v[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    v
}
