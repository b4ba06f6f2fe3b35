//! Reader for a subset of the Hanoi Omega-Automata format (v1).
//!
//! Supported: `HOA`, `States`, a single `Start`, `AP`, `acc-name`
//! (`Buchi` or `Rabin n`), `Acceptance`, informational `name`/`tool`/
//! `properties` lines, and explicitly labelled edges. Büchi automata are
//! normalised into [`Ldba`] shape; Rabin automata load as [`Dra`].

use std::collections::{BTreeMap, BTreeSet};

use super::{AutState, Automaton, AutomatonError, Component, Dra, Edge, Guard, Ldba, RabinPair};

fn err(line: usize, msg: impl Into<String>) -> AutomatonError {
    AutomatonError::Hoa {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum AccKind {
    Buchi,
    Rabin(usize),
}

#[derive(Debug)]
struct RawEdge {
    line: usize,
    guard: Guard,
    to: usize,
    marks: Vec<usize>,
}

#[derive(Debug, Default)]
struct RawState {
    line: usize,
    name: Option<String>,
    marks: Vec<usize>,
    edges: Vec<RawEdge>,
}

/// Acceptance condition as a disjunction of conjunctions of `Fin`/`Inf`.
type Dnf = Vec<Vec<(bool, usize)>>;

pub fn parse_hoa(text: &str) -> Result<Automaton, AutomatonError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut n_states: Option<usize> = None;
    let mut start: Option<usize> = None;
    let mut ap: Option<Vec<String>> = None;
    let mut acc_name: Option<AccKind> = None;
    let mut acceptance: Option<(usize, Dnf)> = None;
    let mut saw_version = false;
    let mut body_line = 0;

    for (ln, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        if line == "--BODY--" {
            body_line = ln;
            break;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| err(ln, format!("malformed header line {line:?}")))?;
        let rest = rest.trim();
        match key.trim() {
            "HOA" => {
                if rest != "v1" {
                    return Err(err(ln, format!("unsupported HOA version {rest:?}")));
                }
                saw_version = true;
            }
            "States" => n_states = Some(parse_num(rest, ln)?),
            "Start" => {
                if start.is_some() {
                    return Err(err(ln, "multiple Start states are not supported"));
                }
                if rest.contains('&') {
                    return Err(err(ln, "conjunctive Start is not supported"));
                }
                start = Some(parse_num(rest, ln)?);
            }
            "AP" => ap = Some(parse_ap(rest, ln)?),
            "acc-name" => {
                let mut parts = rest.split_whitespace();
                acc_name = Some(match (parts.next(), parts.next()) {
                    (Some("Buchi"), None) => AccKind::Buchi,
                    (Some("Rabin"), Some(k)) => AccKind::Rabin(parse_num(k, ln)?),
                    _ => return Err(err(ln, format!("unsupported acc-name {rest:?}"))),
                });
            }
            "Acceptance" => {
                let (count, cond) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| err(ln, "malformed Acceptance"))?;
                acceptance = Some((parse_num(count, ln)?, parse_acceptance(cond.trim(), ln)?));
            }
            "name" | "tool" | "properties" => {}
            other => return Err(err(ln, format!("unsupported header item {other:?}"))),
        }
    }
    if !saw_version {
        return Err(err(1, "missing HOA: v1 header"));
    }
    if body_line == 0 {
        return Err(err(text.lines().count().max(1), "missing --BODY--"));
    }
    let start = start.ok_or_else(|| err(body_line, "missing Start"))?;
    let ap = ap.unwrap_or_default();
    let (_, dnf) = acceptance.ok_or_else(|| err(body_line, "missing Acceptance"))?;
    let kind = classify(&dnf, acc_name.as_ref(), body_line)?;

    let mut states: BTreeMap<usize, RawState> = BTreeMap::new();
    let mut current: Option<usize> = None;
    let mut ended = false;
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        if line == "--END--" {
            ended = true;
            break;
        }
        if let Some(rest) = line.strip_prefix("State:") {
            let (id, name, marks) = parse_state_header(rest.trim(), ln)?;
            if states.contains_key(&id) {
                return Err(err(ln, format!("state {id} declared twice")));
            }
            states.insert(
                id,
                RawState {
                    line: ln,
                    name,
                    marks,
                    edges: Vec::new(),
                },
            );
            current = Some(id);
        } else if line.starts_with('[') {
            let q = current.ok_or_else(|| err(ln, "edge before any State:"))?;
            let edge = parse_edge(line, &ap, ln)?;
            states.get_mut(&q).expect("current state exists").edges.push(edge);
        } else {
            return Err(err(ln, format!("unsupported body line {line:?}")));
        }
    }
    if !ended {
        return Err(err(text.lines().count(), "missing --END--"));
    }
    let n = n_states.unwrap_or_else(|| states.keys().next_back().map_or(0, |k| k + 1));
    if start >= n {
        return Err(err(body_line, format!("Start state {start} out of range")));
    }
    for (id, st) in &states {
        if *id >= n {
            return Err(err(st.line, format!("state {id} out of range")));
        }
        if let Some(e) = st.edges.iter().find(|e| e.to >= n) {
            return Err(err(e.line, format!("edge target {} out of range", e.to)));
        }
    }
    let raw: Vec<RawState> = (0..n)
        .map(|i| states.remove(&i).unwrap_or_default())
        .collect();
    match kind {
        AccKind::Buchi => {
            let mark = dnf[0][0].1;
            build_ldba(ap, start, raw, mark).map(Automaton::Ldba)
        }
        AccKind::Rabin(_) => build_dra(ap, start, raw, &dnf, body_line).map(Automaton::Dra),
    }
}

fn parse_num(s: &str, ln: usize) -> Result<usize, AutomatonError> {
    s.trim()
        .parse()
        .map_err(|_| err(ln, format!("expected a number, found {s:?}")))
}

fn parse_ap(rest: &str, ln: usize) -> Result<Vec<String>, AutomatonError> {
    let (count, names) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    let count = parse_num(count, ln)?;
    let mut out = Vec::new();
    let mut chars = names.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(c) => name.push(c),
                        None => return Err(err(ln, "unterminated AP string")),
                    }
                }
                out.push(name);
            }
            c if c.is_whitespace() => {}
            c => return Err(err(ln, format!("unexpected {c:?} in AP"))),
        }
    }
    if out.len() != count {
        return Err(err(ln, format!("AP declares {count} names but lists {}", out.len())));
    }
    Ok(out)
}

fn parse_marks(s: &str, ln: usize) -> Result<Vec<usize>, AutomatonError> {
    let inner = s
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| err(ln, format!("malformed acceptance marks {s:?}")))?;
    inner.split_whitespace().map(|m| parse_num(m, ln)).collect()
}

fn parse_state_header(
    rest: &str,
    ln: usize,
) -> Result<(usize, Option<String>, Vec<usize>), AutomatonError> {
    if rest.starts_with('[') {
        return Err(err(ln, "state labels are not supported"));
    }
    let (id, mut tail) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    let id = parse_num(id, ln)?;
    tail = tail.trim();
    let mut name = None;
    if let Some(t) = tail.strip_prefix('"') {
        let (n, after) = t
            .split_once('"')
            .ok_or_else(|| err(ln, "unterminated state name"))?;
        name = Some(n.to_string());
        tail = after.trim();
    }
    let marks = if tail.is_empty() {
        Vec::new()
    } else {
        parse_marks(tail, ln)?
    };
    Ok((id, name, marks))
}

fn parse_edge(line: &str, ap: &[String], ln: usize) -> Result<RawEdge, AutomatonError> {
    let close = line
        .find(']')
        .ok_or_else(|| err(ln, "malformed label expression: missing ']'"))?;
    let guard = parse_label(&line[1..close], ap, ln)?;
    let rest = line[close + 1..].trim();
    let (dest, marks) = match rest.find('{') {
        Some(i) => (&rest[..i], parse_marks(rest[i..].trim(), ln)?),
        None => (rest, Vec::new()),
    };
    let dest = dest.trim();
    if dest.contains('&') {
        return Err(err(ln, "alternating edges are not supported"));
    }
    Ok(RawEdge {
        line: ln,
        guard,
        to: parse_num(dest, ln)?,
        marks,
    })
}

/// Label expressions: `t`, `f`, AP indices, `!`, `&`, `|`, parentheses.
fn parse_label(s: &str, ap: &[String], ln: usize) -> Result<Guard, AutomatonError> {
    struct P<'a> {
        c: Vec<char>,
        i: usize,
        ap: &'a [String],
        ln: usize,
    }
    impl P<'_> {
        fn ws(&mut self) {
            while self.c.get(self.i).is_some_and(|c| c.is_whitespace()) {
                self.i += 1;
            }
        }
        fn peek(&mut self) -> Option<char> {
            self.ws();
            self.c.get(self.i).copied()
        }
        fn bad(&self, what: &str) -> AutomatonError {
            err(self.ln, format!("malformed label expression: {what}"))
        }
        fn or(&mut self) -> Result<Guard, AutomatonError> {
            let mut g = self.and()?;
            while self.peek() == Some('|') {
                self.i += 1;
                g = Guard::or(g, self.and()?);
            }
            Ok(g)
        }
        fn and(&mut self) -> Result<Guard, AutomatonError> {
            let mut g = self.not()?;
            while self.peek() == Some('&') {
                self.i += 1;
                g = Guard::And(Box::new(g), Box::new(self.not()?));
            }
            Ok(g)
        }
        fn not(&mut self) -> Result<Guard, AutomatonError> {
            if self.peek() == Some('!') {
                self.i += 1;
                return Ok(Guard::Not(Box::new(self.not()?)));
            }
            self.atom()
        }
        fn atom(&mut self) -> Result<Guard, AutomatonError> {
            match self.peek() {
                Some('t') => {
                    self.i += 1;
                    Ok(Guard::True)
                }
                Some('f') => {
                    self.i += 1;
                    Ok(Guard::Not(Box::new(Guard::True)))
                }
                Some('(') => {
                    self.i += 1;
                    let g = self.or()?;
                    if self.peek() != Some(')') {
                        return Err(self.bad("expected ')'"));
                    }
                    self.i += 1;
                    Ok(g)
                }
                Some('@') => Err(self.bad("aliases are not supported")),
                Some(c) if c.is_ascii_digit() => {
                    let start = self.i;
                    while self.c.get(self.i).is_some_and(|c| c.is_ascii_digit()) {
                        self.i += 1;
                    }
                    let idx: usize = self.c[start..self.i]
                        .iter()
                        .collect::<String>()
                        .parse()
                        .map_err(|_| self.bad("bad index"))?;
                    self.ap
                        .get(idx)
                        .map(|a| Guard::Atom(a.clone()))
                        .ok_or_else(|| self.bad(&format!("AP index {idx} out of range")))
                }
                Some(c) => Err(self.bad(&format!("unexpected {c:?}"))),
                None => Err(self.bad("unexpected end")),
            }
        }
    }
    let mut p = P {
        c: s.chars().collect(),
        i: 0,
        ap,
        ln,
    };
    let g = p.or()?;
    if p.peek().is_some() {
        return Err(p.bad("trailing input"));
    }
    Ok(g)
}

fn parse_acceptance(s: &str, ln: usize) -> Result<Dnf, AutomatonError> {
    // Accepts disjunctions of conjunctions of Fin(k)/Inf(k), parentheses allowed
    // around each conjunction.
    let mut dnf = Vec::new();
    for disjunct in s.split('|') {
        let d = disjunct.trim();
        let d = d
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .unwrap_or(d);
        let mut conj = Vec::new();
        for atom in d.split('&') {
            let a = atom.trim().trim_matches(|c| c == '(' || c == ')');
            let a = a.trim();
            let (is_fin, inner) = if let Some(r) = a.strip_prefix("Fin(") {
                (true, r)
            } else if let Some(r) = a.strip_prefix("Inf(") {
                (false, r)
            } else {
                return Err(err(ln, format!("unsupported acceptance condition {s:?}")));
            };
            let k = inner.trim_end_matches(')');
            conj.push((is_fin, parse_num(k, ln)?));
        }
        dnf.push(conj);
    }
    Ok(dnf)
}

fn classify(dnf: &Dnf, name: Option<&AccKind>, ln: usize) -> Result<AccKind, AutomatonError> {
    let is_buchi = dnf.len() == 1 && dnf[0].len() == 1 && !dnf[0][0].0;
    let is_rabin = dnf
        .iter()
        .all(|c| c.iter().filter(|(f, _)| !f).count() == 1 && c.iter().filter(|(f, _)| *f).count() <= 1);
    match name {
        Some(AccKind::Buchi) if is_buchi => Ok(AccKind::Buchi),
        Some(AccKind::Rabin(k)) if is_rabin && *k == dnf.len() => Ok(AccKind::Rabin(*k)),
        Some(other) => Err(err(ln, format!("Acceptance does not match acc-name {other:?}"))),
        None if is_buchi => Ok(AccKind::Buchi),
        None if is_rabin => Ok(AccKind::Rabin(dnf.len())),
        None => Err(err(ln, "only Büchi and Rabin acceptance are supported")),
    }
}

fn nondeterminism(edges: &[(&RawEdge, bool)]) -> Option<usize> {
    for (i, (a, _)) in edges.iter().enumerate() {
        for (b, _) in &edges[i + 1..] {
            if !Guard::disjoint(&a.guard, &b.guard) {
                return Some(b.line);
            }
        }
    }
    None
}

/// Splits a Büchi automaton into initial and accepting components. The
/// accepting component is the forward closure of everything carrying an
/// acceptance mark and must be deterministic. Edges from the initial into the
/// accepting component become ε-jumps to fresh entry states that replay the
/// consumed letter.
fn build_ldba(
    ap: Vec<String>,
    start: usize,
    raw: Vec<RawState>,
    mark: usize,
) -> Result<Ldba, AutomatonError> {
    let n = raw.len();
    let mut in_acc = vec![false; n];
    let mut stack: Vec<usize> = (0..n)
        .filter(|&q| raw[q].marks.contains(&mark) || raw[q].edges.iter().any(|e| e.marks.contains(&mark)))
        .collect();
    for &q in &stack {
        in_acc[q] = true;
    }
    while let Some(q) = stack.pop() {
        for e in &raw[q].edges {
            if !in_acc[e.to] {
                in_acc[e.to] = true;
                stack.push(e.to);
            }
        }
    }
    let mut states: Vec<AutState> = raw
        .iter()
        .zip(&in_acc)
        .map(|(r, &acc)| AutState {
            name: r.name.clone(),
            component: if acc {
                Component::Accepting
            } else {
                Component::Initial
            },
            accepting: r.marks.contains(&mark),
        })
        .collect();
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new(); n];
    let mut eps = vec![BTreeSet::new(); n];
    let mut entries: BTreeMap<(String, usize, bool), usize> = BTreeMap::new();
    for q in 0..n {
        let tagged: Vec<(&RawEdge, bool)> = raw[q]
            .edges
            .iter()
            .map(|e| (e, in_acc[e.to]))
            .collect();
        let internal: Vec<(&RawEdge, bool)> = tagged
            .iter()
            .filter(|(_, crossing)| in_acc[q] || !crossing)
            .copied()
            .collect();
        if let Some(line) = nondeterminism(&internal) {
            return Err(err(line, format!("nondeterministic edges from state {q}")));
        }
        for (e, crossing) in tagged {
            let accepting = e.marks.contains(&mark);
            if in_acc[q] || !crossing {
                edges[q].push(Edge {
                    guard: e.guard.clone(),
                    to: e.to,
                    accepting,
                });
                continue;
            }
            let key = (e.guard.to_string(), e.to, accepting);
            let entry = *entries.entry(key).or_insert_with(|| {
                states.push(AutState {
                    name: Some(format!("enter{}", e.to)),
                    component: Component::Accepting,
                    accepting: false,
                });
                edges.push(vec![Edge {
                    guard: e.guard.clone(),
                    to: e.to,
                    accepting,
                }]);
                eps.push(BTreeSet::new());
                states.len() - 1
            });
            eps[q].insert(entry);
        }
    }
    let initial = if in_acc[start] {
        states.push(AutState {
            name: Some("init".into()),
            component: Component::Initial,
            accepting: false,
        });
        edges.push(Vec::new());
        eps.push(BTreeSet::from([start]));
        states.len() - 1
    } else {
        start
    };
    let ldba = Ldba {
        ap,
        states,
        initial,
        edges,
        eps,
    };
    let report = ldba.validate();
    if !report.is_empty() {
        return Err(AutomatonError::Invalid(report));
    }
    Ok(ldba)
}

fn build_dra(
    ap: Vec<String>,
    start: usize,
    raw: Vec<RawState>,
    dnf: &Dnf,
    ln: usize,
) -> Result<Dra, AutomatonError> {
    if let Some(e) = raw.iter().flat_map(|r| &r.edges).find(|e| !e.marks.is_empty()) {
        return Err(err(e.line, "transition-based Rabin acceptance is not supported"));
    }
    let with_mark = |m: usize| -> BTreeSet<usize> {
        (0..raw.len()).filter(|&q| raw[q].marks.contains(&m)).collect()
    };
    let pairs = dnf
        .iter()
        .map(|conj| {
            let mut p = RabinPair::default();
            for &(is_fin, m) in conj {
                if is_fin {
                    p.fin = with_mark(m);
                } else {
                    p.inf = with_mark(m);
                }
            }
            p
        })
        .collect();
    let dra = Dra {
        ap,
        names: raw.iter().map(|r| r.name.clone()).collect(),
        initial: start,
        edges: raw
            .into_iter()
            .map(|r| {
                r.edges
                    .into_iter()
                    .map(|e| Edge {
                        guard: e.guard,
                        to: e.to,
                        accepting: false,
                    })
                    .collect()
            })
            .collect(),
        pairs,
    };
    let report = dra.validate();
    if !report.is_empty() {
        return Err(err(ln, format!("invalid Rabin automaton: {report}")));
    }
    Ok(dra)
}
