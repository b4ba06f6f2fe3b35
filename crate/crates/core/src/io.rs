//! JSON model files and canonical JSON output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{LabelSet, MdpstModel, ModelError, ValidationReport};

#[derive(Serialize, Deserialize)]
pub(crate) struct RawModel {
    pub props: Vec<String>,
    pub states: Vec<RawState>,
    pub initial: usize,
    pub actions: Vec<String>,
    pub transitions: Vec<RawTransition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepting: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<RawPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<[usize; 2]>>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RawState {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub label: Vec<String>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RawTransition {
    pub from: usize,
    pub action: String,
    pub outcomes: Vec<RawOutcome>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RawOutcome {
    pub prob: f64,
    pub targets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RawPair {
    pub fin: Vec<usize>,
    pub inf: Vec<usize>,
}

/// 1-based line of the `k`-th occurrence of `"key"` in `text`.
fn key_lines(text: &str, key: &str) -> Vec<usize> {
    let needle = format!("\"{key}\"");
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        out.extend(std::iter::repeat_n(i + 1, line.matches(&needle).count()));
    }
    out
}

pub(crate) fn parse_raw(text: &str) -> Result<(RawModel, MdpstModel), ModelError> {
    let raw: RawModel = serde_json::from_str(text)?;
    let state_lines = key_lines(text, "id");
    let trans_lines = key_lines(text, "from");
    let mut report = ValidationReport::default();
    let anchored = |report: &mut ValidationReport, line: Option<usize>, state, action, msg: String| {
        report.push(state, action, msg);
        report.issues.last_mut().expect("just pushed").line = line;
    };

    let n = raw.states.len();
    let mut order = vec![usize::MAX; n];
    for (k, st) in raw.states.iter().enumerate() {
        let line = state_lines.get(k).copied();
        if st.id >= n {
            anchored(&mut report, line, None, None, format!("state id {} out of range", st.id));
        } else if order[st.id] != usize::MAX {
            anchored(&mut report, line, Some(st.id), None, "duplicate state id".into());
        } else {
            order[st.id] = k;
        }
    }
    for (k, t) in raw.transitions.iter().enumerate() {
        let line = trans_lines.get(k).copied();
        if t.from >= n {
            anchored(&mut report, line, None, None, format!("source state {} out of range", t.from));
        }
        if !raw.actions.contains(&t.action) {
            anchored(&mut report, line, Some(t.from), Some(t.action.clone()), "undeclared action".into());
        }
        for o in &t.outcomes {
            if let Some(&bad) = o.targets.iter().find(|&&x| x >= n) {
                anchored(&mut report, line, Some(t.from), Some(t.action.clone()), format!("target {bad} out of range"));
            }
        }
    }
    if !report.is_empty() {
        return Err(ModelError::Invalid(report));
    }

    let mut b = MdpstModel::builder(raw.props.clone(), raw.actions.clone());
    for &k in &order {
        let st = &raw.states[k];
        b.add_state(st.name.clone(), st.label.iter().cloned().collect::<LabelSet>());
    }
    for t in &raw.transitions {
        let a = raw.actions.iter().position(|x| *x == t.action).expect("checked above");
        b.add_outcomes(
            t.from,
            a,
            t.outcomes.iter().map(|o| (o.prob, o.targets.iter().copied())),
        );
    }
    let model = b.build_unchecked(raw.initial);
    let mut report = model.validate();
    for issue in &mut report.issues {
        issue.line = match (issue.state, &issue.action) {
            (Some(s), Some(a)) => raw
                .transitions
                .iter()
                .position(|t| t.from == s && &t.action == a)
                .and_then(|k| trans_lines.get(k).copied()),
            (Some(s), None) => order.get(s).and_then(|&k| state_lines.get(k).copied()),
            _ => None,
        };
    }
    if !report.is_empty() {
        return Err(ModelError::Invalid(report));
    }
    Ok((raw, model))
}

/// Loads and validates a model file.
pub fn model_from_json(text: &str) -> Result<MdpstModel, ModelError> {
    parse_raw(text).map(|(_, m)| m)
}

pub(crate) fn raw_from_model(model: &MdpstModel) -> RawModel {
    RawModel {
        props: model.props().to_vec(),
        states: model
            .states()
            .iter()
            .enumerate()
            .map(|(id, st)| RawState {
                id,
                name: st.name.clone(),
                label: st.label.iter().map(String::from).collect(),
            })
            .collect(),
        initial: model.initial(),
        actions: model.actions().to_vec(),
        transitions: (0..model.num_states())
            .flat_map(|s| {
                model.choices(s).iter().map(move |c| RawTransition {
                    from: s,
                    action: model.action_name(c.action).to_string(),
                    outcomes: c
                        .outcomes
                        .iter()
                        .map(|o| RawOutcome {
                            prob: o.prob,
                            targets: o.targets.clone(),
                        })
                        .collect(),
                })
            })
            .collect(),
        accepting: None,
        pairs: None,
        coords: None,
    }
}

pub fn model_to_json(model: &MdpstModel) -> Value {
    serde_json::to_value(raw_from_model(model)).expect("model serializes")
}

/// Rounds to 12 significant digits and prints the shortest form.
fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("float round-trips");
    let s = format!("{rounded:?}");
    if s.contains(['.', 'e', 'E']) || !rounded.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => write!(out, "{i}").expect("write to string"),
            (_, Some(u)) => write!(out, "{u}").expect("write to string"),
            _ => out.push_str(&fmt_float(n.as_f64().expect("finite number"))),
        },
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, x, indent + 2);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*k], indent + 2);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and floats rounded to 12 significant
/// digits, so identical data always prints identically.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
  "props": ["a"],
  "states": [
    {"id": 0, "label": ["a"]},
    {"id": 1, "label": []}
  ],
  "initial": 0,
  "actions": ["go"],
  "transitions": [
    {"from": 0, "action": "go", "outcomes": [{"prob": 0.5, "targets": [0, 1]}, {"prob": 0.5, "targets": [1]}]},
    {"from": 1, "action": "go", "outcomes": [{"prob": 1.0, "targets": [1]}]}
  ]
}"#;

    #[test]
    fn loads_and_round_trips() {
        let m = model_from_json(TINY).unwrap();
        assert_eq!(m.num_states(), 2);
        assert!(!m.is_classical_mdp());
        let text = canonical_json(&model_to_json(&m));
        assert_eq!(model_from_json(&text).unwrap(), m);
    }

    #[test]
    fn errors_point_at_lines() {
        let bad = TINY.replace("{\"prob\": 1.0, \"targets\": [1]}", "{\"prob\": 0.9, \"targets\": [1]}");
        let e = model_from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("line 11") && e.contains("probability mass 0.9 ≠ 1"), "{e}");
        let bad = TINY.replace("\"targets\": [1]}]},", "\"targets\": [7]}]},");
        let e = model_from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("line 10") && e.contains("target 7 out of range"), "{e}");
    }

    #[test]
    fn truncated_input_is_json_error() {
        assert!(matches!(model_from_json(&TINY[..40]), Err(ModelError::Json(_))));
    }

    #[test]
    fn canonical_floats_and_keys() {
        let v: Value = serde_json::from_str(r#"{"b": 0.1, "a": [1, 0.30000000000000004, 2.5e-20]}"#).unwrap();
        assert_eq!(canonical_json(&v), "{\n  \"a\": [1, 0.3, 2.5e-20],\n  \"b\": 0.1\n}\n");
    }
}
