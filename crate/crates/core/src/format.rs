//! Line-oriented text format for game models.
//!
//! ```text
//! # comment
//! ssg 1
//! states 4
//! initial 0
//! goal 2
//! minimizer 0 3
//! action 0 a
//!   -> 1 1
//! action 1 b
//!   -> 0 1
//! action 1 c
//!   -> 2 0.5
//!   -> 3 0.5
//! ```
//!
//! Every state not listed on a `minimizer` line belongs to Maximizer.
//! `->` lines attach to the most recent `action`. Probabilities are
//! written in Rust's shortest round-trip notation, so serialize→parse
//! reproduces a model bit for bit; goal states are normalized to
//! absorbing on load.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Action, Distribution, Player, SsgModel, StateId, ValidationReport};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("model violates invariants: {report}")]
    Invalid { report: ValidationReport },
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_usize(line: usize, token: &str, what: &str) -> Result<usize, ParseError> {
    token
        .parse()
        .map_err(|_| syntax(line, format!("invalid {what} '{token}'")))
}

fn parse_prob(line: usize, token: &str) -> Result<f64, ParseError> {
    token
        .parse()
        .map_err(|_| syntax(line, format!("invalid probability '{token}'")))
}

/// Parses the text format. Structural problems are reported with their
/// line number; invariant violations of an otherwise well-formed model
/// come back as a validation report naming the offending actions.
pub fn parse_model(text: &str) -> Result<SsgModel, ParseError> {
    let mut num_states: Option<usize> = None;
    let mut initial: Option<usize> = None;
    let mut goals: BTreeSet<StateId> = BTreeSet::new();
    let mut minimizer: BTreeSet<usize> = BTreeSet::new();
    let mut actions: Vec<(usize, usize, Action)> = Vec::new(); // (line, state, action)
    let mut current: Option<(usize, usize, String, Vec<(StateId, f64)>)> = None;
    let mut header_seen = false;

    let flush =
        |current: &mut Option<(usize, usize, String, Vec<(StateId, f64)>)>,
         actions: &mut Vec<(usize, usize, Action)>| {
            if let Some((line, state, label, entries)) = current.take() {
                // Normalize nearly-exact sums through the checked
                // constructor; anything else is kept raw so validation
                // can name the violation.
                let dist = Distribution::new(entries.clone())
                    .unwrap_or_else(|_| Distribution::from_entries_unchecked(entries));
                actions.push((line, state, Action::new(label, dist)));
            }
        };

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().expect("nonempty line");
        if !header_seen {
            if head != "ssg" || tokens.next() != Some("1") {
                return Err(syntax(line_no, "expected header 'ssg 1'"));
            }
            header_seen = true;
            continue;
        }
        match head {
            "states" => {
                let token = tokens
                    .next()
                    .ok_or_else(|| syntax(line_no, "missing state count"))?;
                num_states = Some(parse_usize(line_no, token, "state count")?);
            }
            "initial" => {
                let token = tokens
                    .next()
                    .ok_or_else(|| syntax(line_no, "missing initial state"))?;
                initial = Some(parse_usize(line_no, token, "initial state")?);
            }
            "goal" => {
                for token in tokens {
                    goals.insert(StateId(parse_usize(line_no, token, "goal state")?));
                }
            }
            "minimizer" => {
                for token in tokens {
                    minimizer.insert(parse_usize(line_no, token, "minimizer state")?);
                }
            }
            "action" => {
                flush(&mut current, &mut actions);
                let state_token = tokens
                    .next()
                    .ok_or_else(|| syntax(line_no, "missing action state"))?;
                let state = parse_usize(line_no, state_token, "action state")?;
                let label: String = tokens.collect::<Vec<_>>().join(" ");
                if label.is_empty() {
                    return Err(syntax(line_no, "missing action label"));
                }
                current = Some((line_no, state, label, Vec::new()));
            }
            "->" => {
                let Some((_, _, _, entries)) = current.as_mut() else {
                    return Err(syntax(line_no, "transition outside an action"));
                };
                let target_token = tokens
                    .next()
                    .ok_or_else(|| syntax(line_no, "missing transition target"))?;
                let target = parse_usize(line_no, target_token, "transition target")?;
                let prob_token = tokens
                    .next()
                    .ok_or_else(|| syntax(line_no, "missing transition probability"))?;
                let prob = parse_prob(line_no, prob_token)?;
                entries.push((StateId(target), prob));
            }
            other => {
                return Err(syntax(line_no, format!("unknown directive '{other}'")));
            }
        }
    }
    flush(&mut current, &mut actions);

    if !header_seen {
        return Err(syntax(1, "expected header 'ssg 1'"));
    }
    let n = num_states.ok_or_else(|| syntax(1, "missing 'states' line"))?;
    let initial = StateId(initial.ok_or_else(|| syntax(1, "missing 'initial' line"))?);

    let mut per_state: Vec<Vec<Action>> = vec![Vec::new(); n];
    for (line, state, action) in actions {
        if state >= n {
            return Err(syntax(line, format!("action state {state} out of range")));
        }
        per_state[state].push(action);
    }
    let owner = (0..n)
        .map(|s| {
            if minimizer.contains(&s) {
                Player::Minimizer
            } else {
                Player::Maximizer
            }
        })
        .collect();

    let mut model = SsgModel::new(owner, per_state, initial, goals);
    model.make_goals_absorbing();
    let report = model.validate();
    if !report.is_ok() {
        return Err(ParseError::Invalid { report });
    }
    Ok(model)
}

/// Serializes a model into the canonical text form. Probabilities use
/// the shortest representation that parses back to the identical bits.
pub fn serialize_model(model: &SsgModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ssg 1");
    let _ = writeln!(out, "states {}", model.num_states());
    let _ = writeln!(out, "initial {}", model.initial().index());
    if !model.goals().is_empty() {
        let ids: Vec<String> = model.goals().iter().map(|g| g.index().to_string()).collect();
        let _ = writeln!(out, "goal {}", ids.join(" "));
    }
    let minimizer: Vec<String> = model
        .states()
        .filter(|&s| model.owner(s) == Player::Minimizer)
        .map(|s| s.index().to_string())
        .collect();
    if !minimizer.is_empty() {
        let _ = writeln!(out, "minimizer {}", minimizer.join(" "));
    }
    for s in model.states() {
        for action in model.actions(s) {
            let _ = writeln!(out, "action {} {}", s.index(), action.label);
            for &(target, prob) in action.distribution.entries() {
                let _ = writeln!(out, "  -> {} {}", target.index(), prob);
            }
        }
    }
    out
}
