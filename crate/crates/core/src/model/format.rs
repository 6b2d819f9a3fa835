//! Line-oriented explicit POMDP format.
//!
//! ```text
//! pomdp 3 1 2
//! actions go            # optional, fixes the action order
//! init 0
//! obs 0 0
//! tr 0 go 1 1/2
//! label target 1
//! spec max Preach <= 3/4
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{
    Comparison, Direction, Distribution, Mdp, ObjectiveKind, Pomdp, Specification, Threshold,
};
use crate::error::{Error, ModelError, Result};
use crate::scalar::Scalar;

struct Token<'a> {
    column: usize,
    text: &'a str,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let content = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in content.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                tokens.push(Token {
                    column: s + 1,
                    text: &content[s..i],
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            column: s + 1,
            text: &content[s..],
        });
    }
    tokens
}

struct Cursor<'a> {
    line: usize,
    end_column: usize,
    tokens: Vec<Token<'a>>,
    next: usize,
}

impl<'a> Cursor<'a> {
    fn error(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn word(&mut self, what: &str) -> Result<&'a str> {
        match self.tokens.get(self.next) {
            Some(t) => {
                self.next += 1;
                Ok(t.text)
            }
            None => Err(self.error(self.end_column, format!("expected {what}"))),
        }
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.next.saturating_sub(1))
            .map_or(self.end_column, |t| t.column)
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let text = self.word(what)?;
        text.parse()
            .map_err(|_| self.error(self.column(), format!("expected {what}, found `{text}`")))
    }

    fn scalar<T: Scalar>(&mut self, what: &str) -> Result<T> {
        let text = self.word(what)?;
        T::parse(text).ok_or_else(|| self.error(self.column(), format!("invalid {what} `{text}`")))
    }

    fn rest(&mut self) -> impl Iterator<Item = &Token<'a>> + '_ {
        let start = self.next;
        self.next = self.tokens.len();
        self.tokens[start..].iter()
    }

    fn finish(&self) -> Result<()> {
        match self.tokens.get(self.next) {
            Some(t) => Err(self.error(t.column, format!("unexpected `{}`", t.text))),
            None => Ok(()),
        }
    }
}

#[derive(Default)]
struct Actions {
    names: Vec<String>,
}

impl Actions {
    fn id(&mut self, name: &str) -> usize {
        match self.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        }
    }
}

/// Parses and validates a model document.
pub fn parse_model<T: Scalar>(text: &str) -> Result<(Pomdp<T>, Specification<T>)> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut actions = Actions::default();
    let mut initial: Option<usize> = None;
    let mut obs: Vec<Option<usize>> = Vec::new();
    let mut rows: Vec<BTreeMap<usize, Distribution<T>>> = Vec::new();
    let mut target = BTreeSet::new();
    let mut avoid = BTreeSet::new();
    let mut rewards: BTreeMap<(usize, usize), T> = BTreeMap::new();
    let mut spec_line: Option<(ObjectiveKind, Direction, Option<Threshold<T>>)> = None;
    let mut last_line = 0;

    for (index, line) in text.lines().enumerate() {
        let tokens = tokenize(line);
        last_line = index + 1;
        if tokens.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            line: index + 1,
            end_column: line.chars().count() + 1,
            tokens,
            next: 0,
        };
        let keyword = cur.word("keyword")?;
        if header.is_none() && keyword != "pomdp" {
            return Err(cur.error(1, "expected `pomdp` header"));
        }
        let states = header.map_or(0, |h| h.0);
        let state_id = |cur: &mut Cursor, what: &str| -> Result<usize> {
            let s = cur.number(what)?;
            if s >= states {
                return Err(ModelError::DanglingState {
                    id: s,
                    count: states,
                }
                .into());
            }
            Ok(s)
        };
        match keyword {
            "pomdp" => {
                if header.is_some() {
                    return Err(cur.error(1, "duplicate header"));
                }
                let n = cur.number("state count")?;
                let a = cur.number("action count")?;
                let z = cur.number("observation count")?;
                if n == 0 {
                    return Err(cur.error(cur.column(), "a model needs at least one state"));
                }
                header = Some((n, a, z));
                obs = vec![None; n];
                rows = (0..n).map(|_| BTreeMap::new()).collect();
            }
            "actions" => {
                if !actions.names.is_empty() {
                    return Err(cur.error(1, "`actions` must precede transitions"));
                }
                for t in cur.rest() {
                    actions.id(t.text);
                }
            }
            "init" => {
                if initial.is_some() {
                    return Err(cur.error(1, "duplicate `init`"));
                }
                initial = Some(state_id(&mut cur, "state id")?);
            }
            "obs" => {
                let s = state_id(&mut cur, "state id")?;
                let z = cur.number("observation id")?;
                let count = header.map_or(0, |h| h.2);
                if z >= count {
                    return Err(ModelError::DanglingObservation { id: z, count }.into());
                }
                if obs[s].replace(z).is_some() {
                    return Err(cur.error(1, format!("duplicate observation for state {s}")));
                }
            }
            "tr" => {
                let s = state_id(&mut cur, "state id")?;
                let name = cur.word("action name")?;
                let a = actions.id(name);
                let t = state_id(&mut cur, "successor id")?;
                let p: T = cur.scalar("probability")?;
                rows[s].entry(a).or_default().push((t, p));
            }
            "label" => {
                let which = cur.word("label name")?;
                let set = match which {
                    "target" => &mut target,
                    "avoid" => &mut avoid,
                    other => {
                        return Err(cur.error(cur.column(), format!("unknown label `{other}`")))
                    }
                };
                while cur.next < cur.tokens.len() {
                    set.insert(state_id(&mut cur, "state id")?);
                }
            }
            "rew" => {
                let s = state_id(&mut cur, "state id")?;
                let name = cur.word("action name")?;
                let a = actions.id(name);
                let r: T = cur.scalar("reward")?;
                let slot = rewards.entry((s, a)).or_insert_with(T::zero);
                *slot = slot.clone() + r;
            }
            "spec" => {
                if spec_line.is_some() {
                    return Err(cur.error(1, "duplicate `spec`"));
                }
                let direction = match cur.word("max or min")? {
                    "max" => Direction::Max,
                    "min" => Direction::Min,
                    other => {
                        return Err(cur.error(
                            cur.column(),
                            format!("expected max or min, found `{other}`"),
                        ))
                    }
                };
                let kind = match cur.word("objective")? {
                    "Preach" => ObjectiveKind::ReachProbability,
                    "Preachavoid" => ObjectiveKind::ReachAvoidProbability,
                    "Rtotal" => ObjectiveKind::ExpectedTotalReward,
                    other => {
                        return Err(cur.error(cur.column(), format!("unknown objective `{other}`")))
                    }
                };
                let threshold = if cur.next < cur.tokens.len() {
                    let comparison = match cur.word("comparison")? {
                        "<=" => Comparison::AtMost,
                        ">=" => Comparison::AtLeast,
                        other => {
                            return Err(cur.error(
                                cur.column(),
                                format!("expected <= or >=, found `{other}`"),
                            ))
                        }
                    };
                    let value = cur.scalar("threshold")?;
                    Some(Threshold { comparison, value })
                } else {
                    None
                };
                spec_line = Some((kind, direction, threshold));
            }
            other => return Err(cur.error(1, format!("unknown keyword `{other}`"))),
        }
        cur.finish()?;
    }

    let syntax_eof = |message: &str| Error::Syntax {
        line: last_line.max(1),
        column: 1,
        message: message.to_string(),
    };
    let (n, declared_actions, num_obs) =
        header.ok_or_else(|| syntax_eof("missing `pomdp` header"))?;
    if actions.names.len() > declared_actions {
        return Err(syntax_eof(&format!(
            "{} distinct actions used but {declared_actions} declared",
            actions.names.len()
        )));
    }
    for i in actions.names.len()..declared_actions {
        actions.names.push(format!("_act{i}"));
    }
    let initial = initial.ok_or_else(|| syntax_eof("missing `init`"))?;
    let (kind, direction, threshold) = spec_line.ok_or_else(|| syntax_eof("missing `spec`"))?;
    let obs_of = obs
        .iter()
        .enumerate()
        .map(|(s, z)| z.ok_or(ModelError::MissingObservation(s)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = rows.into_iter().map(|r| r.into_iter().collect()).collect();
    let mdp = Mdp::new(actions.names, initial, rows)?;
    let pomdp = Pomdp::new(mdp, num_obs, obs_of)?;
    let spec = Specification {
        kind,
        direction,
        target,
        avoid,
        rewards,
        threshold,
    };
    spec.validate(&pomdp)?;
    debug_assert_eq!(pomdp.num_states(), n);
    Ok((pomdp, spec))
}

/// Writes a document that [`parse_model`] reads back to the same data.
pub fn serialize_model<T: Scalar>(pomdp: &Pomdp<T>, spec: &Specification<T>) -> String {
    let mdp = pomdp.mdp();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "pomdp {} {} {}",
        mdp.num_states(),
        mdp.num_actions(),
        pomdp.num_observations()
    );
    if mdp.num_actions() > 0 {
        let _ = writeln!(out, "actions {}", mdp.action_names().join(" "));
    }
    let _ = writeln!(out, "init {}", mdp.initial_state());
    for s in 0..mdp.num_states() {
        let _ = writeln!(out, "obs {s} {}", pomdp.observation(s));
    }
    for s in 0..mdp.num_states() {
        for choice in mdp.choices(s) {
            for (t, p) in &choice.distribution {
                let name = mdp.action_name(choice.action);
                let _ = writeln!(out, "tr {s} {name} {t} {}", p.render());
            }
        }
    }
    let join = |set: &BTreeSet<usize>| {
        set.iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "label target {}", join(&spec.target));
    if !spec.avoid.is_empty() {
        let _ = writeln!(out, "label avoid {}", join(&spec.avoid));
    }
    for ((s, a), r) in &spec.rewards {
        let _ = writeln!(out, "rew {s} {} {}", mdp.action_name(*a), r.render());
    }
    let _ = write!(
        out,
        "spec {} {}",
        spec.direction.keyword(),
        spec.kind.keyword()
    );
    if let Some(t) = &spec.threshold {
        let _ = write!(out, " {} {}", t.comparison.symbol(), t.value.render());
    }
    out.push('\n');
    out
}
