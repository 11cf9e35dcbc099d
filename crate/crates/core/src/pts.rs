//! The process model: actions, exact distributions, and the transition
//! system itself.
//!
//! A [`PtsBuilder`] is the raw, possibly ill-formed structure produced by the
//! parser or by hand. [`validate_pts`] reports everything wrong with it, and
//! [`PtsBuilder::build`] turns a well-formed builder into an immutable [`Pts`].
//! Every analysis in this crate works on [`Pts`], so the invariants below hold
//! everywhere downstream:
//!
//! * every weight is strictly positive and each distribution sums to exactly 1,
//! * every process mentioned in a support is declared,
//! * the reachability graph is acyclic, so every computation is finite.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact probabilities and distances.
pub type Rational = BigRational;

/// Decimal rendering of `r` rounded to at most `places` fractional digits,
/// with trailing zeros removed: `1/2` gives `0.5`, `1/3` gives `0.333333`.
pub fn to_decimal(r: &Rational, places: usize) -> String {
    let scale = num::pow(BigInt::from(10), places);
    let scaled = (r.abs() * Rational::from_integer(scale.clone()))
        .round()
        .to_integer();
    let (int, frac) = (&scaled / &scale, &scaled % &scale);
    let sign = if r.is_negative() && !scaled.is_zero() {
        "-"
    } else {
        ""
    };
    let frac = format!("{frac:0>places$}");
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// An action label. The reserved name `tau` is the silent action.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(Arc<str>);

impl Action {
    pub const TAU: &'static str = "tau";

    /// Fails unless `name` matches `[A-Za-z_][A-Za-z0-9_']*`.
    pub fn new(name: &str) -> Result<Self> {
        if is_identifier(name) {
            Ok(Action(Arc::from(name)))
        } else {
            Err(Error::InvalidAction(name.to_string()))
        }
    }

    pub fn tau() -> Self {
        Action(Arc::from(Self::TAU))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_tau(&self) -> bool {
        &*self.0 == Self::TAU
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// Index of a process inside one [`Pts`] or [`PtsBuilder`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ProcessId(u32);

impl ProcessId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A finite-support distribution over processes, stored support-only and
/// sorted by process id.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Distribution {
    weights: Vec<(ProcessId, Rational)>,
}

impl Distribution {
    pub fn dirac(p: ProcessId) -> Self {
        Distribution {
            weights: vec![(p, Rational::one())],
        }
    }

    pub fn weights(&self) -> &[(ProcessId, Rational)] {
        &self.weights
    }

    pub fn support(&self) -> impl Iterator<Item = ProcessId> + '_ {
        self.weights.iter().map(|(p, _)| *p)
    }

    pub fn get(&self, p: ProcessId) -> Rational {
        self.weights
            .binary_search_by_key(&p, |(q, _)| *q)
            .map(|i| self.weights[i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transition {
    pub action: Action,
    pub target: Distribution,
}

/// A finite, acyclic, nondeterministic probabilistic transition system.
#[derive(Clone, Debug)]
pub struct Pts {
    names: Vec<String>,
    index: HashMap<String, ProcessId>,
    transitions: Vec<Vec<Transition>>,
    depths: Vec<usize>,
}

impl Pts {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.names.len() as u32).map(ProcessId)
    }

    pub fn process(&self, name: &str) -> Result<ProcessId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownProcess(name.to_string()))
    }

    pub fn name(&self, p: ProcessId) -> &str {
        &self.names[p.index()]
    }

    fn check(&self, p: ProcessId) -> Result<()> {
        if p.index() < self.names.len() {
            Ok(())
        } else {
            Err(Error::UnknownProcess(format!("#{}", p.0)))
        }
    }

    /// Transitions of `p` in file order. Panics on a foreign id.
    pub fn transitions(&self, p: ProcessId) -> &[Transition] {
        &self.transitions[p.index()]
    }

    pub fn enabled_actions(&self, p: ProcessId) -> Result<BTreeSet<Action>> {
        self.check(p)?;
        Ok(self
            .transitions(p)
            .iter()
            .map(|t| t.action.clone())
            .collect())
    }

    /// Length of the longest computation from `p`.
    pub fn depth(&self, p: ProcessId) -> Result<usize> {
        self.check(p)?;
        Ok(self.depths[p.index()])
    }

    /// Every action label used anywhere in the system.
    pub fn actions(&self) -> BTreeSet<Action> {
        self.transitions
            .iter()
            .flatten()
            .map(|t| t.action.clone())
            .collect()
    }

    pub fn to_builder(&self) -> PtsBuilder {
        let mut b = PtsBuilder::new();
        for name in &self.names {
            b.process(name);
        }
        for (src, ts) in self.transitions.iter().enumerate() {
            for t in ts {
                b.add_transition(
                    ProcessId(src as u32),
                    t.action.clone(),
                    t.target.weights.clone(),
                );
            }
        }
        b
    }

    /// Name-based view used for equality: ids depend on declaration order,
    /// names and per-process transition order do not.
    fn canonical(&self) -> BTreeMap<&str, Vec<CanonicalTransition<'_>>> {
        self.processes()
            .map(|p| {
                let ts = self
                    .transitions(p)
                    .iter()
                    .map(|t| {
                        let dist = t
                            .target
                            .weights
                            .iter()
                            .map(|(q, w)| (self.name(*q), w))
                            .collect();
                        (&t.action, dist)
                    })
                    .collect();
                (self.name(p), ts)
            })
            .collect()
    }
}

type CanonicalTransition<'a> = (&'a Action, BTreeMap<&'a str, &'a Rational>);

impl PartialEq for Pts {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for Pts {}

#[derive(Clone, Debug)]
struct RawTransition {
    action: Action,
    targets: Vec<(ProcessId, Rational)>,
    line: Option<usize>,
}

/// Raw transition system; may violate any of the [`Pts`] invariants.
#[derive(Clone, Debug, Default)]
pub struct PtsBuilder {
    names: Vec<String>,
    index: HashMap<String, ProcessId>,
    transitions: Vec<Vec<RawTransition>>,
}

impl PtsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `name` if needed and returns its id.
    pub fn process(&mut self, name: &str) -> ProcessId {
        if let Some(&p) = self.index.get(name) {
            return p;
        }
        let p = ProcessId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), p);
        self.transitions.push(Vec::new());
        p
    }

    pub fn add_transition(
        &mut self,
        src: ProcessId,
        action: Action,
        targets: Vec<(ProcessId, Rational)>,
    ) -> &mut Self {
        self.push(src, action, targets, None)
    }

    pub(crate) fn push(
        &mut self,
        src: ProcessId,
        action: Action,
        targets: Vec<(ProcessId, Rational)>,
        line: Option<usize>,
    ) -> &mut Self {
        self.transitions[src.index()].push(RawTransition {
            action,
            targets,
            line,
        });
        self
    }

    /// Convenience for hand-built systems: `b.edge("s", "a", &[("u", 1, 2), ("v", 1, 2)])`.
    pub fn edge(&mut self, src: &str, action: &str, targets: &[(&str, i64, i64)]) -> &mut Self {
        let src = self.process(src);
        let action = Action::new(action).expect("valid action name");
        let targets = targets
            .iter()
            .map(|&(name, n, d)| (self.process(name), Rational::new(n.into(), d.into())))
            .collect();
        self.add_transition(src, action, targets)
    }

    fn location(&self, src: usize, k: usize) -> String {
        match self.transitions[src][k].line {
            Some(line) => format!("line {line}"),
            None => format!("`{}` transition {}", self.names[src], k + 1),
        }
    }

    /// Validates and freezes the system. Duplicate transitions are collapsed.
    pub fn build(self) -> std::result::Result<(Pts, Vec<Issue>), ValidationReport> {
        let report = validate_pts(&self);
        if !report.is_valid() {
            return Err(report);
        }
        let transitions: Vec<Vec<Transition>> = self
            .transitions
            .iter()
            .map(|ts| {
                let mut out: Vec<Transition> = Vec::new();
                for raw in ts {
                    let mut weights = raw.targets.clone();
                    weights.sort_by_key(|(p, _)| *p);
                    let t = Transition {
                        action: raw.action.clone(),
                        target: Distribution { weights },
                    };
                    if !out.contains(&t) {
                        out.push(t);
                    }
                }
                out
            })
            .collect();
        let depths = compute_depths(&transitions);
        let pts = Pts {
            names: self.names,
            index: self.index,
            transitions,
            depths,
        };
        Ok((pts, report.warnings))
    }
}

fn compute_depths(transitions: &[Vec<Transition>]) -> Vec<usize> {
    fn visit(p: usize, ts: &[Vec<Transition>], memo: &mut [Option<usize>]) -> usize {
        if let Some(d) = memo[p] {
            return d;
        }
        let d = ts[p]
            .iter()
            .flat_map(|t| t.target.support())
            .map(|q| 1 + visit(q.index(), ts, memo))
            .max()
            .unwrap_or(0);
        memo[p] = Some(d);
        d
    }
    let mut memo = vec![None; transitions.len()];
    (0..transitions.len())
        .map(|p| visit(p, transitions, &mut memo))
        .collect()
}

/// One located diagnostic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Issue {
    pub location: String,
    /// Source line, when the offending item came from parsed text.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Lists every violated invariant of a raw system.
pub fn validate_pts(pts: &PtsBuilder) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = pts.names.len();

    for (src, ts) in pts.transitions.iter().enumerate() {
        let mut seen: Vec<(&Action, Vec<(ProcessId, &Rational)>)> = Vec::new();
        for (k, t) in ts.iter().enumerate() {
            let loc = || pts.location(src, k);
            let mut sum = Rational::zero();
            let mut targets = BTreeSet::new();
            for (q, w) in &t.targets {
                if q.index() >= n {
                    report.errors.push(Issue {
                        location: loc(),
                        line: t.line,
                        message: format!("reference to undeclared process #{}", q.0),
                    });
                } else if !targets.insert(*q) {
                    report.errors.push(Issue {
                        location: loc(),
                        line: t.line,
                        message: format!("target `{}` listed more than once", pts.names[q.index()]),
                    });
                }
                if !w.is_positive() {
                    report.errors.push(Issue {
                        location: loc(),
                        line: t.line,
                        message: format!("weight {w} is not strictly positive"),
                    });
                }
                sum += w;
            }
            if t.targets.is_empty() {
                report.errors.push(Issue {
                    location: loc(),
                    line: t.line,
                    message: "transition has an empty target distribution".to_string(),
                });
            } else if !sum.is_one() {
                report.errors.push(Issue {
                    location: loc(),
                    line: t.line,
                    message: format!("weights sum to {sum} ≠ 1"),
                });
            }
            let mut key: Vec<(ProcessId, &Rational)> =
                t.targets.iter().map(|(q, w)| (*q, w)).collect();
            key.sort();
            if seen.iter().any(|(a, d)| *a == &t.action && *d == key) {
                report.warnings.push(Issue {
                    location: loc(),
                    line: t.line,
                    message: "duplicate transition collapsed".to_string(),
                });
            } else {
                seen.push((&t.action, key));
            }
        }
    }

    if let Some(cycle) = find_cycle(pts) {
        let path: Vec<&str> = cycle.iter().map(|&p| pts.names[p].as_str()).collect();
        report.errors.push(Issue {
            location: format!("process `{}`", path[0]),
            line: None,
            message: format!("reachability cycle {}", path.join(" -> ")),
        });
    }
    report
}

fn find_cycle(pts: &PtsBuilder) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let n = pts.names.len();
    let succ = |p: usize| -> Vec<usize> {
        let mut v: Vec<usize> = pts.transitions[p]
            .iter()
            .flat_map(|t| t.targets.iter().map(|(q, _)| q.index()))
            .filter(|&q| q < n)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut mark = vec![Mark::New; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // iterative DFS; `stack` holds the open path with pending successors
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(root, succ(root))];
        mark[root] = Mark::Open;
        while let Some((p, pending)) = stack.last_mut() {
            let p = *p;
            match pending.pop() {
                Some(q) => match mark[q] {
                    Mark::Open => {
                        let start = stack.iter().position(|(x, _)| *x == q).unwrap();
                        let mut cycle: Vec<usize> =
                            stack[start..].iter().map(|(x, _)| *x).collect();
                        cycle.push(q);
                        return Some(cycle);
                    }
                    Mark::New => {
                        mark[q] = Mark::Open;
                        stack.push((q, succ(q)));
                    }
                    Mark::Done => {}
                },
                None => {
                    mark[p] = Mark::Done;
                    stack.pop();
                }
            }
        }
    }
    None
}
