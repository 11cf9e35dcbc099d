//! Text formats for transition systems and trace distribution formulae.
//!
//! A system file has one transition per line:
//!
//! ```text
//! # comment
//! s  -a-> 1/2 s1, 0.5 s2
//! s1 -tau-> 1 nil
//! idle
//! ```
//!
//! A bare identifier declares a process with no transitions. Targets that
//! never appear as a source are declared automatically and are terminal.
//! Probabilities are exact: `1`, decimals such as `0.25`, or fractions `p/q`.
//!
//! A formula is `term ("(+)" term)*` with `term ::= prob phi` and
//! `phi ::= "T" | "<" action ">" phi`, e.g. `0.5 <a><c>T (+) 0.5 <a><b>T`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, One, Signed, Zero};

use crate::error::Error;
use crate::logic::{TraceDistFormula, TraceFormula};
use crate::pts::{is_identifier, Action, Pts, PtsBuilder, Rational};

/// A 1-based position in the input.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Diagnostic {
    pub span: Option<SourceSpan>,
    pub message: String,
}

impl Diagnostic {
    fn at(span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            span: Some(span),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{}:{}: {}", s.line, s.column, self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every error found in one input.
#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub struct ParseErrors(pub Vec<Diagnostic>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parses an exact probability literal: an integer, a decimal, or `p/q`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = digits(n)?.parse().ok()?;
        let d: BigInt = digits(d)?.parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let int = if int.is_empty() { "0" } else { digits(int)? };
    if !frac.is_empty() {
        digits(frac)?;
    }
    let n: BigInt = format!("{int}{frac}").parse().ok()?;
    let d = num::pow(BigInt::from(10), frac.len());
    Some(Rational::new(n, d))
}

fn digits(s: &str) -> Option<&str> {
    (!s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())).then_some(s)
}

/// Character cursor tracking line and column.
struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Cursor {
            chars: text.chars().peekable(),
            line,
            column: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn span(&self, length: usize) -> SourceSpan {
        SourceSpan {
            line: self.line,
            column: self.column,
            length: length.max(1),
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> (SourceSpan, String) {
        let start = self.span(0);
        let mut out = String::new();
        while let Some(c) = self.peek().filter(|&c| f(c)) {
            out.push(c);
            self.bump();
        }
        (
            SourceSpan {
                length: out.chars().count().max(1),
                ..start
            },
            out,
        )
    }

    fn ident(&mut self, what: &str) -> Result<(SourceSpan, String), Diagnostic> {
        let (span, s) = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'');
        if is_identifier(&s) {
            Ok((span, s))
        } else {
            Err(self.unexpected(what))
        }
    }

    fn prob(&mut self) -> Result<(SourceSpan, Rational), Diagnostic> {
        let (span, s) = self.take_while(|c| c.is_ascii_digit() || c == '.' || c == '/');
        if s.is_empty() {
            return Err(self.unexpected("a probability"));
        }
        parse_rational(&s)
            .map(|r| (span, r))
            .ok_or_else(|| Diagnostic::at(span, format!("invalid probability `{s}`")))
    }

    fn expect(&mut self, token: &str) -> Result<(), Diagnostic> {
        let span = self.span(token.chars().count());
        for want in token.chars() {
            if self.peek() != Some(want) {
                return Err(Diagnostic::at(
                    span,
                    format!("expected `{token}`, found {}", self.found()),
                ));
            }
            self.bump();
        }
        Ok(())
    }

    fn found(&mut self) -> String {
        match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        }
    }

    fn unexpected(&mut self, what: &str) -> Diagnostic {
        let found = self.found();
        Diagnostic::at(self.span(1), format!("expected {what}, found {found}"))
    }
}

type Target = (SourceSpan, Rational, String);

struct Line {
    src: (SourceSpan, String),
    body: Option<(String, Vec<Target>)>,
}

fn parse_line(text: &str, line: usize) -> Result<Line, Diagnostic> {
    let mut cur = Cursor::new(text, line);
    cur.skip_ws();
    let src = cur.ident("a process name")?;
    cur.skip_ws();
    if cur.peek().is_none() {
        return Ok(Line { src, body: None });
    }
    cur.expect("-")?;
    let (aspan, action) = cur.ident("an action name")?;
    if Action::new(&action).is_err() {
        return Err(Diagnostic::at(aspan, format!("invalid action `{action}`")));
    }
    cur.expect("->")?;
    let mut targets = Vec::new();
    loop {
        cur.skip_ws();
        let (pspan, p) = cur.prob()?;
        cur.skip_ws();
        let (_, tgt) = cur.ident("a target process")?;
        targets.push((pspan, p, tgt));
        cur.skip_ws();
        match cur.peek() {
            None => break,
            Some(',') => {
                cur.bump();
            }
            Some(_) => return Err(cur.unexpected("`,` or end of line")),
        }
    }
    Ok(Line {
        src,
        body: Some((action, targets)),
    })
}

/// Parses and validates a system, returning it with any warnings.
pub fn parse_pts_with_warnings(text: &str) -> Result<(Pts, Vec<Diagnostic>), ParseErrors> {
    let mut errors = Vec::new();
    let mut builder = PtsBuilder::new();
    let mut line_lengths = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim_end();
        line_lengths.push(content.chars().count());
        if content.trim().is_empty() {
            continue;
        }
        match parse_line(content, i + 1) {
            Err(d) => errors.push(d),
            Ok(Line { src, body }) => {
                let p = builder.process(&src.1);
                if let Some((action, targets)) = body {
                    let action = Action::new(&action).expect("checked while parsing");
                    let targets = targets
                        .into_iter()
                        .map(|(_, w, t)| (builder.process(&t), w))
                        .collect();
                    builder.push(p, action, targets, Some(i + 1));
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(ParseErrors(errors));
    }
    let located = |issue: crate::pts::Issue| match issue.line {
        Some(line) => Diagnostic::at(
            SourceSpan {
                line,
                column: 1,
                length: line_lengths[line - 1].max(1),
            },
            issue.message,
        ),
        None => Diagnostic {
            span: None,
            message: issue.to_string(),
        },
    };
    match builder.build() {
        Ok((pts, warnings)) => Ok((pts, warnings.into_iter().map(located).collect())),
        Err(report) => Err(ParseErrors(
            report.errors.into_iter().map(located).collect(),
        )),
    }
}

pub fn parse_pts(text: &str) -> Result<Pts, ParseErrors> {
    parse_pts_with_warnings(text).map(|(pts, _)| pts)
}

fn parse_trace_formula(cur: &mut Cursor) -> Result<TraceFormula, Diagnostic> {
    let mut actions = Vec::new();
    loop {
        cur.skip_ws();
        match cur.peek() {
            Some('T') => {
                cur.bump();
                return Ok(TraceFormula(actions));
            }
            Some('<') => {
                cur.bump();
                cur.skip_ws();
                let (span, a) = cur.ident("an action name")?;
                let a = Action::new(&a)
                    .map_err(|_| Diagnostic::at(span, format!("invalid action `{a}`")))?;
                actions.push(a);
                cur.skip_ws();
                cur.expect(">")?;
            }
            _ => return Err(cur.unexpected("`<` or `T`")),
        }
    }
}

/// Parses a formula. Repeated trace formulae are merged by summing their
/// weights; each merge produces a warning.
pub fn parse_formula_with_warnings(
    text: &str,
) -> Result<(TraceDistFormula, Vec<Diagnostic>), ParseErrors> {
    let mut cur = Cursor::new(text, 1);
    let mut terms = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = BTreeSet::new();
    loop {
        cur.skip_ws();
        let (span, w) = cur.prob().map_err(|d| ParseErrors(vec![d]))?;
        if !w.is_positive() || w > Rational::one() {
            return Err(ParseErrors(vec![Diagnostic::at(
                span,
                format!("weight {w} is outside (0, 1]"),
            )]));
        }
        let phi = parse_trace_formula(&mut cur).map_err(|d| ParseErrors(vec![d]))?;
        if !seen.insert(phi.clone()) {
            warnings.push(Diagnostic::at(
                span,
                format!("repeated trace formula {phi}; weights merged"),
            ));
        }
        terms.push((phi, w));
        cur.skip_ws();
        match cur.peek() {
            None => break,
            Some('⊕') => {
                cur.bump();
            }
            Some(_) => cur.expect("(+)").map_err(|d| ParseErrors(vec![d]))?,
        }
    }
    match TraceDistFormula::new(terms) {
        Ok(f) => Ok((f, warnings)),
        Err(Error::NotADistribution { sum }) => Err(ParseErrors(vec![Diagnostic {
            span: None,
            message: format!("weights sum to {sum}, expected 1"),
        }])),
        Err(e) => Err(ParseErrors(vec![Diagnostic {
            span: None,
            message: e.to_string(),
        }])),
    }
}

pub fn parse_formula(text: &str) -> Result<TraceDistFormula, ParseErrors> {
    parse_formula_with_warnings(text).map(|(f, _)| f)
}

/// Canonical text: processes sorted by name, transitions in their original
/// order, targets sorted by name, weights as reduced fractions.
pub fn print_pts(pts: &Pts) -> String {
    let mut by_name: BTreeMap<&str, _> = BTreeMap::new();
    for p in pts.processes() {
        by_name.insert(pts.name(p), p);
    }
    let referenced: BTreeSet<_> = pts
        .processes()
        .flat_map(|p| pts.transitions(p).iter())
        .flat_map(|t| t.target.support())
        .collect();
    let mut out = String::new();
    for (name, p) in by_name {
        let ts = pts.transitions(p);
        if ts.is_empty() && !referenced.contains(&p) {
            out.push_str(name);
            out.push('\n');
        }
        for t in ts {
            let mut targets: Vec<_> = t
                .target
                .weights()
                .iter()
                .map(|(q, w)| (pts.name(*q), w))
                .collect();
            targets.sort();
            let targets: Vec<String> = targets.iter().map(|(q, w)| format!("{w} {q}")).collect();
            out.push_str(&format!("{name} -{}-> {}\n", t.action, targets.join(", ")));
        }
    }
    out
}

pub fn print_formula(f: &TraceDistFormula) -> String {
    f.to_string()
}
