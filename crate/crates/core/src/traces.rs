//! Computations of a resolution, their probabilities, and the strong and
//! weak trace distributions they induce.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Zero};

use crate::pts::{Action, Pts, Rational};
use crate::resolution::{Choice, ResTree, Resolution, UnfoldNode};

/// A finite sequence of actions; the empty trace is ε.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Trace(pub Vec<Action>);

impl Trace {
    pub fn empty() -> Self {
        Trace(Vec::new())
    }

    /// Parses `a.b.c` (or `ε` / empty string) into a trace.
    pub fn parse(s: &str) -> crate::error::Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "ε" || s == "eps" {
            return Ok(Trace::empty());
        }
        s.split('.')
            .map(|a| Action::new(a.trim()))
            .collect::<crate::error::Result<_>>()
            .map(Trace)
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Trace) -> bool {
        other.0.starts_with(&self.0)
    }

    /// All prefixes, ε included, shortest first.
    pub fn prefixes(&self) -> impl Iterator<Item = Trace> + '_ {
        (0..=self.0.len()).map(|n| Trace(self.0[..n].to_vec()))
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Removes every τ; two traces are weakly equivalent iff their erasures agree.
pub fn tau_erase(alpha: &Trace) -> Trace {
    Trace(alpha.0.iter().filter(|a| !a.is_tau()).cloned().collect())
}

pub fn traces_equivalent(alpha: &Trace, beta: &Trace) -> bool {
    tau_erase(alpha) == tau_erase(beta)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Step {
    pub from: UnfoldNode,
    pub action: Action,
    pub probability: Rational,
    pub to: UnfoldNode,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Computation {
    pub start: UnfoldNode,
    pub steps: Vec<Step>,
}

impl Computation {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn probability(&self) -> Rational {
        self.steps
            .iter()
            .fold(Rational::one(), |acc, s| acc * &s.probability)
    }

    pub fn trace(&self) -> Trace {
        Trace(self.steps.iter().map(|s| s.action.clone()).collect())
    }

    pub fn is_prefix_of(&self, other: &Computation) -> bool {
        self.start == other.start && other.steps.starts_with(&self.steps)
    }
}

/// Finite distribution over traces.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TraceDistribution(pub BTreeMap<Trace, Rational>);

impl TraceDistribution {
    pub fn dirac(alpha: Trace) -> Self {
        TraceDistribution(BTreeMap::from([(alpha, Rational::one())]))
    }

    pub fn get(&self, alpha: &Trace) -> Rational {
        self.0.get(alpha).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.0.values().fold(Rational::zero(), |acc, w| acc + w)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Trace, &Rational)> {
        self.0.iter()
    }

    /// Image under `f`, summing weights that collide.
    pub fn pushforward(&self, f: impl Fn(&Trace) -> Trace) -> Self {
        let mut out: BTreeMap<Trace, Rational> = BTreeMap::new();
        for (alpha, w) in &self.0 {
            *out.entry(f(alpha)).or_insert_with(Rational::zero) += w;
        }
        TraceDistribution(out)
    }
}

impl fmt::Display for TraceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (alpha, w)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{alpha}: {w}")?;
        }
        f.write_str("}")
    }
}

/// Visits every maximal computation as (trace, probability) without
/// materializing unfolding nodes.
fn for_each_maximal(pts: &Pts, r: &Resolution, mut f: impl FnMut(&[Action], &Rational)) {
    fn walk(
        pts: &Pts,
        p: crate::pts::ProcessId,
        tree: &ResTree,
        trace: &mut Vec<Action>,
        prob: &Rational,
        f: &mut dyn FnMut(&[Action], &Rational),
    ) {
        match tree.choice {
            Choice::Halt => f(trace, prob),
            Choice::Take(k) => {
                let t = &pts.transitions(p)[k];
                trace.push(t.action.clone());
                for ((q, w), (_, sub)) in t.target.weights().iter().zip(&tree.children) {
                    walk(pts, *q, sub, trace, &(prob * w), f);
                }
                trace.pop();
            }
        }
    }
    walk(
        pts,
        r.root,
        &r.tree,
        &mut Vec::new(),
        &Rational::one(),
        &mut f,
    );
}

/// All computations from the root of `r`, maximal or not, in depth-first
/// order (a computation precedes its extensions).
pub fn computations(pts: &Pts, r: &Resolution) -> Vec<Computation> {
    let mut out = Vec::new();
    collect(pts, r, false, &mut out);
    out
}

/// The maximal computations of `r` in canonical (choice path) order.
pub fn max_computations(pts: &Pts, r: &Resolution) -> Vec<Computation> {
    let mut out = Vec::new();
    collect(pts, r, true, &mut out);
    out
}

fn collect(pts: &Pts, r: &Resolution, only_maximal: bool, out: &mut Vec<Computation>) {
    fn walk(
        pts: &Pts,
        node: UnfoldNode,
        tree: &ResTree,
        steps: &mut Vec<Step>,
        start: &UnfoldNode,
        only_maximal: bool,
        out: &mut Vec<Computation>,
    ) {
        let maximal = tree.choice == Choice::Halt;
        if maximal || !only_maximal {
            out.push(Computation {
                start: start.clone(),
                steps: steps.clone(),
            });
        }
        if let Choice::Take(k) = tree.choice {
            let t = &pts.transitions(node.process)[k];
            for ((q, w), (_, sub)) in t.target.weights().iter().zip(&tree.children) {
                let next = node.child(k, *q);
                steps.push(Step {
                    from: node.clone(),
                    action: t.action.clone(),
                    probability: w.clone(),
                    to: next.clone(),
                });
                walk(pts, next, sub, steps, start, only_maximal, out);
                steps.pop();
            }
        }
    }
    let start = UnfoldNode::root(r.root);
    walk(
        pts,
        start.clone(),
        &r.tree,
        &mut Vec::new(),
        &start,
        only_maximal,
        out,
    );
}

/// Probability of all computations (maximal or not) compatible with `alpha`.
pub fn pr_compatible(pts: &Pts, r: &Resolution, alpha: &Trace) -> Rational {
    fn go(pts: &Pts, p: crate::pts::ProcessId, tree: &ResTree, alpha: &[Action]) -> Rational {
        let Some((first, rest)) = alpha.split_first() else {
            return Rational::one();
        };
        match tree.choice {
            Choice::Take(k) if &pts.transitions(p)[k].action == first => {
                let t = &pts.transitions(p)[k];
                t.target
                    .weights()
                    .iter()
                    .zip(&tree.children)
                    .map(|((q, w), (_, sub))| w * go(pts, *q, sub, rest))
                    .fold(Rational::zero(), |acc, x| acc + x)
            }
            _ => Rational::zero(),
        }
    }
    go(pts, r.root, &r.tree, &alpha.0)
}

/// α ↦ probability of the maximal computations with trace α.
pub fn trace_distribution(pts: &Pts, r: &Resolution) -> TraceDistribution {
    let mut out: BTreeMap<Trace, Rational> = BTreeMap::new();
    for_each_maximal(pts, r, |trace, prob| {
        *out.entry(Trace(trace.to_vec()))
            .or_insert_with(Rational::zero) += prob;
    });
    TraceDistribution(out)
}

/// The trace distribution pushed through τ-erasure: a distribution over
/// τ-free representatives.
pub fn weak_trace_distribution(pts: &Pts, r: &Resolution) -> TraceDistribution {
    trace_distribution(pts, r).pushforward(tau_erase)
}

/// Probability of the computations whose trace is weakly equivalent to
/// `alpha` and which are not a proper prefix of another such computation.
pub fn pr_weak_compatible(pts: &Pts, r: &Resolution, alpha: &Trace) -> Rational {
    // Returns (mass of the prefix-maximal members in this subtree, whether
    // the subtree contains a member at all).
    fn go(
        pts: &Pts,
        p: crate::pts::ProcessId,
        tree: &ResTree,
        seen: usize,
        target: &[Action],
        prob: &Rational,
    ) -> (Rational, bool) {
        let mut below = Rational::zero();
        let mut any_below = false;
        if let Choice::Take(k) = tree.choice {
            let t = &pts.transitions(p)[k];
            let next = if t.action.is_tau() {
                Some(seen)
            } else if target.get(seen) == Some(&t.action) {
                Some(seen + 1)
            } else {
                None
            };
            if let Some(next) = next {
                for ((q, w), (_, sub)) in t.target.weights().iter().zip(&tree.children) {
                    let (mass, any) = go(pts, *q, sub, next, target, &(prob * w));
                    below += mass;
                    any_below |= any;
                }
            }
        }
        if any_below {
            (below, true)
        } else if seen == target.len() {
            (prob.clone(), true)
        } else {
            (Rational::zero(), false)
        }
    }
    let target = tau_erase(alpha);
    go(pts, r.root, &r.tree, 0, &target.0, &Rational::one()).0
}
