//! The trace logics: trace formulae `⟨a₁⟩…⟨aₙ⟩⊤`, probability distributions
//! over them, their boolean semantics on processes, and mimicking formulae.
//!
//! The strong logic and its weak variant share one syntax here: diamonds
//! may carry `tau`, and the weak reading identifies formulae whose diamond
//! sequences agree after erasing τ.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::pts::{Action, ProcessId, Pts, Rational};
use crate::resolution::{enumerate_resolutions, Resolution, ResolutionLimit};
use crate::traces::{
    max_computations, tau_erase, trace_distribution, weak_trace_distribution, Computation, Trace,
    TraceDistribution,
};

/// A sequence of diamonds closed by ⊤. The empty sequence is ⊤ itself.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TraceFormula(pub Vec<Action>);

impl TraceFormula {
    pub fn top() -> Self {
        TraceFormula(Vec::new())
    }

    /// `⟨a⟩phi`
    pub fn diamond(a: Action, phi: &TraceFormula) -> Self {
        let mut v = Vec::with_capacity(phi.0.len() + 1);
        v.push(a);
        v.extend(phi.0.iter().cloned());
        TraceFormula(v)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn erase_tau(&self) -> TraceFormula {
        TraceFormula(self.0.iter().filter(|a| !a.is_tau()).cloned().collect())
    }
}

impl fmt::Display for TraceFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "<{a}>")?;
        }
        f.write_str("T")
    }
}

/// `⊕ rᵢ Φᵢ`: a distribution over pairwise distinct trace formulae.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TraceDistFormula(BTreeMap<TraceFormula, Rational>);

impl TraceDistFormula {
    /// Merges repeated trace formulae by summing their weights, then checks
    /// that every weight lies in (0, 1] and that they sum to 1.
    pub fn new(terms: impl IntoIterator<Item = (TraceFormula, Rational)>) -> Result<Self> {
        let mut map: BTreeMap<TraceFormula, Rational> = BTreeMap::new();
        for (phi, w) in terms {
            if !w.is_positive() || w > Rational::one() {
                return Err(Error::WeightOutOfRange(w));
            }
            *map.entry(phi).or_insert_with(Rational::zero) += w;
        }
        let sum = map.values().fold(Rational::zero(), |acc, w| acc + w);
        if !sum.is_one() {
            return Err(Error::NotADistribution { sum });
        }
        Ok(TraceDistFormula(map))
    }

    /// `1 phi`
    pub fn dirac(phi: TraceFormula) -> Self {
        TraceDistFormula(BTreeMap::from([(phi, Rational::one())]))
    }

    pub fn weights(&self) -> &BTreeMap<TraceFormula, Rational> {
        &self.0
    }

    pub fn get(&self, phi: &TraceFormula) -> Rational {
        self.0.get(phi).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn depth(&self) -> usize {
        self.0.keys().map(TraceFormula::depth).max().unwrap_or(0)
    }

    /// Terms in print order: descending by trace formula.
    pub fn terms(&self) -> impl Iterator<Item = (&TraceFormula, &Rational)> {
        self.0.iter().rev()
    }

    /// The distribution pushed through τ-erasure.
    pub fn erase_tau(&self) -> TraceDistFormula {
        let mut map: BTreeMap<TraceFormula, Rational> = BTreeMap::new();
        for (phi, w) in &self.0 {
            *map.entry(phi.erase_tau()).or_insert_with(Rational::zero) += w;
        }
        TraceDistFormula(map)
    }

    fn from_distribution(td: TraceDistribution) -> Self {
        TraceDistFormula(
            td.0.into_iter()
                .map(|(alpha, w)| (tracing_formula(&alpha), w))
                .collect(),
        )
    }
}

impl fmt::Display for TraceDistFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (phi, w)) in self.terms().enumerate() {
            if i > 0 {
                f.write_str(" (+) ")?;
            }
            write!(f, "{w} {phi}")?;
        }
        Ok(())
    }
}

/// The diamond sequence spelling `alpha`.
pub fn tracing_formula(alpha: &Trace) -> TraceFormula {
    TraceFormula(alpha.0.clone())
}

/// `c ⊨ phi`: ⊤ always holds; `⟨a⟩Φ` holds when the first step is an
/// `a`-step and the rest of the computation satisfies Φ.
pub fn satisfies_trace(c: &Computation, phi: &TraceFormula) -> bool {
    fn go(steps: &[crate::traces::Step], diamonds: &[Action]) -> bool {
        match diamonds.split_first() {
            None => true,
            Some((a, rest)) => match steps.split_first() {
                Some((step, tail)) => &step.action == a && go(tail, rest),
                None => false,
            },
        }
    }
    go(&c.steps, &phi.0)
}

/// `c` satisfies `phi` and has exactly its depth.
pub fn compatible(c: &Computation, phi: &TraceFormula) -> bool {
    c.len() == phi.depth() && satisfies_trace(c, phi)
}

pub fn mimicking_formula(pts: &Pts, r: &Resolution) -> TraceDistFormula {
    TraceDistFormula::from_distribution(trace_distribution(pts, r))
}

/// Mimicking formula over τ-erased representatives.
pub fn weak_mimicking_formula(pts: &Pts, r: &Resolution) -> TraceDistFormula {
    TraceDistFormula::from_distribution(weak_trace_distribution(pts, r))
}

/// Formulae satisfied by `s`: `1⊤` together with the mimicking formulae of
/// all its resolutions, deduplicated and sorted.
pub fn satisfied_set(
    pts: &Pts,
    s: ProcessId,
    limit: ResolutionLimit,
) -> Result<Vec<TraceDistFormula>> {
    let mut set: BTreeSet<TraceDistFormula> = BTreeSet::new();
    set.insert(TraceDistFormula::dirac(TraceFormula::top()));
    for r in enumerate_resolutions(pts, s, limit)? {
        set.insert(mimicking_formula(pts, &r));
    }
    Ok(set.into_iter().collect())
}

/// Weak counterpart of [`satisfied_set`], built from weak mimicking
/// formulae.
pub fn weak_satisfied_set(
    pts: &Pts,
    s: ProcessId,
    limit: ResolutionLimit,
) -> Result<Vec<TraceDistFormula>> {
    let mut set: BTreeSet<TraceDistFormula> = BTreeSet::new();
    set.insert(TraceDistFormula::dirac(TraceFormula::top()));
    for r in enumerate_resolutions(pts, s, limit)? {
        set.insert(weak_mimicking_formula(pts, &r));
    }
    Ok(set.into_iter().collect())
}

/// Direct semantic check of `s ⊨ psi`: searches the resolutions of `s`
/// for one whose maximal computations compatible with each `Φᵢ` carry
/// exactly weight `rᵢ`.
pub struct SemanticChecker {
    resolutions: Vec<(Resolution, Vec<(Computation, Rational)>)>,
}

impl SemanticChecker {
    pub fn new(pts: &Pts, s: ProcessId, limit: ResolutionLimit) -> Result<Self> {
        let resolutions = enumerate_resolutions(pts, s, limit)?
            .into_iter()
            .map(|r| {
                let cs = max_computations(pts, &r)
                    .into_iter()
                    .map(|c| {
                        let p = c.probability();
                        (c, p)
                    })
                    .collect();
                (r, cs)
            })
            .collect();
        Ok(SemanticChecker { resolutions })
    }

    /// First witnessing resolution in canonical order, if any.
    pub fn witness(&self, psi: &TraceDistFormula) -> Option<&Resolution> {
        self.resolutions
            .iter()
            .find(|(_, cs)| {
                psi.weights().iter().all(|(phi, r)| {
                    let mass = cs
                        .iter()
                        .filter(|(c, _)| compatible(c, phi))
                        .fold(Rational::zero(), |acc, (_, p)| acc + p);
                    &mass == r
                })
            })
            .map(|(r, _)| r)
    }
}

pub fn satisfies(
    pts: &Pts,
    s: ProcessId,
    psi: &TraceDistFormula,
    limit: ResolutionLimit,
) -> Result<Option<Resolution>> {
    Ok(SemanticChecker::new(pts, s, limit)?.witness(psi).cloned())
}

/// Weak satisfaction: some resolution of `s` has a weak mimicking formula
/// equivalent to `psi` up to τ-erasure. Returns the first such resolution.
pub fn weak_satisfies(
    pts: &Pts,
    s: ProcessId,
    psi: &TraceDistFormula,
    limit: ResolutionLimit,
) -> Result<Option<Resolution>> {
    let target = psi.erase_tau();
    Ok(enumerate_resolutions(pts, s, limit)?
        .into_iter()
        .find(|r| weak_mimicking_formula(pts, r) == target))
}

pub fn formulas_weak_equivalent(x: &TraceFormula, y: &TraceFormula) -> bool {
    x.erase_tau() == y.erase_tau()
}

pub fn dist_formulas_weak_equivalent(p: &TraceDistFormula, q: &TraceDistFormula) -> bool {
    p.erase_tau() == q.erase_tau()
}

/// Erasure on traces and on trace formulae agree.
pub fn erase_trace_formula(alpha: &Trace) -> TraceFormula {
    tracing_formula(&tau_erase(alpha))
}

/// Draws a formula with up to `max_terms` trace formulae of depth at most
/// `max_depth` over `actions`, with weights on a grid of `1/12`.
pub fn random_formula<R: Rng + ?Sized>(
    rng: &mut R,
    actions: &[Action],
    max_depth: usize,
    max_terms: usize,
) -> TraceDistFormula {
    const GRID: i64 = 12;
    let n_terms = rng.gen_range(1..=max_terms.max(1));
    let mut phis = BTreeSet::new();
    for _ in 0..n_terms {
        let depth = if actions.is_empty() {
            0
        } else {
            rng.gen_range(0..=max_depth)
        };
        let phi = TraceFormula(
            (0..depth)
                .map(|_| actions[rng.gen_range(0..actions.len())].clone())
                .collect(),
        );
        phis.insert(phi);
    }
    let phis: Vec<TraceFormula> = phis.into_iter().collect();
    // split GRID units into phis.len() positive parts
    let k = phis.len() as i64;
    let mut cuts: BTreeSet<i64> = BTreeSet::new();
    while (cuts.len() as i64) < k - 1 {
        cuts.insert(rng.gen_range(1..GRID));
    }
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(GRID);
    let terms = phis
        .into_iter()
        .zip(bounds.windows(2))
        .map(|(phi, w)| (phi, Rational::new((w[1] - w[0]).into(), GRID.into())));
    TraceDistFormula::new(terms).expect("weights sum to one by construction")
}
