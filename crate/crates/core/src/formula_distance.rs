//! Distances between formulae, the logical distance between processes, and
//! the real-valued semantics `val(ψ, s) = 1 - d(ψ, L(s))`.
//!
//! [`crosscheck`] evaluates the trace metrics next to their logical
//! characterizations; on a correct implementation they coincide exactly.

use std::fmt;

use num::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::logic::{
    random_formula, satisfied_set, weak_satisfied_set, TraceDistFormula, TraceFormula,
};
use crate::metrics::{strong_trace_metric, weak_trace_metric};
use crate::pts::{ProcessId, Pts, Rational};
use crate::resolution::{Resolution, ResolutionLimit};
use crate::transport::{hausdorff_with_witness, total_variation_on_classes, GroundMetric};

/// Discrete distance on trace formulae; the weak variant compares
/// τ-erasures.
pub fn trace_formula_distance(x: &TraceFormula, y: &TraceFormula, weak: bool) -> Rational {
    let same = if weak {
        x.erase_tau() == y.erase_tau()
    } else {
        x == y
    };
    if same {
        Rational::zero()
    } else {
        Rational::one()
    }
}

/// Kantorovich lifting of [`trace_formula_distance`].
pub fn dist_formula_distance(p: &TraceDistFormula, q: &TraceDistFormula, weak: bool) -> Rational {
    let erase: &dyn Fn(&TraceFormula) -> TraceFormula = &TraceFormula::erase_tau;
    let ground = if weak {
        GroundMetric::DiscreteQuotient(erase)
    } else {
        GroundMetric::Discrete
    };
    total_variation_on_classes(p.weights(), q.weights(), &ground)
}

fn formula_set(
    pts: &Pts,
    s: ProcessId,
    weak: bool,
    limit: ResolutionLimit,
) -> Result<Vec<TraceDistFormula>> {
    if weak {
        weak_satisfied_set(pts, s, limit)
    } else {
        satisfied_set(pts, s, limit)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LogicalDistance {
    pub value: Rational,
    /// Formulae realizing the Hausdorff value, one satisfied by each process.
    pub witness: Option<(TraceDistFormula, TraceDistFormula)>,
}

/// Hausdorff distance between the formulae satisfied by `s` and by `t`.
pub fn logical_distance(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    weak: bool,
    limit: ResolutionLimit,
) -> Result<LogicalDistance> {
    let ls = formula_set(pts, s, weak, limit)?;
    let lt = formula_set(pts, t, weak, limit)?;
    let h = hausdorff_with_witness(&ls, &lt, |x, y| dist_formula_distance(x, y, weak));
    Ok(LogicalDistance {
        value: h.value,
        witness: h.witness.map(|(i, j)| (ls[i].clone(), lt[j].clone())),
    })
}

/// Minimum distance from `psi` to a member of `set`.
pub fn distance_to_set(
    psi: &TraceDistFormula,
    set: &[TraceDistFormula],
    weak: bool,
) -> Result<Rational> {
    set.iter()
        .map(|phi| dist_formula_distance(psi, phi, weak))
        .min()
        .ok_or(Error::EmptyFormulaSet)
}

/// `val(ψ, s)`: one minus the distance from `psi` to the formulae `s`
/// satisfies.
pub fn real_value(
    pts: &Pts,
    s: ProcessId,
    psi: &TraceDistFormula,
    weak: bool,
    limit: ResolutionLimit,
) -> Result<Rational> {
    let set = formula_set(pts, s, weak, limit)?;
    Ok(Rational::one() - distance_to_set(psi, &set, weak)?)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SupValDistance {
    pub value: Rational,
    /// A formula attaining the maximum.
    pub witness: TraceDistFormula,
}

/// `max |val(ψ, s) - val(ψ, t)|` over `ψ ∈ L(s) ∪ L(t)`. Both directed
/// Hausdorff terms are attained on this set, so the maximum is the
/// supremum over all formulae.
pub fn sup_val_distance(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    weak: bool,
    limit: ResolutionLimit,
) -> Result<SupValDistance> {
    let ls = formula_set(pts, s, weak, limit)?;
    let lt = formula_set(pts, t, weak, limit)?;
    let mut best: Option<SupValDistance> = None;
    for psi in ls.iter().chain(lt.iter()) {
        let gap = (distance_to_set(psi, &ls, weak)? - distance_to_set(psi, &lt, weak)?).abs();
        if best.as_ref().is_none_or(|b| gap > b.value) {
            best = Some(SupValDistance {
                value: gap,
                witness: psi.clone(),
            });
        }
    }
    Ok(best.expect("satisfied sets always contain 1 T"))
}

/// All characterizations of the two trace metrics between `s` and `t`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CrossCheckReport {
    pub strong_metric: Rational,
    pub logical_distance: Rational,
    pub sup_val_distance: Rational,
    pub weak_metric: Rational,
    pub weak_logical_distance: Rational,
    /// Weak analogue of `sup_val_distance`. Reported for comparison only and
    /// not part of `all_equal`.
    pub weak_sup_val_distance: Rational,
    /// `strong_metric = logical_distance = sup_val_distance` and
    /// `weak_metric = weak_logical_distance`.
    pub all_equal: bool,
    /// One line per disagreement, with witnesses.
    pub mismatches: Vec<String>,
}

fn describe_resolutions(pts: &Pts, w: &Option<(Resolution, Resolution)>) -> String {
    match w {
        Some((a, b)) => format!("{} vs {}", a.display(pts), b.display(pts)),
        None => "no witness".to_string(),
    }
}

fn describe_formulae(w: &Option<(TraceDistFormula, TraceDistFormula)>) -> String {
    match w {
        Some((a, b)) => format!("{a} vs {b}"),
        None => "no witness".to_string(),
    }
}

pub fn crosscheck(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    limit: ResolutionLimit,
) -> Result<CrossCheckReport> {
    let strong = strong_trace_metric(pts, s, t, limit)?;
    let weak = weak_trace_metric(pts, s, t, limit)?;
    let logical = logical_distance(pts, s, t, false, limit)?;
    let weak_logical = logical_distance(pts, s, t, true, limit)?;
    let sup_val = sup_val_distance(pts, s, t, false, limit)?;
    let weak_sup_val = sup_val_distance(pts, s, t, true, limit)?;

    let mut mismatches = Vec::new();
    if strong.value != logical.value {
        mismatches.push(format!(
            "strong metric {} ({}) differs from logical distance {} ({})",
            strong.value,
            describe_resolutions(pts, &strong.witness),
            logical.value,
            describe_formulae(&logical.witness),
        ));
    }
    if strong.value != sup_val.value {
        mismatches.push(format!(
            "strong metric {} ({}) differs from sup-val distance {} (at {})",
            strong.value,
            describe_resolutions(pts, &strong.witness),
            sup_val.value,
            sup_val.witness,
        ));
    }
    if weak.value != weak_logical.value {
        mismatches.push(format!(
            "weak metric {} ({}) differs from weak logical distance {} ({})",
            weak.value,
            describe_resolutions(pts, &weak.witness),
            weak_logical.value,
            describe_formulae(&weak_logical.witness),
        ));
    }
    Ok(CrossCheckReport {
        strong_metric: strong.value,
        logical_distance: logical.value,
        sup_val_distance: sup_val.value,
        weak_metric: weak.value,
        weak_logical_distance: weak_logical.value,
        weak_sup_val_distance: weak_sup_val.value,
        all_equal: mismatches.is_empty(),
        mismatches,
    })
}

impl fmt::Display for CrossCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "strong metric           {}", self.strong_metric)?;
        writeln!(f, "logical distance        {}", self.logical_distance)?;
        writeln!(f, "sup-val distance        {}", self.sup_val_distance)?;
        writeln!(f, "weak metric             {}", self.weak_metric)?;
        writeln!(f, "weak logical distance   {}", self.weak_logical_distance)?;
        writeln!(
            f,
            "weak sup-val distance   {} (derived)",
            self.weak_sup_val_distance
        )?;
        write!(f, "all equal               {}", self.all_equal)?;
        for m in &self.mismatches {
            write!(f, "\nmismatch: {m}")?;
        }
        Ok(())
    }
}

/// Outcome of sampling formulae outside the satisfied sets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ValSample {
    pub samples: usize,
    pub max_gap: Rational,
    pub worst: Option<TraceDistFormula>,
    pub metric: Rational,
}

impl ValSample {
    /// The sampled gaps never exceed the strong trace metric.
    pub fn holds(&self) -> bool {
        self.max_gap <= self.metric
    }
}

/// `lambda * p + (1 - lambda) * q`, merging shared trace formulae.
fn mix(p: &TraceDistFormula, q: &TraceDistFormula, lambda: Rational) -> TraceDistFormula {
    let rest = Rational::one() - &lambda;
    let terms = p
        .weights()
        .iter()
        .map(|(phi, w)| (phi.clone(), w * &lambda))
        .chain(q.weights().iter().map(|(phi, w)| (phi.clone(), w * &rest)));
    TraceDistFormula::new(terms).expect("convex combination of distributions")
}

/// Draws `samples` formulae, half uniformly over the system's actions and
/// half as perturbations of satisfied formulae, and records the largest
/// `|val(ψ, s) - val(ψ, t)|`.
pub fn sample_val_bound<R: Rng + ?Sized>(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    samples: usize,
    rng: &mut R,
    limit: ResolutionLimit,
) -> Result<ValSample> {
    let ls = satisfied_set(pts, s, limit)?;
    let lt = satisfied_set(pts, t, limit)?;
    let metric = strong_trace_metric(pts, s, t, limit)?.value;
    let actions: Vec<_> = pts.actions().into_iter().collect();
    let depth = pts.depth(s)?.max(pts.depth(t)?) + 1;
    let mut max_gap = Rational::zero();
    let mut worst = None;
    for _ in 0..samples {
        let fresh = random_formula(rng, &actions, depth, 4);
        let psi = if rng.gen_bool(0.5) {
            let base = if rng.gen_bool(0.5) { &ls } else { &lt };
            let base = &base[rng.gen_range(0..base.len())];
            mix(
                base,
                &fresh,
                Rational::new(rng.gen_range(1..4).into(), 4.into()),
            )
        } else {
            fresh
        };
        let gap = (distance_to_set(&psi, &ls, false)? - distance_to_set(&psi, &lt, false)?).abs();
        if worst.is_none() || gap > max_gap {
            max_gap = gap;
            worst = Some(psi);
        }
    }
    Ok(ValSample {
        samples,
        max_gap,
        worst,
        metric,
    })
}
