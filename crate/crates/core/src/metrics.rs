//! Strong and weak trace metrics between processes, and the two trace
//! equivalences checked directly by matching resolutions.

use std::collections::{BTreeMap, BTreeSet};

use num::Zero;

use crate::error::Result;
use crate::pts::{ProcessId, Pts, Rational};
use crate::resolution::{enumerate_resolutions, Resolution, ResolutionLimit};
use crate::traces::{
    max_computations, pr_compatible, pr_weak_compatible, tau_erase, trace_distribution,
    weak_trace_distribution, Trace, TraceDistribution,
};
use crate::transport::{hausdorff_with_witness, total_variation_on_classes, GroundMetric};

/// Resolution counts before and after merging resolutions with the same
/// (weak) trace distribution.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DedupStats {
    pub before: usize,
    pub after: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MetricResult {
    pub value: Rational,
    /// A resolution of each process realizing the Hausdorff value.
    pub witness: Option<(Resolution, Resolution)>,
    pub dedup: (DedupStats, DedupStats),
}

/// Kantorovich distance between trace distributions under the discrete metric.
pub fn resolution_distance(pts: &Pts, r1: &Resolution, r2: &Resolution) -> Rational {
    total_variation_on_classes(
        &trace_distribution(pts, r1).0,
        &trace_distribution(pts, r2).0,
        &GroundMetric::Discrete,
    )
}

/// Kantorovich distance between trace distributions under the ground metric
/// that identifies τ-equivalent traces.
pub fn weak_resolution_distance(pts: &Pts, r1: &Resolution, r2: &Resolution) -> Rational {
    let erase: &dyn Fn(&Trace) -> Trace = &tau_erase;
    total_variation_on_classes(
        &trace_distribution(pts, r1).0,
        &trace_distribution(pts, r2).0,
        &GroundMetric::DiscreteQuotient(erase),
    )
}

fn distribution_of(pts: &Pts, r: &Resolution, weak: bool) -> TraceDistribution {
    if weak {
        weak_trace_distribution(pts, r)
    } else {
        trace_distribution(pts, r)
    }
}

/// Distinct (weak) trace distributions of `s`, each with the first
/// resolution in canonical order that induces it.
pub fn distinct_distributions(
    pts: &Pts,
    s: ProcessId,
    weak: bool,
    limit: ResolutionLimit,
) -> Result<(Vec<(TraceDistribution, Resolution)>, DedupStats)> {
    let all = enumerate_resolutions(pts, s, limit)?;
    let before = all.len();
    let mut seen: BTreeMap<TraceDistribution, Resolution> = BTreeMap::new();
    for r in all {
        let td = distribution_of(pts, &r, weak);
        seen.entry(td).or_insert(r);
    }
    let out: Vec<_> = seen.into_iter().collect();
    let after = out.len();
    Ok((out, DedupStats { before, after }))
}

/// Hausdorff lifting of the (weak) resolution distance, computed over
/// distinct trace distributions.
pub fn trace_metric(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    weak: bool,
    limit: ResolutionLimit,
) -> Result<MetricResult> {
    let (left, ls) = distinct_distributions(pts, s, weak, limit)?;
    let (right, rs) = distinct_distributions(pts, t, weak, limit)?;
    let a: Vec<&TraceDistribution> = left.iter().map(|(d, _)| d).collect();
    let b: Vec<&TraceDistribution> = right.iter().map(|(d, _)| d).collect();
    let h = hausdorff_with_witness(&a, &b, |x, y| {
        total_variation_on_classes(&x.0, &y.0, &GroundMetric::Discrete)
    });
    Ok(MetricResult {
        value: h.value,
        witness: h
            .witness
            .map(|(i, j)| (left[i].1.clone(), right[j].1.clone())),
        dedup: (ls, rs),
    })
}

pub fn strong_trace_metric(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    limit: ResolutionLimit,
) -> Result<MetricResult> {
    trace_metric(pts, s, t, false, limit)
}

pub fn weak_trace_metric(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    limit: ResolutionLimit,
) -> Result<MetricResult> {
    trace_metric(pts, s, t, true, limit)
}

/// The same Hausdorff value evaluated over every resolution pair, with no
/// merging of resolutions.
pub fn trace_metric_over_all_resolutions(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    weak: bool,
    limit: ResolutionLimit,
) -> Result<Rational> {
    let a = enumerate_resolutions(pts, s, limit)?;
    let b = enumerate_resolutions(pts, t, limit)?;
    let d = |x: &Resolution, y: &Resolution| {
        if weak {
            weak_resolution_distance(pts, x, y)
        } else {
            resolution_distance(pts, x, y)
        }
    };
    Ok(hausdorff_with_witness(&a, &b, d).value)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EquivalenceResult {
    pub equivalent: bool,
    /// When not equivalent, a resolution (of the process on `Side`) that no
    /// resolution of the other process matches.
    pub distinguishing: Option<(Side, Resolution)>,
}

/// Every trace with nonzero `pr_compatible`, with that probability. Two
/// resolutions agree on all traces iff their profiles are equal.
pub fn strong_profile(pts: &Pts, r: &Resolution) -> BTreeMap<Trace, Rational> {
    let traces: BTreeSet<Trace> = max_computations(pts, r)
        .iter()
        .flat_map(|c| c.trace().prefixes().collect::<Vec<_>>())
        .collect();
    traces
        .into_iter()
        .map(|alpha| {
            let p = pr_compatible(pts, r, &alpha);
            (alpha, p)
        })
        .filter(|(_, p)| !p.is_zero())
        .collect()
}

/// Weak analogue of [`strong_profile`] over τ-free traces.
pub fn weak_profile(pts: &Pts, r: &Resolution) -> BTreeMap<Trace, Rational> {
    let traces: BTreeSet<Trace> = max_computations(pts, r)
        .iter()
        .flat_map(|c| tau_erase(&c.trace()).prefixes().collect::<Vec<_>>())
        .collect();
    traces
        .into_iter()
        .map(|alpha| {
            let p = pr_weak_compatible(pts, r, &alpha);
            (alpha, p)
        })
        .filter(|(_, p)| !p.is_zero())
        .collect()
}

fn equivalent_by(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    limit: ResolutionLimit,
    profile: fn(&Pts, &Resolution) -> BTreeMap<Trace, Rational>,
) -> Result<EquivalenceResult> {
    let left = enumerate_resolutions(pts, s, limit)?;
    let right = enumerate_resolutions(pts, t, limit)?;
    let lp: Vec<_> = left.iter().map(|r| profile(pts, r)).collect();
    let rp: Vec<_> = right.iter().map(|r| profile(pts, r)).collect();
    let lset: BTreeSet<_> = lp.iter().collect();
    let rset: BTreeSet<_> = rp.iter().collect();
    let distinguishing = lp
        .iter()
        .position(|p| !rset.contains(p))
        .map(|i| (Side::Left, left[i].clone()))
        .or_else(|| {
            rp.iter()
                .position(|p| !lset.contains(p))
                .map(|j| (Side::Right, right[j].clone()))
        });
    Ok(EquivalenceResult {
        equivalent: distinguishing.is_none(),
        distinguishing,
    })
}

/// Each resolution of either process is matched by a resolution of the
/// other assigning the same probability to every trace.
pub fn strong_trace_equivalent(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    limit: ResolutionLimit,
) -> Result<EquivalenceResult> {
    equivalent_by(pts, s, t, limit, strong_profile)
}

pub fn weak_trace_equivalent(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    limit: ResolutionLimit,
) -> Result<EquivalenceResult> {
    equivalent_by(pts, s, t, limit, weak_profile)
}
