//! Shared fixtures, random system generation, and property checks used by
//! the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use num::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use tracemet::formula_distance::{
    dist_formula_distance, logical_distance, sample_val_bound, sup_val_distance,
};
use tracemet::logic::{random_formula, SemanticChecker};
use tracemet::metrics::{
    resolution_distance, strong_profile, strong_trace_equivalent, trace_metric,
    trace_metric_over_all_resolutions, weak_profile, weak_resolution_distance,
    weak_trace_equivalent,
};
use tracemet::traces::max_computations;
use tracemet::{
    count_resolutions, enumerate_resolutions, mimicking_formula, parse_pts, pr_compatible,
    pr_weak_compatible, satisfied_set, tau_erase, trace_distribution, weak_mimicking_formula,
    weak_satisfied_set, Action, Choice, ProcessId, Pts, PtsBuilder, Rational, Resolution,
    ResolutionLimit, Trace, TraceDistFormula,
};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn fixture(name: &str) -> Pts {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_pts(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn limit() -> ResolutionLimit {
    ResolutionLimit::default()
}

/// A generated system with two root processes `s` and `t` and a process
/// `u` that performs a single τ and then behaves as `s`. `has_tau` ignores
/// the step of `u`.
pub struct Sample {
    pub pts: Pts,
    pub s: ProcessId,
    pub t: ProcessId,
    pub u: ProcessId,
    pub has_tau: bool,
}

const WEIGHTS: [(i64, i64); 5] = [(1, 2), (1, 3), (2, 3), (1, 4), (3, 4)];

/// Random acyclic system: at most five generated states on levels 0..=3
/// (so depth at most 3), at most three transitions per state, supports of
/// size one or two, actions from `a, b, c` and optionally `tau`. With
/// probability 1/4, `t` is a reordering of `s` and hence equivalent to it;
/// with probability 1/2 it is a reordering with one local change.
/// Systems with more than `max_resolutions` resolutions at a root are
/// redrawn.
pub fn random_sample<R: Rng>(rng: &mut R, with_tau: bool, max_resolutions: usize) -> Sample {
    let mut actions = vec!["a", "b", "c"];
    if with_tau {
        actions.push("tau");
    }
    loop {
        let n = rng.gen_range(3..=5);
        let mut levels: Vec<usize> = vec![0, 0];
        levels.extend((2..n).map(|_| rng.gen_range(1..=3)));
        let names: Vec<String> = (0..n)
            .map(|i| match i {
                0 => "s".to_string(),
                1 => "t".to_string(),
                _ => format!("p{i}"),
            })
            .collect();
        let mut edges: Vec<Edges> = vec![Vec::new(); n];
        for i in 0..n {
            let below: Vec<usize> = (0..n).filter(|&j| levels[j] > levels[i]).collect();
            if below.is_empty() {
                continue;
            }
            for _ in 0..rng.gen_range(0..=3) {
                let action = actions.choose(rng).unwrap().to_string();
                let first = *below.choose(rng).unwrap();
                let targets = match below.iter().filter(|&&j| j != first).collect::<Vec<_>>() {
                    others if !others.is_empty() && rng.gen_bool(0.5) => {
                        let second = **others.choose(rng).unwrap();
                        let (a, b) = *WEIGHTS.choose(rng).unwrap();
                        vec![
                            (names[first].clone(), a, b),
                            (names[second].clone(), b - a, b),
                        ]
                    }
                    _ => vec![(names[first].clone(), 1, 1)],
                };
                edges[i].push((action, targets));
            }
        }
        let mode = rng.gen_range(0..4);
        if mode < 3 {
            let mut copy = edges[0].clone();
            copy.shuffle(rng);
            let below: Vec<String> = (0..n)
                .filter(|&j| levels[j] > 0)
                .map(|j| names[j].clone())
                .collect();
            for _ in 0..mode {
                perturb(rng, &mut copy, &actions, &below);
            }
            edges[1] = copy;
        }
        let mut b = PtsBuilder::new();
        for name in &names {
            b.process(name);
        }
        for (i, es) in edges.iter().enumerate() {
            for (action, targets) in es {
                let targets: Vec<(&str, i64, i64)> = targets
                    .iter()
                    .map(|(q, a, b)| (q.as_str(), *a, *b))
                    .collect();
                b.edge(&names[i], action, &targets);
            }
        }
        b.edge("u", "tau", &[("s", 1, 1)]);
        let pts = b.build().expect("generated systems are valid").0;
        let s = pts.process("s").unwrap();
        let t = pts.process("t").unwrap();
        let u = pts.process("u").unwrap();
        let too_many = [s, t, u]
            .iter()
            .any(|&p| count_resolutions(&pts, p) > max_resolutions.into());
        if too_many {
            continue;
        }
        let has_tau = edges.iter().flatten().any(|(a, _)| a == "tau");
        return Sample {
            pts,
            s,
            t,
            u,
            has_tau,
        };
    }
}

type Edges = Vec<(String, Vec<(String, i64, i64)>)>;

/// Reweights, relabels, retargets, drops or duplicates-with-relabel one
/// transition.
fn perturb<R: Rng>(rng: &mut R, edges: &mut Edges, actions: &[&str], below: &[String]) {
    if edges.is_empty() {
        return;
    }
    let k = rng.gen_range(0..edges.len());
    match rng.gen_range(0..5) {
        4 => {
            let target = below.choose(rng).unwrap().clone();
            let slot = rng.gen_range(0..edges[k].1.len());
            if edges[k].1.iter().all(|(q, _, _)| q != &target) {
                edges[k].1[slot].0 = target;
            }
        }
        0 if edges[k].1.len() == 2 => {
            let (a, b) = *WEIGHTS.choose(rng).unwrap();
            edges[k].1[0].1 = a;
            edges[k].1[0].2 = b;
            edges[k].1[1].1 = b - a;
            edges[k].1[1].2 = b;
        }
        1 => edges[k].0 = actions.choose(rng).unwrap().to_string(),
        2 => {
            edges.remove(k);
        }
        _ => {
            let mut extra = edges[k].clone();
            extra.0 = actions.choose(rng).unwrap().to_string();
            edges.push(extra);
        }
    }
}

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}
#[allow(unused_imports)]
pub(crate) use ensure;

fn all_traces(pts: &Pts, r: &Resolution) -> BTreeSet<Trace> {
    max_computations(pts, r)
        .iter()
        .flat_map(|c| c.trace().prefixes().collect::<Vec<_>>())
        .collect()
}

/// Trace distributions and maximal computations carry total mass one.
pub fn check_mass(pts: &Pts, rs: &[Resolution]) -> Check {
    for r in rs {
        let td = trace_distribution(pts, r);
        ensure!(
            td.total().is_one(),
            "TD of {} sums to {}",
            r.display(pts),
            td.total()
        );
        let mass = max_computations(pts, r)
            .iter()
            .fold(Rational::zero(), |acc, c| acc + c.probability());
        ensure!(
            mass.is_one(),
            "maximal computations of {} carry {mass}",
            r.display(pts)
        );
    }
    Ok(())
}

/// `pr_compatible(r, α)` is the trace distribution mass of the extensions of
/// α; the weak version is the same law for the τ-erased distribution.
pub fn check_prefix_sum(pts: &Pts, rs: &[Resolution], extra: &[Trace]) -> Check {
    for r in rs {
        let td = trace_distribution(pts, r);
        let weak_td = td.pushforward(tau_erase);
        let mut probes = all_traces(pts, r);
        probes.extend(extra.iter().cloned());
        for alpha in &probes {
            let mass = td
                .iter()
                .filter(|(beta, _)| alpha.is_prefix_of(beta))
                .fold(Rational::zero(), |acc, (_, w)| acc + w);
            let direct = pr_compatible(pts, r, alpha);
            ensure!(
                direct == mass,
                "pr_compatible({}, {alpha}) = {direct}, prefix sum {mass}",
                r.display(pts)
            );
            let erased = tau_erase(alpha);
            let weak_mass = weak_td
                .iter()
                .filter(|(beta, _)| erased.is_prefix_of(beta))
                .fold(Rational::zero(), |acc, (_, w)| acc + w);
            let weak_direct = pr_weak_compatible(pts, r, alpha);
            ensure!(
                weak_direct == weak_mass,
                "pr_weak_compatible({}, {alpha}) = {weak_direct}, prefix sum {weak_mass}",
                r.display(pts)
            );
        }
    }
    Ok(())
}

/// Membership in the satisfied set agrees with the direct semantic check,
/// on the set itself and on random formulae.
pub fn check_satisfaction<R: Rng>(pts: &Pts, p: ProcessId, rng: &mut R, probes: usize) -> Check {
    let set = satisfied_set(pts, p, limit()).map_err(|e| e.to_string())?;
    let members: BTreeSet<&TraceDistFormula> = set.iter().collect();
    let checker = SemanticChecker::new(pts, p, limit()).map_err(|e| e.to_string())?;
    for psi in &set {
        ensure!(
            checker.witness(psi).is_some(),
            "{psi} in L({}) but not satisfied",
            pts.name(p)
        );
    }
    let actions: Vec<Action> = pts.actions().into_iter().collect();
    let depth = pts.depth(p).map_err(|e| e.to_string())?;
    for _ in 0..probes {
        let psi = random_formula(rng, &actions, depth + 1, 3);
        let sat = checker.witness(&psi).is_some();
        ensure!(
            sat == members.contains(&psi),
            "{psi}: semantic check {sat}, membership {}",
            members.contains(&psi)
        );
    }
    Ok(())
}

/// Equal mimicking formulae iff equal probability on every trace; the weak
/// analogue with τ-erasure.
pub fn check_mimicking(pts: &Pts, left: &[Resolution], right: &[Resolution]) -> Check {
    let summarize = |r: &Resolution| {
        (
            mimicking_formula(pts, r),
            weak_mimicking_formula(pts, r),
            strong_profile(pts, r),
            weak_profile(pts, r),
        )
    };
    let rhs: Vec<_> = right.iter().map(summarize).collect();
    for x in left {
        let (mx, wx, px, wpx) = summarize(x);
        ensure!(
            mx.erase_tau() == wx,
            "mimicking and weak mimicking formulae of {} are not equivalent",
            x.display(pts)
        );
        for (y, (my, wy, py, wpy)) in right.iter().zip(&rhs) {
            let same = &mx == my;
            let matched = &px == py;
            ensure!(
                same == matched,
                "{} vs {}: formulae equal {same}, probabilities match {matched}",
                x.display(pts),
                y.display(pts)
            );
            let zero = resolution_distance(pts, x, y).is_zero();
            ensure!(
                zero == same,
                "resolution distance kernel differs at {}",
                x.display(pts)
            );

            let weak_same = &wx == wy;
            let weak_matched = &wpx == wpy;
            ensure!(
                weak_same == weak_matched,
                "{} vs {}: weak formulae equal {weak_same}, weak probabilities match {weak_matched}",
                x.display(pts),
                y.display(pts)
            );
            let weak_zero = weak_resolution_distance(pts, x, y).is_zero();
            ensure!(
                weak_zero == weak_same,
                "weak resolution distance kernel differs at {}",
                x.display(pts)
            );
        }
    }
    Ok(())
}

pub struct Quantities {
    pub strong: Rational,
    pub weak: Rational,
}

/// Metric = logical distance (both flavours) = sup-val distance, and the
/// metric agrees with its undeduplicated evaluation.
pub fn check_characterizations(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
) -> Result<Quantities, String> {
    let err = |e: tracemet::Error| e.to_string();
    let strong = trace_metric(pts, s, t, false, limit()).map_err(err)?;
    let weak = trace_metric(pts, s, t, true, limit()).map_err(err)?;
    let logical = logical_distance(pts, s, t, false, limit()).map_err(err)?;
    let weak_logical = logical_distance(pts, s, t, true, limit()).map_err(err)?;
    let sup_val = sup_val_distance(pts, s, t, false, limit()).map_err(err)?;
    ensure!(
        strong.value == logical.value,
        "metric {} vs logical {}",
        strong.value,
        logical.value
    );
    ensure!(
        weak.value == weak_logical.value,
        "weak metric {} vs weak logical {}",
        weak.value,
        weak_logical.value
    );
    ensure!(
        strong.value == sup_val.value,
        "metric {} vs sup-val {}",
        strong.value,
        sup_val.value
    );
    if let Some((a, b)) = &strong.witness {
        ensure!(
            hausdorff_side_attained(pts, s, t, a, b, &strong.value),
            "witness pair does not realize the metric"
        );
    }
    let full = trace_metric_over_all_resolutions(pts, s, t, false, limit()).map_err(err)?;
    ensure!(
        full == strong.value,
        "deduplicated {} vs full {}",
        strong.value,
        full
    );
    Ok(Quantities {
        strong: strong.value,
        weak: weak.value,
    })
}

/// The witness realizes the value as a nearest-point distance.
fn hausdorff_side_attained(
    pts: &Pts,
    s: ProcessId,
    t: ProcessId,
    a: &Resolution,
    b: &Resolution,
    value: &Rational,
) -> bool {
    let d = resolution_distance(pts, a, b);
    let rs = enumerate_resolutions(pts, s, limit()).unwrap();
    let rt = enumerate_resolutions(pts, t, limit()).unwrap();
    let nearest_a = rt
        .iter()
        .map(|y| resolution_distance(pts, a, y))
        .min()
        .unwrap();
    let nearest_b = rs
        .iter()
        .map(|x| resolution_distance(pts, x, b))
        .min()
        .unwrap();
    &d == value && (d == nearest_a || d == nearest_b)
}

/// Zero distance iff equivalent iff equal satisfied sets, strong and weak.
pub fn check_kernels(pts: &Pts, s: ProcessId, t: ProcessId, m: &Quantities) -> Check {
    let err = |e: tracemet::Error| e.to_string();
    let strong_eq = strong_trace_equivalent(pts, s, t, limit()).map_err(err)?;
    let weak_eq = weak_trace_equivalent(pts, s, t, limit()).map_err(err)?;
    let ls = satisfied_set(pts, s, limit()).map_err(err)?;
    let lt = satisfied_set(pts, t, limit()).map_err(err)?;
    ensure!(
        m.strong.is_zero() == strong_eq.equivalent,
        "metric {} but equivalence {}",
        m.strong,
        strong_eq.equivalent
    );
    ensure!(
        strong_eq.equivalent == (ls == lt),
        "equivalence {} but satisfied sets equal {}",
        strong_eq.equivalent,
        ls == lt
    );
    let wls: BTreeSet<_> = weak_satisfied_set(pts, s, limit())
        .map_err(err)?
        .into_iter()
        .map(|f| f.erase_tau())
        .collect();
    let wlt: BTreeSet<_> = weak_satisfied_set(pts, t, limit())
        .map_err(err)?
        .into_iter()
        .map(|f| f.erase_tau())
        .collect();
    ensure!(
        m.weak.is_zero() == weak_eq.equivalent,
        "weak metric {} but weak equivalence {}",
        m.weak,
        weak_eq.equivalent
    );
    ensure!(
        weak_eq.equivalent == (wls == wlt),
        "weak equivalence {} but weak satisfied sets equivalent {}",
        weak_eq.equivalent,
        wls == wlt
    );
    if let Some((_, r)) = &strong_eq.distinguishing {
        let other = if r.root == s { t } else { s };
        let profile = strong_profile(pts, r);
        let rs = enumerate_resolutions(pts, other, limit()).map_err(err)?;
        ensure!(
            rs.iter().all(|x| strong_profile(pts, x) != profile),
            "distinguishing resolution {} is matched",
            r.display(pts)
        );
    }
    Ok(())
}

/// Formula distances between formulae drawn from the satisfied sets.
pub fn formula_triples<R: Rng>(pts: &Pts, rng: &mut R, count: usize) -> Vec<[TraceDistFormula; 3]> {
    let mut pool: Vec<TraceDistFormula> = pts
        .processes()
        .flat_map(|p| satisfied_set(pts, p, limit()).unwrap())
        .collect();
    let actions: Vec<Action> = pts.actions().into_iter().collect();
    pool.extend((0..8).map(|_| random_formula(rng, &actions, 3, 3)));
    (0..count)
        .map(|_| {
            [
                pool.choose(rng).unwrap().clone(),
                pool.choose(rng).unwrap().clone(),
                pool.choose(rng).unwrap().clone(),
            ]
        })
        .collect()
}

/// Symmetry, triangle inequality and zero self-distance for a distance.
pub fn check_pseudometric<T: std::fmt::Display>(
    what: &str,
    [x, y, z]: [&T; 3],
    d: impl Fn(&T, &T) -> Rational,
) -> Check {
    let (xy, yx, yz, xz) = (d(x, y), d(y, x), d(y, z), d(x, z));
    ensure!(d(x, x).is_zero(), "{what}: d({x}, {x}) != 0");
    ensure!(xy == yx, "{what}: asymmetric on {x}, {y}: {xy} vs {yx}");
    ensure!(!xy.is_negative(), "{what}: negative distance");
    ensure!(
        xz <= &xy + &yz,
        "{what}: triangle fails on {x}, {y}, {z}: {xz} > {xy} + {yz}"
    );
    Ok(())
}

/// The discrete formula distance is a metric: zero only on equal formulae.
pub fn check_formula_metric(triple: &[TraceDistFormula; 3]) -> Check {
    let [x, y, z] = triple;
    check_pseudometric("strong formula distance", [x, y, z], |a, b| {
        dist_formula_distance(a, b, false)
    })?;
    check_pseudometric("weak formula distance", [x, y, z], |a, b| {
        dist_formula_distance(a, b, true)
    })?;
    ensure!(
        dist_formula_distance(x, y, false).is_zero() == (x == y),
        "strong formula distance kernel fails on {x}, {y}"
    );
    ensure!(
        dist_formula_distance(x, y, true).is_zero() == (x.erase_tau() == y.erase_tau()),
        "weak formula distance kernel fails on {x}, {y}"
    );
    Ok(())
}

/// Randomly sampled formulae never separate the processes by more than the
/// metric.
pub fn check_val_bound<R: Rng>(pts: &Pts, s: ProcessId, t: ProcessId, rng: &mut R) -> Check {
    let sample = sample_val_bound(pts, s, t, 20, rng, limit()).map_err(|e| e.to_string())?;
    ensure!(
        sample.holds(),
        "sampled gap {} exceeds metric {}",
        sample.max_gap,
        sample.metric
    );
    Ok(())
}

/// Random distribution over `universe` with support of at most `max_support`.
pub fn random_distribution<R: Rng, K: Ord + Clone>(
    rng: &mut R,
    universe: &[K],
    max_support: usize,
) -> BTreeMap<K, Rational> {
    let k = rng.gen_range(1..=max_support.min(universe.len()));
    let support: Vec<&K> = universe.choose_multiple(rng, k).collect();
    let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=12)).collect();
    let total: i64 = raw.iter().sum();
    support
        .into_iter()
        .zip(raw)
        .map(|(x, w)| (x.clone(), q(w, total)))
        .collect()
}

/// Memoryless resolution of `root` choosing, for each listed process, the
/// transition at the given index; every other process halts.
pub fn scheduled(pts: &Pts, root: &str, picks: &[(&str, usize)]) -> Resolution {
    let picks: BTreeMap<ProcessId, usize> = picks
        .iter()
        .map(|(name, k)| (pts.process(name).unwrap(), *k))
        .collect();
    Resolution::from_scheduler(pts, pts.process(root).unwrap(), |node| {
        match picks.get(&node.process) {
            Some(&k) => Choice::Take(k),
            None => Choice::Halt,
        }
    })
    .expect("indices in range")
}

/// Optimal transport by enumerating the vertices of the transportation
/// polytope: every spanning tree of the complete bipartite support graph,
/// solved by peeling leaves, kept when its flows are nonnegative.
pub fn vertex_oracle<K: Ord + Clone>(
    p: &BTreeMap<K, Rational>,
    q: &BTreeMap<K, Rational>,
    cost: impl Fn(&K, &K) -> Rational,
) -> Rational {
    let left: Vec<(&K, &Rational)> = p.iter().collect();
    let right: Vec<(&K, &Rational)> = q.iter().collect();
    let (m, n) = (left.len(), right.len());
    let edges: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut best: Option<Rational> = None;
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != m + n - 1 {
            continue;
        }
        let tree: Vec<(usize, usize)> = (0..edges.len())
            .filter(|e| mask & (1 << e) != 0)
            .map(|e| edges[e])
            .collect();
        let mut parent: Vec<usize> = (0..m + n).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        let acyclic = tree.iter().all(|&(i, j)| {
            let (a, b) = (find(&mut parent, i), find(&mut parent, m + j));
            parent[a] = b;
            a != b
        });
        if !acyclic {
            continue;
        }
        let mut residual: Vec<Rational> = left
            .iter()
            .map(|(_, w)| (*w).clone())
            .chain(right.iter().map(|(_, w)| (*w).clone()))
            .collect();
        let mut remaining = tree.clone();
        let mut total = Rational::zero();
        let mut feasible = true;
        while !remaining.is_empty() {
            let degree = |v: usize, rem: &[(usize, usize)]| {
                rem.iter().filter(|&&(i, j)| i == v || m + j == v).count()
            };
            let leaf = (0..m + n).find(|&v| degree(v, &remaining) == 1).unwrap();
            let pos = remaining
                .iter()
                .position(|&(i, j)| i == leaf || m + j == leaf)
                .unwrap();
            let (i, j) = remaining.remove(pos);
            let other = if i == leaf { m + j } else { i };
            let flow = residual[leaf].clone();
            if flow.is_negative() {
                feasible = false;
                break;
            }
            residual[other] -= &flow;
            residual[leaf] = Rational::zero();
            total += flow * cost(left[i].0, right[j].0);
        }
        if feasible
            && residual.iter().all(Zero::is_zero)
            && best.as_ref().is_none_or(|b| &total < b)
        {
            best = Some(total);
        }
    }
    best.expect("the transportation polytope is nonempty")
}
