//! Kantorovich and Hausdorff liftings over exact rationals.
//!
//! Every ground distance used by the metrics is 0/1-valued: discrete on
//! traces or formulae, or discrete on the classes of an equivalence. For
//! those the optimal transport cost has a closed form. Moving mass inside a
//! class is free and moving it across classes costs 1, so the optimum is the
//! total-variation distance between the two distributions pushed onto the
//! classes:
//!
//! ```text
//! K(p, q) = Σ_x max(p̂(x) − q̂(x), 0)
//! ```
//!
//! [`kantorovich_oracle`] solves the general transport problem by min-cost
//! flow and exists to cross-check the closed form and to produce a witness
//! matching.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::pts::Rational;

/// A 0/1 ground distance: `Discrete` separates every pair of distinct items,
/// `DiscreteQuotient` only items with different canonical representatives.
pub enum GroundMetric<'a, K> {
    Discrete,
    DiscreteQuotient(&'a dyn Fn(&K) -> K),
}

impl<K: Ord + Clone> GroundMetric<'_, K> {
    pub fn canonical(&self, x: &K) -> K {
        match self {
            GroundMetric::Discrete => x.clone(),
            GroundMetric::DiscreteQuotient(f) => f(x),
        }
    }

    pub fn distance(&self, x: &K, y: &K) -> Rational {
        if self.canonical(x) == self.canonical(y) {
            Rational::zero()
        } else {
            Rational::one()
        }
    }
}

/// A coupling of two distributions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matching<K> {
    pub joint: BTreeMap<(K, K), Rational>,
}

impl<K: Ord + Clone> Matching<K> {
    pub fn left_marginal(&self) -> BTreeMap<K, Rational> {
        let mut out: BTreeMap<K, Rational> = BTreeMap::new();
        for ((x, _), w) in &self.joint {
            *out.entry(x.clone()).or_insert_with(Rational::zero) += w;
        }
        out
    }

    pub fn right_marginal(&self) -> BTreeMap<K, Rational> {
        let mut out: BTreeMap<K, Rational> = BTreeMap::new();
        for ((_, y), w) in &self.joint {
            *out.entry(y.clone()).or_insert_with(Rational::zero) += w;
        }
        out
    }

    pub fn cost(&self, cost: impl Fn(&K, &K) -> Rational) -> Rational {
        self.joint
            .iter()
            .fold(Rational::zero(), |acc, ((x, y), w)| acc + w * cost(x, y))
    }
}

fn check_distribution<K>(p: &BTreeMap<K, Rational>) -> Result<()> {
    let mut sum = Rational::zero();
    for w in p.values() {
        if !w.is_positive() || *w > Rational::one() {
            return Err(Error::WeightOutOfRange(w.clone()));
        }
        sum += w;
    }
    if sum.is_one() {
        Ok(())
    } else {
        Err(Error::NotADistribution { sum })
    }
}

/// Optimal transport cost under a 0/1 ground distance.
pub fn kantorovich_01<K: Ord + Clone>(
    p: &BTreeMap<K, Rational>,
    q: &BTreeMap<K, Rational>,
    g: &GroundMetric<K>,
) -> Result<Rational> {
    check_distribution(p)?;
    check_distribution(q)?;
    Ok(total_variation_on_classes(p, q, g))
}

pub(crate) fn total_variation_on_classes<K: Ord + Clone>(
    p: &BTreeMap<K, Rational>,
    q: &BTreeMap<K, Rational>,
    g: &GroundMetric<K>,
) -> Rational {
    let mut diff: BTreeMap<K, Rational> = BTreeMap::new();
    for (x, w) in p {
        *diff.entry(g.canonical(x)).or_insert_with(Rational::zero) += w;
    }
    for (y, w) in q {
        *diff.entry(g.canonical(y)).or_insert_with(Rational::zero) -= w;
    }
    diff.into_values()
        .filter(|d| d.is_positive())
        .fold(Rational::zero(), |acc, d| acc + d)
}

struct Edge {
    to: usize,
    cap: Rational,
    cost: Rational,
}

/// Exact optimal transport by successive shortest augmenting paths on the
/// bipartite support graph. Returns the optimum and an optimal matching.
///
/// Terminates over the rationals: scaling by the common denominator makes
/// every capacity integral, and each augmentation moves a positive multiple
/// of its reciprocal.
pub fn kantorovich_oracle<K: Ord + Clone>(
    p: &BTreeMap<K, Rational>,
    q: &BTreeMap<K, Rational>,
    cost: impl Fn(&K, &K) -> Rational,
) -> Result<(Rational, Matching<K>)> {
    check_distribution(p)?;
    check_distribution(q)?;
    let left: Vec<(&K, &Rational)> = p.iter().collect();
    let right: Vec<(&K, &Rational)> = q.iter().collect();
    let (m, n) = (left.len(), right.len());
    let source = 0;
    let sink = m + n + 1;

    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n + 2];
    let mut add = |edges: &mut Vec<Edge>, u: usize, v: usize, cap: Rational, cost: Rational| {
        adj[u].push(edges.len());
        edges.push(Edge {
            to: v,
            cap,
            cost: cost.clone(),
        });
        adj[v].push(edges.len());
        edges.push(Edge {
            to: u,
            cap: Rational::zero(),
            cost: -cost,
        });
    };
    for (i, (_, w)) in left.iter().enumerate() {
        add(&mut edges, source, 1 + i, (*w).clone(), Rational::zero());
    }
    let mut middle = Vec::new();
    for (i, (x, wx)) in left.iter().enumerate() {
        for (j, (y, wy)) in right.iter().enumerate() {
            middle.push((i, j, edges.len()));
            let cap = std::cmp::min(*wx, *wy).clone();
            add(&mut edges, 1 + i, 1 + m + j, cap, cost(x, y));
        }
    }
    for (j, (_, w)) in right.iter().enumerate() {
        add(&mut edges, 1 + m + j, sink, (*w).clone(), Rational::zero());
    }

    let mut total = Rational::zero();
    let mut sent = Rational::zero();
    while sent < Rational::one() {
        // Bellman-Ford; residual costs can be negative but never form a negative cycle
        let mut dist: Vec<Option<Rational>> = vec![None; m + n + 2];
        let mut via: Vec<Option<usize>> = vec![None; m + n + 2];
        dist[source] = Some(Rational::zero());
        for _ in 0..m + n + 2 {
            let mut changed = false;
            for u in 0..m + n + 2 {
                let Some(du) = dist[u].clone() else { continue };
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap.is_positive() {
                        let nd = &du + &edge.cost;
                        if dist[edge.to].as_ref().is_none_or(|d| nd < *d) {
                            dist[edge.to] = Some(nd);
                            via[edge.to] = Some(e);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let Some(path_cost) = dist[sink].clone() else {
            break;
        };
        let mut bottleneck = Rational::one() - &sent;
        let mut v = sink;
        while let Some(e) = via[v] {
            bottleneck = std::cmp::min(bottleneck, edges[e].cap.clone());
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while let Some(e) = via[v] {
            edges[e].cap -= &bottleneck;
            edges[e ^ 1].cap += &bottleneck;
            v = edges[e ^ 1].to;
        }
        total += &path_cost * &bottleneck;
        sent += bottleneck;
    }

    let mut joint = BTreeMap::new();
    for (i, j, e) in middle {
        let flow = edges[e ^ 1].cap.clone();
        if flow.is_positive() {
            joint.insert((left[i].0.clone(), right[j].0.clone()), flow);
        }
    }
    Ok((total, Matching { joint }))
}

/// Result of a Hausdorff lifting with the pair realizing it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HausdorffResult {
    pub value: Rational,
    /// Indices `(i, j)` into the two sets of the lexicographically least
    /// pair `(a_i, b_j)` whose distance equals the value and where one side
    /// is a nearest point of the other. `None` when a set is empty.
    pub witness: Option<(usize, usize)>,
}

/// `max(sup_a inf_b d(a, b), sup_b inf_a d(a, b))` with `inf ∅ = 1`, `sup ∅ = 0`.
pub fn hausdorff<T>(a: &[T], b: &[T], d: impl Fn(&T, &T) -> Rational) -> Rational {
    hausdorff_with_witness(a, b, d).value
}

pub fn hausdorff_with_witness<T>(
    a: &[T],
    b: &[T],
    d: impl Fn(&T, &T) -> Rational,
) -> HausdorffResult {
    if a.is_empty() && b.is_empty() {
        return HausdorffResult {
            value: Rational::zero(),
            witness: None,
        };
    }
    if a.is_empty() || b.is_empty() {
        return HausdorffResult {
            value: Rational::one(),
            witness: None,
        };
    }
    let matrix: Vec<Vec<Rational>> = a
        .iter()
        .map(|x| b.iter().map(|y| d(x, y)).collect())
        .collect();
    let row_min: Vec<&Rational> = matrix.iter().map(|row| row.iter().min().unwrap()).collect();
    let col_min: Vec<&Rational> = (0..b.len())
        .map(|j| matrix.iter().map(|row| &row[j]).min().unwrap())
        .collect();
    let value = row_min
        .iter()
        .chain(col_min.iter())
        .copied()
        .max()
        .unwrap()
        .clone();
    let mut witness = None;
    'search: for (i, row) in matrix.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if *x == value && (row_min[i] == x || col_min[j] == x) {
                witness = Some((i, j));
                break 'search;
            }
        }
    }
    HausdorffResult { value, witness }
}
