//! Deterministic, possibly halting resolutions of a process.
//!
//! A resolution is kept as an unfolding tree: every node records the
//! scheduler's choice and, when a transition is taken, one subtree per
//! support state of that transition's distribution. Nodes are identified by
//! their path from the root ([`UnfoldNode`]), so two visits to the same
//! process may be scheduled differently and the initial state never occurs
//! in a support.
//!
//! Subtrees are shared through [`Arc`]: the sub-resolutions of a process are
//! enumerated once and reused under every parent that reaches it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num::{BigUint, One, ToPrimitive};

use crate::error::{Error, Result};
use crate::pts::{ProcessId, Pts};

/// Default cap on the number of resolutions enumerated for one process.
pub const DEFAULT_MAX_RESOLUTIONS: usize = 1_000_000;

/// Guard against combinatorial blow-up in resolution enumeration.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ResolutionLimit(pub usize);

impl Default for ResolutionLimit {
    fn default() -> Self {
        ResolutionLimit(DEFAULT_MAX_RESOLUTIONS)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Choice {
    Halt,
    /// Index into the process's transition list.
    Take(usize),
}

/// A node of the unfolding: the (transition index, target) pairs leading to
/// it from the root, plus the process it corresponds to.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct UnfoldNode {
    pub path: Vec<(usize, ProcessId)>,
    pub process: ProcessId,
}

impl UnfoldNode {
    pub fn root(process: ProcessId) -> Self {
        UnfoldNode {
            path: Vec::new(),
            process,
        }
    }

    pub fn child(&self, index: usize, target: ProcessId) -> Self {
        let mut path = self.path.clone();
        path.push((index, target));
        UnfoldNode {
            path,
            process: target,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ResTree {
    pub choice: Choice,
    /// One entry per support state of the chosen distribution, in support order.
    pub children: Vec<(ProcessId, Arc<ResTree>)>,
}

impl ResTree {
    pub fn halt() -> Arc<Self> {
        Arc::new(ResTree {
            choice: Choice::Halt,
            children: Vec::new(),
        })
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Resolution {
    pub root: ProcessId,
    pub tree: Arc<ResTree>,
}

impl Resolution {
    pub fn trivial(root: ProcessId) -> Self {
        Resolution {
            root,
            tree: ResTree::halt(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.tree.choice == Choice::Halt
    }

    /// The choice map on reachable nodes.
    pub fn choices(&self) -> BTreeMap<UnfoldNode, Choice> {
        fn walk(node: UnfoldNode, tree: &ResTree, out: &mut BTreeMap<UnfoldNode, Choice>) {
            if let Choice::Take(k) = tree.choice {
                for (q, sub) in &tree.children {
                    walk(node.child(k, *q), sub, out);
                }
            }
            out.insert(node, tree.choice);
        }
        let mut out = BTreeMap::new();
        walk(UnfoldNode::root(self.root), &self.tree, &mut out);
        out
    }

    /// Builds a resolution from a choice map. Returns `None` unless the map
    /// is defined exactly on the nodes reachable under its own choices and
    /// every `Take` index is in range.
    pub fn from_choices(
        pts: &Pts,
        root: ProcessId,
        choices: &BTreeMap<UnfoldNode, Choice>,
    ) -> Option<Resolution> {
        fn build(
            pts: &Pts,
            node: UnfoldNode,
            choices: &BTreeMap<UnfoldNode, Choice>,
            used: &mut usize,
        ) -> Option<Arc<ResTree>> {
            let choice = *choices.get(&node)?;
            *used += 1;
            let children = match choice {
                Choice::Halt => Vec::new(),
                Choice::Take(k) => {
                    let t = pts.transitions(node.process).get(k)?;
                    t.target
                        .support()
                        .map(|q| Some((q, build(pts, node.child(k, q), choices, used)?)))
                        .collect::<Option<Vec<_>>>()?
                }
            };
            Some(Arc::new(ResTree { choice, children }))
        }
        if root.index() >= pts.len() {
            return None;
        }
        let mut used = 0;
        let tree = build(pts, UnfoldNode::root(root), choices, &mut used)?;
        (used == choices.len()).then_some(Resolution { root, tree })
    }

    /// Unfolds `root` under a scheduler that picks a choice for each node.
    /// Returns `None` if the scheduler picks a transition index out of range.
    pub fn from_scheduler(
        pts: &Pts,
        root: ProcessId,
        scheduler: impl Fn(&UnfoldNode) -> Choice,
    ) -> Option<Resolution> {
        fn build(
            pts: &Pts,
            node: UnfoldNode,
            scheduler: &dyn Fn(&UnfoldNode) -> Choice,
        ) -> Option<Arc<ResTree>> {
            let choice = scheduler(&node);
            let children = match choice {
                Choice::Halt => Vec::new(),
                Choice::Take(k) => {
                    let t = pts.transitions(node.process).get(k)?;
                    t.target
                        .support()
                        .map(|q| Some((q, build(pts, node.child(k, q), scheduler)?)))
                        .collect::<Option<Vec<_>>>()?
                }
            };
            Some(Arc::new(ResTree { choice, children }))
        }
        if root.index() >= pts.len() {
            return None;
        }
        let tree = build(pts, UnfoldNode::root(root), &scheduler)?;
        Some(Resolution { root, tree })
    }

    pub fn display<'a>(&'a self, pts: &'a Pts) -> impl fmt::Display + 'a {
        ResolutionDisplay {
            pts,
            root: self.root,
            tree: &self.tree,
        }
    }
}

struct ResolutionDisplay<'a> {
    pts: &'a Pts,
    root: ProcessId,
    tree: &'a ResTree,
}

impl fmt::Display for ResolutionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `s:a[s1:halt, s2:d[nil:halt]]`, with the transition's action naming the choice
        f.write_str(self.pts.name(self.root))?;
        match self.tree.choice {
            Choice::Halt => f.write_str(":halt"),
            Choice::Take(k) => {
                let action = &self.pts.transitions(self.root)[k].action;
                write!(f, ":{action}#{k}[")?;
                for (i, (q, sub)) in self.tree.children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(
                        f,
                        "{}",
                        ResolutionDisplay {
                            pts: self.pts,
                            root: *q,
                            tree: sub
                        }
                    )?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Number of resolutions of `s` without materializing them:
/// `N(p) = 1 + Σ_k Π_{q ∈ supp(π_k)} N(q)`.
pub fn count_resolutions(pts: &Pts, s: ProcessId) -> BigUint {
    fn count(pts: &Pts, p: ProcessId, memo: &mut HashMap<ProcessId, BigUint>) -> BigUint {
        if let Some(n) = memo.get(&p) {
            return n.clone();
        }
        let mut n = BigUint::one();
        for t in pts.transitions(p) {
            let mut prod = BigUint::one();
            for q in t.target.support() {
                prod *= count(pts, q, memo);
            }
            n += prod;
        }
        memo.insert(p, n.clone());
        n
    }
    count(pts, s, &mut HashMap::new())
}

fn check_limit(pts: &Pts, s: ProcessId, limit: ResolutionLimit) -> Result<usize> {
    if s.index() >= pts.len() {
        return Err(Error::UnknownProcess(format!("#{}", s.index())));
    }
    let count = count_resolutions(pts, s);
    match count.to_usize() {
        Some(n) if n <= limit.0 => Ok(n),
        _ => Err(Error::TooManyResolutions {
            process: pts.name(s).to_string(),
            count,
            limit: limit.0,
        }),
    }
}

/// Every resolution of `s`, each exactly once, in canonical order: halting
/// first, then by transition index, then by the children's sub-resolutions
/// with the leftmost child most significant.
pub fn enumerate_resolutions(
    pts: &Pts,
    s: ProcessId,
    limit: ResolutionLimit,
) -> Result<Vec<Resolution>> {
    check_limit(pts, s, limit)?;
    let mut memo = HashMap::new();
    let trees = subtrees(pts, s, &mut memo);
    Ok(trees
        .iter()
        .map(|tree| Resolution {
            root: s,
            tree: tree.clone(),
        })
        .collect())
}

fn subtrees(
    pts: &Pts,
    p: ProcessId,
    memo: &mut HashMap<ProcessId, Arc<Vec<Arc<ResTree>>>>,
) -> Arc<Vec<Arc<ResTree>>> {
    if let Some(v) = memo.get(&p) {
        return v.clone();
    }
    let mut out = vec![ResTree::halt()];
    for (k, t) in pts.transitions(p).iter().enumerate() {
        let support: Vec<ProcessId> = t.target.support().collect();
        let options: Vec<Arc<Vec<Arc<ResTree>>>> =
            support.iter().map(|&q| subtrees(pts, q, memo)).collect();
        // odometer over the cartesian product, last child varying fastest
        let mut digits = vec![0usize; support.len()];
        'product: loop {
            let children = support
                .iter()
                .zip(&digits)
                .zip(&options)
                .map(|((&q, &i), opts)| (q, opts[i].clone()))
                .collect();
            out.push(Arc::new(ResTree {
                choice: Choice::Take(k),
                children,
            }));
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    break 'product;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < options[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
    let out = Arc::new(out);
    memo.insert(p, out.clone());
    out
}

/// Independent structural check of a resolution against `pts`.
pub fn validate_resolution(pts: &Pts, r: &Resolution) -> bool {
    fn ok(pts: &Pts, p: ProcessId, tree: &ResTree) -> bool {
        match tree.choice {
            Choice::Halt => tree.children.is_empty(),
            Choice::Take(k) => {
                let Some(t) = pts.transitions(p).get(k) else {
                    return false;
                };
                let support: Vec<ProcessId> = t.target.support().collect();
                support.len() == tree.children.len()
                    && support
                        .iter()
                        .zip(&tree.children)
                        .all(|(q, (c, sub))| q == c && ok(pts, *c, sub))
            }
        }
    }
    r.root.index() < pts.len() && ok(pts, r.root, &r.tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pts::PtsBuilder;
    use std::collections::BTreeSet;

    fn system() -> Pts {
        let mut b = PtsBuilder::new();
        b.edge("s", "a", &[("s1", 1, 2), ("s2", 1, 2)])
            .edge("s", "a", &[("s3", 1, 2), ("s4", 1, 2)])
            .edge("s", "a", &[("s5", 1, 1)])
            .edge("s1", "b", &[("nil", 1, 1)])
            .edge("s1", "c", &[("nil", 1, 1)])
            .edge("s2", "d", &[("nil", 1, 1)])
            .edge("s3", "b", &[("nil", 1, 1)])
            .edge("s3", "d", &[("nil", 1, 1)])
            .edge("s4", "c", &[("nil", 1, 1)])
            .edge("s5", "b", &[("nil", 1, 1)])
            .edge("t", "a", &[("t1", 1, 2), ("t2", 1, 2)])
            .edge("t1", "b", &[("nil", 1, 1)])
            .edge("t1", "c", &[("nil", 1, 1)])
            .edge("t2", "b", &[("nil", 1, 1)])
            .edge("t2", "d", &[("nil", 1, 1)]);
        b.build().unwrap().0
    }

    #[test]
    fn terminal_process_has_one_resolution() {
        let pts = system();
        let nil = pts.process("nil").unwrap();
        let rs = enumerate_resolutions(&pts, nil, ResolutionLimit::default()).unwrap();
        assert_eq!(rs, vec![Resolution::trivial(nil)]);
        assert_eq!(count_resolutions(&pts, nil), BigUint::one());
    }

    #[test]
    fn counts_match_enumeration_without_duplicates() {
        let pts = system();
        for p in pts.processes() {
            let rs = enumerate_resolutions(&pts, p, ResolutionLimit::default()).unwrap();
            assert_eq!(BigUint::from(rs.len()), count_resolutions(&pts, p));
            let distinct: BTreeSet<_> = rs.iter().collect();
            assert_eq!(distinct.len(), rs.len());
            assert!(rs[0].is_trivial());
            assert!(rs.iter().all(|r| validate_resolution(&pts, r)));
        }
        // t: halt, or `a` with 3 options for each of t1 and t2
        let t = pts.process("t").unwrap();
        assert_eq!(count_resolutions(&pts, t), BigUint::from(10u32));
    }

    #[test]
    fn enumeration_order_is_canonical() {
        let pts = system();
        let t = pts.process("t").unwrap();
        let rs = enumerate_resolutions(&pts, t, ResolutionLimit::default()).unwrap();
        let shown: Vec<String> = rs.iter().map(|r| r.display(&pts).to_string()).collect();
        assert_eq!(shown[0], "t:halt");
        assert_eq!(shown[1], "t:a#0[t1:halt, t2:halt]");
        assert_eq!(shown[2], "t:a#0[t1:halt, t2:b#0[nil:halt]]");
        assert_eq!(shown[4], "t:a#0[t1:b#0[nil:halt], t2:halt]");
    }

    #[test]
    fn limit_is_enforced() {
        let pts = system();
        let s = pts.process("s").unwrap();
        let err = enumerate_resolutions(&pts, s, ResolutionLimit(3)).unwrap_err();
        assert!(matches!(err, Error::TooManyResolutions { limit: 3, .. }));
    }

    #[test]
    fn choice_map_round_trip_and_hand_built_resolution() {
        let pts = system();
        let s = pts.process("s").unwrap();
        let s1 = pts.process("s1").unwrap();
        let s2 = pts.process("s2").unwrap();
        let nil = pts.process("nil").unwrap();
        // first a-branch; s1 halts, s2 takes d
        let root = UnfoldNode::root(s);
        let n1 = root.child(0, s1);
        let n2 = root.child(0, s2);
        let mut choices = BTreeMap::new();
        choices.insert(root.clone(), Choice::Take(0));
        choices.insert(n1, Choice::Halt);
        choices.insert(n2.clone(), Choice::Take(0));
        choices.insert(n2.child(0, nil), Choice::Halt);
        let r = Resolution::from_choices(&pts, s, &choices).unwrap();
        assert!(validate_resolution(&pts, &r));
        assert_eq!(r.choices(), choices);
        assert!(enumerate_resolutions(&pts, s, ResolutionLimit::default())
            .unwrap()
            .contains(&r));

        let mut extra = choices.clone();
        extra.insert(root.child(1, s1), Choice::Halt);
        assert!(Resolution::from_choices(&pts, s, &extra).is_none());

        let mut bad = choices.clone();
        bad.insert(root, Choice::Take(7));
        assert!(Resolution::from_choices(&pts, s, &bad).is_none());
    }

    #[test]
    fn out_of_range_take_is_invalid() {
        let pts = system();
        let s = pts.process("s").unwrap();
        let r = Resolution {
            root: s,
            tree: Arc::new(ResTree {
                choice: Choice::Take(3),
                children: Vec::new(),
            }),
        };
        assert!(!validate_resolution(&pts, &r));
        let wrong_arity = Resolution {
            root: s,
            tree: Arc::new(ResTree {
                choice: Choice::Take(2),
                children: Vec::new(),
            }),
        };
        assert!(!validate_resolution(&pts, &wrong_arity));
    }
}
