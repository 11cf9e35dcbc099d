//! Exact trace metrics for finite acyclic probabilistic transition systems.
//!
//! The crate computes, with exact rational arithmetic:
//!
//! * resolutions of a process and the trace distributions they induce,
//! * the strong and weak trace metrics (Hausdorff over resolutions of the
//!   Kantorovich distance between trace distributions),
//! * trace equivalence, checked directly by matching resolutions,
//! * mimicking formulae, satisfied-formula sets, and the logical and
//!   real-valued distances that characterize the metrics.
//!
//! ```
//! use tracemet::{parse_pts, strong_trace_metric, ResolutionLimit};
//!
//! let pts = parse_pts(
//!     "s -a-> 1/2 s1, 1/2 s2
//!      s -a-> 1 s3
//!      s1 -b-> 1 nil
//!      s1 -c-> 1 nil
//!      s2 -d-> 1 nil
//!      s3 -b-> 1 nil
//!      t -a-> 1/2 t1, 1/2 t2
//!      t1 -b-> 1 nil
//!      t1 -c-> 1 nil
//!      t2 -b-> 1 nil
//!      t2 -d-> 1 nil",
//! )?;
//! let (s, t) = (pts.process("s")?, pts.process("t")?);
//! let m = strong_trace_metric(&pts, s, t, ResolutionLimit::default())?;
//! assert_eq!(m.value.to_string(), "1/2");
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod error;
pub mod formula_distance;
pub mod logic;
pub mod metrics;
pub mod parser;
pub mod pts;
pub mod resolution;
pub mod traces;
pub mod transport;

pub use error::{Error, Result};
pub use formula_distance::{
    crosscheck, dist_formula_distance, distance_to_set, logical_distance, real_value,
    sup_val_distance, trace_formula_distance, CrossCheckReport,
};
pub use logic::{
    mimicking_formula, satisfied_set, satisfies, weak_mimicking_formula, weak_satisfied_set,
    weak_satisfies, TraceDistFormula, TraceFormula,
};
pub use metrics::{
    resolution_distance, strong_trace_equivalent, strong_trace_metric, weak_resolution_distance,
    weak_trace_equivalent, weak_trace_metric, EquivalenceResult, MetricResult,
};
pub use parser::{
    parse_formula, parse_pts, print_formula, print_pts, Diagnostic, ParseErrors, SourceSpan,
};
pub use pts::{
    to_decimal, validate_pts, Action, Distribution, ProcessId, Pts, PtsBuilder, Rational,
};
pub use resolution::{
    count_resolutions, enumerate_resolutions, Choice, Resolution, ResolutionLimit, UnfoldNode,
};
pub use traces::{
    pr_compatible, pr_weak_compatible, tau_erase, trace_distribution, weak_trace_distribution,
    Trace, TraceDistribution,
};
pub use transport::{hausdorff, kantorovich_01, kantorovich_oracle, GroundMetric};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/resolutions.md")]
    mod resolutions {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/logic.md")]
    mod logic {}
    #[doc = include_str!("../../../book/src/real_values.md")]
    mod real_values {}
}
