use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tracemet::formula_distance::sample_val_bound;
use tracemet::metrics::{trace_metric, Side};
use tracemet::parser::parse_pts_with_warnings;
use tracemet::resolution::DEFAULT_MAX_RESOLUTIONS;
use tracemet::{
    count_resolutions, crosscheck, dist_formula_distance, enumerate_resolutions, mimicking_formula,
    parse_formula, real_value, satisfies, strong_trace_equivalent, to_decimal, trace_distribution,
    weak_mimicking_formula, weak_satisfies, weak_trace_equivalent, Diagnostic, Error, ParseErrors,
    ProcessId, Pts, Rational, Resolution, ResolutionLimit, TraceDistFormula, TraceDistribution,
};

const EXIT_INPUT: u8 = 1;
const EXIT_GUARD: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

/// Exact trace metrics for probabilistic transition systems.
#[derive(Parser, Debug)]
#[command(name = "tracemet", version, about)]
struct Cli {
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,

    /// Abort when a process has more resolutions than this.
    #[arg(
        long,
        global = true,
        env = "TRACEMET_MAX_RESOLUTIONS",
        default_value_t = DEFAULT_MAX_RESOLUTIONS
    )]
    max_resolutions: usize,

    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model file.
    Validate { file: PathBuf },
    /// List the resolutions of a process with their trace distributions.
    Resolutions {
        file: PathBuf,
        #[arg(short = 'p')]
        process: String,
        /// Print at most this many resolutions.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Mimicking formulae of all resolutions of a process.
    Mimic {
        file: PathBuf,
        #[arg(short = 'p')]
        process: String,
        #[arg(long)]
        weak: bool,
    },
    /// Trace metric between two processes.
    Metric {
        file: PathBuf,
        #[arg(short = 'p')]
        left: String,
        #[arg(short = 'q')]
        right: String,
        #[arg(long)]
        weak: bool,
    },
    /// Trace equivalence of two processes.
    Equiv {
        file: PathBuf,
        #[arg(short = 'p')]
        left: String,
        #[arg(short = 'q')]
        right: String,
        #[arg(long)]
        weak: bool,
    },
    /// Whether a process satisfies a formula.
    Sat {
        file: PathBuf,
        #[arg(short = 'p')]
        process: String,
        #[arg(short = 'f')]
        formula: String,
        #[arg(long)]
        weak: bool,
    },
    /// Distance between two formulae.
    Fdist {
        #[arg(long = "f1")]
        first: String,
        #[arg(long = "f2")]
        second: String,
        #[arg(long)]
        weak: bool,
    },
    /// Real-valued semantics of a formula at a process.
    Val {
        file: PathBuf,
        #[arg(short = 'p')]
        process: String,
        #[arg(short = 'f')]
        formula: String,
        #[arg(long)]
        weak: bool,
    },
    /// Compare both trace metrics with their logical characterizations.
    Crosscheck {
        file: PathBuf,
        #[arg(short = 'p')]
        left: String,
        #[arg(short = 'q')]
        right: String,
        /// Random formulae to sample when --seed is given.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

/// `-f1`/`-f2` are accepted as spellings of `--f1`/`--f2`.
fn normalize_args(args: impl Iterator<Item = String>) -> Vec<String> {
    args.map(|a| match a.as_str() {
        "-f1" => "--f1".to_string(),
        "-f2" => "--f2".to_string(),
        _ => a,
    })
    .collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(normalize_args(std::env::args())) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let guard = e
                .downcast_ref::<Error>()
                .is_some_and(|e| matches!(e, Error::TooManyResolutions { .. }));
            ExitCode::from(if guard { EXIT_GUARD } else { EXIT_INPUT })
        }
    }
}

fn rational(r: &Rational) -> Value {
    json!({ "num": r.numer().to_string(), "den": r.denom().to_string() })
}

fn fraction(r: &Rational) -> String {
    format!("{r} ({})", to_decimal(r, 6))
}

fn diagnostic(d: &Diagnostic) -> Value {
    match d.span {
        Some(s) => json!({
            "line": s.line, "column": s.column, "length": s.length, "message": d.message
        }),
        None => json!({ "message": d.message }),
    }
}

fn distribution(td: &TraceDistribution) -> Value {
    Value::Array(
        td.iter()
            .map(|(alpha, w)| json!({ "trace": alpha.to_string(), "weight": rational(w) }))
            .collect(),
    )
}

fn formula_json(f: &TraceDistFormula) -> Value {
    json!({
        "text": f.to_string(),
        "terms": f.terms().map(|(phi, w)| json!({ "formula": phi.to_string(), "weight": rational(w) })).collect::<Vec<_>>(),
    })
}

fn resolution_json(pts: &Pts, r: &Resolution) -> Value {
    json!({
        "process": pts.name(r.root),
        "resolution": r.display(pts).to_string(),
        "traces": distribution(&trace_distribution(pts, r)),
    })
}

fn read(file: &Path) -> Result<String> {
    std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))
}

fn load(file: &Path) -> Result<Pts> {
    let text = read(file)?;
    let (pts, warnings) = parse_pts_with_warnings(&text)
        .map_err(|e| anyhow::Error::new(e).context(format!("invalid model {}", file.display())))?;
    for w in warnings {
        eprintln!("warning: {}: {w}", file.display());
    }
    Ok(pts)
}

fn formula(text: &str) -> Result<TraceDistFormula> {
    parse_formula(text).map_err(|e: ParseErrors| {
        anyhow::Error::new(e).context(format!("invalid formula `{text}`"))
    })
}

fn process(pts: &Pts, name: &str) -> Result<ProcessId> {
    Ok(pts.process(name)?)
}

fn emit(cli: &Cli, value: Value, text: impl FnOnce() -> String) {
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("JSON values serialize")
        );
    } else {
        println!("{}", text());
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let limit = ResolutionLimit(cli.max_resolutions);
    match &cli.command {
        Command::Validate { file } => {
            let text = read(file)?;
            let (valid, errors, warnings) = match parse_pts_with_warnings(&text) {
                Ok((_, w)) => (true, Vec::new(), w),
                Err(ParseErrors(e)) => (false, e, Vec::new()),
            };
            emit(
                cli,
                json!({
                    "valid": valid,
                    "errors": errors.iter().map(diagnostic).collect::<Vec<_>>(),
                    "warnings": warnings.iter().map(diagnostic).collect::<Vec<_>>(),
                }),
                || {
                    let mut lines = vec![if valid { "valid" } else { "invalid" }.to_string()];
                    lines.extend(errors.iter().map(|d| format!("error: {d}")));
                    lines.extend(warnings.iter().map(|d| format!("warning: {d}")));
                    lines.join("\n")
                },
            );
            Ok(if valid {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INPUT)
            })
        }
        Command::Resolutions {
            file,
            process: name,
            limit: shown,
        } => {
            let pts = load(file)?;
            let p = process(&pts, name)?;
            let total = count_resolutions(&pts, p);
            let all = enumerate_resolutions(&pts, p, limit)?;
            let shown = &all[..shown.unwrap_or(all.len()).min(all.len())];
            emit(
                cli,
                json!({
                    "process": name,
                    "count": total.to_string(),
                    "resolutions": shown.iter().map(|r| resolution_json(&pts, r)).collect::<Vec<_>>(),
                }),
                || {
                    let mut lines = vec![format!("{total} resolutions of {name}")];
                    for (i, r) in shown.iter().enumerate() {
                        lines.push(format!(
                            "{:>4}  {}  {}",
                            i + 1,
                            r.display(&pts),
                            trace_distribution(&pts, r)
                        ));
                    }
                    lines.join("\n")
                },
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Mimic {
            file,
            process: name,
            weak,
        } => {
            let pts = load(file)?;
            let p = process(&pts, name)?;
            let formulae: BTreeSet<TraceDistFormula> = enumerate_resolutions(&pts, p, limit)?
                .iter()
                .map(|r| {
                    if *weak {
                        weak_mimicking_formula(&pts, r)
                    } else {
                        mimicking_formula(&pts, r)
                    }
                })
                .collect();
            emit(
                cli,
                json!({ "process": name, "formulae": formulae.iter().map(formula_json).collect::<Vec<_>>() }),
                || {
                    formulae
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join("\n")
                },
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Metric {
            file,
            left,
            right,
            weak,
        } => {
            let pts = load(file)?;
            let (s, t) = (process(&pts, left)?, process(&pts, right)?);
            let m = trace_metric(&pts, s, t, *weak, limit)?;
            let (ls, rs) = m.dedup;
            emit(
                cli,
                json!({
                    "weak": weak,
                    "value": rational(&m.value),
                    "decimal": to_decimal(&m.value, 6),
                    "witness": m.witness.as_ref().map(|(a, b)| json!([resolution_json(&pts, a), resolution_json(&pts, b)])),
                    "distinct_distributions": [ls.after, rs.after],
                    "resolutions": [ls.before, rs.before],
                }),
                || {
                    let mut lines = vec![fraction(&m.value)];
                    if let Some((a, b)) = &m.witness {
                        lines.push(format!("witness {left}: {}", a.display(&pts)));
                        lines.push(format!("witness {right}: {}", b.display(&pts)));
                    }
                    lines.join("\n")
                },
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Equiv {
            file,
            left,
            right,
            weak,
        } => {
            let pts = load(file)?;
            let (s, t) = (process(&pts, left)?, process(&pts, right)?);
            let eq = if *weak {
                weak_trace_equivalent(&pts, s, t, limit)?
            } else {
                strong_trace_equivalent(&pts, s, t, limit)?
            };
            let side_name = |side: &Side| match side {
                Side::Left => left.as_str(),
                Side::Right => right.as_str(),
            };
            emit(
                cli,
                json!({
                    "weak": weak,
                    "equivalent": eq.equivalent,
                    "distinguishing": eq.distinguishing.as_ref().map(|(_, r)| resolution_json(&pts, r)),
                }),
                || {
                    let mut lines = vec![eq.equivalent.to_string()];
                    if let Some((side, r)) = &eq.distinguishing {
                        lines.push(format!(
                            "unmatched resolution of {}: {}",
                            side_name(side),
                            r.display(&pts)
                        ));
                    }
                    lines.join("\n")
                },
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sat {
            file,
            process: name,
            formula: text,
            weak,
        } => {
            let pts = load(file)?;
            let p = process(&pts, name)?;
            let psi = formula(text)?;
            let witness = if *weak {
                weak_satisfies(&pts, p, &psi, limit)?
            } else {
                satisfies(&pts, p, &psi, limit)?
            };
            emit(
                cli,
                json!({
                    "satisfied": witness.is_some(),
                    "formula": psi.to_string(),
                    "witness": witness.as_ref().map(|r| resolution_json(&pts, r)),
                }),
                || {
                    let mut lines = vec![witness.is_some().to_string()];
                    if let Some(r) = &witness {
                        lines.push(format!("witness: {}", r.display(&pts)));
                    }
                    lines.join("\n")
                },
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Fdist {
            first,
            second,
            weak,
        } => {
            let (a, b) = (formula(first)?, formula(second)?);
            let d = dist_formula_distance(&a, &b, *weak);
            emit(
                cli,
                json!({ "weak": weak, "value": rational(&d), "decimal": to_decimal(&d, 6) }),
                || fraction(&d),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Val {
            file,
            process: name,
            formula: text,
            weak,
        } => {
            let pts = load(file)?;
            let p = process(&pts, name)?;
            let psi = formula(text)?;
            let v = real_value(&pts, p, &psi, *weak, limit)?;
            emit(
                cli,
                json!({ "weak": weak, "value": rational(&v), "decimal": to_decimal(&v, 6) }),
                || fraction(&v),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Crosscheck {
            file,
            left,
            right,
            samples,
        } => {
            let pts = load(file)?;
            let (s, t) = (process(&pts, left)?, process(&pts, right)?);
            let report = crosscheck(&pts, s, t, limit)?;
            let sample = match cli.seed {
                Some(seed) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    Some((
                        seed,
                        sample_val_bound(&pts, s, t, *samples, &mut rng, limit)?,
                    ))
                }
                None => None,
            };
            let sample_ok = sample.as_ref().is_none_or(|(_, x)| x.holds());
            emit(
                cli,
                json!({
                    "strong_metric": rational(&report.strong_metric),
                    "logical_distance": rational(&report.logical_distance),
                    "sup_val_distance": rational(&report.sup_val_distance),
                    "weak_metric": rational(&report.weak_metric),
                    "weak_logical_distance": rational(&report.weak_logical_distance),
                    "weak_sup_val_distance": rational(&report.weak_sup_val_distance),
                    "weak_sup_val_status": "derived",
                    "all_equal": report.all_equal,
                    "mismatches": report.mismatches,
                    "sampling": sample.as_ref().map(|(seed, x)| json!({
                        "seed": seed,
                        "samples": x.samples,
                        "max_gap": rational(&x.max_gap),
                        "worst": x.worst.as_ref().map(ToString::to_string),
                        "bound_holds": x.holds(),
                    })),
                }),
                || {
                    let mut out = report.to_string();
                    if let Some((seed, x)) = &sample {
                        out.push_str(&format!(
                            "\nsampled {} formulae (seed {seed}): max gap {} <= {}: {}",
                            x.samples,
                            x.max_gap,
                            x.metric,
                            x.holds()
                        ));
                    }
                    out
                },
            );
            Ok(if report.all_equal && sample_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_MISMATCH)
            })
        }
    }
}
