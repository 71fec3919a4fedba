//! `quadlemma`: decide S-lemma variants, solve single-constraint quadratic
//! programs and classify joint numerical ranges from JSON problem files.
//!
//! Exit codes: 0 computed, 1 numerical failure, 2 infeasible input or
//! violated precondition, 3 parse error.

// Negated comparisons such as `!(x > 0.0)` deliberately treat NaN as failing.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod io;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use quadlemma::oracle::{self, E1Oracle, E2Oracle};
use quadlemma::qp1eqc::{self, SolusetCase};
use quadlemma::{gtrs, numrange, scond, slemma, Error, NumrangeProblem, Tolerances, DEFAULT_SEED};
use serde_json::{json, Value};

use io::{ParseError, ProblemFile};
use report::{num, opt_num, opt_vector, sym, vector, Report};

const EXIT_NUMERIC: i32 = 1;
const EXIT_PRECONDITION: i32 = 2;
const EXIT_PARSE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "quadlemma", version, about = "S-lemma decisions and single-constraint quadratic programs")]
struct Cli {
    /// Override the relative eigenvalue sign tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for every randomized fallback.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Number of problem files processed concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide an S-lemma variant.
    Check {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Also report the regularized multiplier for this epsilon.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Solve a quadratic program.
    Solve {
        #[command(subcommand)]
        kind: SolveKind,
    },
    /// Classify convexity of the joint numerical range.
    Numrange {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Evaluate the four literature sufficient conditions.
    Scond {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Audit (E1) by constraint sampling and (E2) by a multiplier grid.
    Oracle {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = -100.0, allow_negative_numbers = true)]
        mu_lo: f64,
        #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
        mu_hi: f64,
        #[arg(long, default_value_t = 1e-2)]
        mu_step: f64,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum SolveKind {
    /// `inf { f(x) : h(x) = 0 }`.
    Qp1eqc {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// `inf { f(x) : l <= h(x) <= u }`.
    Gtrs {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Equality,
    Inequality,
    Interval,
}

/// Per-invocation settings shared by every file.
struct Ctx {
    tols: Tolerances<f64>,
    tol_override: Option<f64>,
    seed: u64,
}

enum Failure {
    Parse(ParseError),
    Core(Error),
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Parse(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn error_kind(e: &Error) -> (&'static str, i32) {
    match e {
        Error::NonFinite(_) => ("NonFinite", EXIT_PRECONDITION),
        Error::DimensionMismatch(_) => ("DimensionMismatch", EXIT_PRECONDITION),
        Error::InfeasibleConstraint => ("InfeasibleConstraint", EXIT_PRECONDITION),
        Error::InfeasibleProblem => ("InfeasibleProblem", EXIT_PRECONDITION),
        Error::SlaterViolation => ("SlaterViolation", EXIT_PRECONDITION),
        Error::StrictFeasibilityViolation => ("StrictFeasibilityViolation", EXIT_PRECONDITION),
        Error::E1Violated => ("E1Violated", EXIT_PRECONDITION),
        Error::HypothesisViolation(_) => ("HypothesisViolation", EXIT_PRECONDITION),
        Error::Precondition(_) => ("Precondition", EXIT_PRECONDITION),
        Error::InvalidProblem(_) => ("InvalidProblem", EXIT_PRECONDITION),
        Error::HardCaseRecoveryFailed(_) => ("HardCaseRecoveryFailed", EXIT_NUMERIC),
        Error::NoCertificate(_) => ("NoCertificate", EXIT_NUMERIC),
    }
}

type Handler = dyn Fn(&ProblemFile, &Ctx, &mut Report) -> Result<(), Failure> + Sync;

fn run_file(command: &str, path: &Path, ctx: &Ctx, handler: &Handler) -> Report {
    let mut rep = Report::new(command, &path.display().to_string(), &ctx.tols, ctx.tol_override, ctx.seed);
    let parsed = std::fs::read_to_string(path)
        .map_err(|e| ParseError { field: String::new(), message: format!("cannot read file: {e}") })
        .and_then(|text| io::parse_problem(&text));
    let result = parsed.map_err(Failure::from).and_then(|p| {
        rep.warn(&p.warnings);
        handler(&p, ctx, &mut rep)
    });
    match result {
        Ok(()) => {}
        Err(Failure::Parse(e)) => rep.fail("ParseError", e.to_string(), EXIT_PARSE),
        Err(Failure::Core(e)) => {
            let (kind, code) = error_kind(&e);
            rep.fail(kind, e.to_string(), code);
        }
    }
    rep
}

/// Runs `handler` over `files` with up to `jobs` worker threads; reports
/// come back in input order.
fn run_batch(command: &str, files: &[PathBuf], ctx: &Ctx, jobs: usize, handler: &Handler) -> Vec<Report> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Report>>> = files.iter().map(|_| Mutex::new(None)).collect();
    let workers = jobs.clamp(1, files.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= files.len() {
                    break;
                }
                let r = run_file(command, &files[i], ctx, handler);
                *slots[i].lock().expect("report slot poisoned") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("report slot poisoned").expect("every file is processed"))
        .collect()
}

fn check(mode: Mode, epsilon: Option<f64>) -> impl Fn(&ProblemFile, &Ctx, &mut Report) -> Result<(), Failure> + Sync {
    move |p, ctx, rep| {
        let f = &p.objective;
        let h = p.single_constraint()?;
        if mode == Mode::Interval {
            let (l, u) = p.require_bounds()?;
            let v = gtrs::interval_slemma(f, h, l, u, &ctx.tols, ctx.seed)?;
            rep.set(
                "verdict",
                json!({
                    "equivalence_holds": v.equivalence_holds,
                    "i1_true": v.i1_true,
                    "i2_true": v.i2_true,
                    "exception_nu": opt_num(v.exception_nu),
                }),
            );
            rep.set("certificate", opt_num(v.mu));
            rep.set("counterexample", opt_vector(v.counterexample.as_ref()));
            rep.set("branch", v.branch.map_or(Value::Null, |b| json!(b.tag())));
            rep.note(&v.notes);
            return Ok(());
        }
        let v = match mode {
            Mode::Equality => slemma::slemma_equality(f, h, &ctx.tols, ctx.seed)?,
            _ => slemma::slemma_inequality(f, h, &ctx.tols, ctx.seed)?,
        };
        rep.set(
            "verdict",
            json!({"equivalence_holds": v.equivalence_holds, "e1_true": v.e1_true, "e2_true": v.e2_true}),
        );
        rep.set("certificate", opt_num(v.certificate));
        rep.set("counterexample", opt_vector(v.counterexample.as_ref()));
        rep.set("branch", json!(v.branch.tag()));
        let d = &v.details;
        let mut details = json!({
            "w_matrix": d.w_matrix.as_ref().map_or(Value::Null, sym),
            "null_spaces_match": d.null_spaces_match,
            "m_matrix": d.m_matrix.as_ref().map_or(Value::Null, sym),
            "n_neg_a": d.n_neg_a,
            "regularized": Value::Null,
        });
        if let (Some(eps), true) = (epsilon, v.e1_true) {
            let reg = match mode {
                Mode::Equality => slemma::regularized_lambda(f, h, eps, &ctx.tols, ctx.seed),
                _ => slemma::regularized_inequality(f, h, eps, &ctx.tols, ctx.seed),
            };
            details["regularized"] = match reg {
                Ok(c) => json!({"epsilon": num(c.epsilon), "lambda_eps": num(c.lambda_eps), "exponent": c.exponent}),
                Err(e) => json!({"error": e.to_string()}),
            };
        }
        rep.set("details", details);
        rep.set_pencil(d.pencil.as_ref(), ctx.tols.singleton);
        rep.note(&d.notes);
        Ok(())
    }
}

fn solve_qp1eqc(p: &ProblemFile, ctx: &Ctx, rep: &mut Report) -> Result<(), Failure> {
    let prob = quadlemma::Qp1eqcProblem::new(p.objective.clone(), p.single_constraint()?.clone())?;
    let out = qp1eqc::solve(&prob, &ctx.tols, ctx.seed)?;
    let witness = out.witness.as_ref().map_or(Value::Null, |w| {
        json!({
            "y0": vector(&w.y0),
            "scalar": num(w.scalar),
            "case": match w.case { SolusetCase::Positive => "positive", SolusetCase::Negative => "negative" },
        })
    });
    let ray = out.ray.as_ref().map_or(Value::Null, |r| json!({"origin": vector(&r.origin), "direction": vector(&r.direction)}));
    rep.set(
        "outcome",
        json!({"status": format!("{:?}", out.status), "route": format!("{:?}", out.route), "witness": witness, "ray": ray}),
    );
    rep.set("value", num(out.value));
    rep.set("x_star", opt_vector(out.x_star.as_ref()));
    rep.set("mu_star", opt_num(out.mu_star));
    rep.set_pencil(out.pencil.as_ref(), ctx.tols.singleton);
    Ok(())
}

fn solve_gtrs(p: &ProblemFile, ctx: &Ctx, rep: &mut Report) -> Result<(), Failure> {
    let (l, u) = p.require_bounds()?;
    let prob = quadlemma::GtrsProblem::new(p.objective.clone(), p.single_constraint()?.clone(), l, u)?;
    let out = gtrs::solve_gtrs(&prob, &ctx.tols, ctx.seed)?;
    let strict = gtrs::strict_feasibility(&prob, &ctx.tols);
    rep.set(
        "outcome",
        json!({"status": format!("{:?}", out.status), "source": format!("{:?}", out.source), "strictly_feasible": strict}),
    );
    rep.set("value", num(out.value));
    rep.set("x_star", opt_vector(out.x_star.as_ref()));
    rep.set("mu_star", opt_num(out.mu_star));
    let boundary = match out.source {
        gtrs::Source::LowerBoundary => out.lower.as_ref(),
        gtrs::Source::UpperBoundary => out.upper.as_ref(),
        gtrs::Source::Interior => None,
    };
    rep.set_pencil(boundary.and_then(|o| o.pencil.as_ref()), ctx.tols.singleton);
    Ok(())
}

fn numrange_cmd(p: &ProblemFile, ctx: &Ctx, rep: &mut Report) -> Result<(), Failure> {
    let polyak = if p.n >= 2 && p.constraints.len() == 1 {
        let r = numrange::polyak_sufficient(&p.objective, &p.constraints[0], &ctx.tols)?;
        r.map_or(Value::Null, |(m1, m2)| json!([num(m1), num(m2)]))
    } else {
        Value::Null
    };
    let all_affine = p.affine_only || p.constraints.iter().all(|h| h.quad.is_zero(0.0));
    if !all_affine {
        if p.constraints.len() != 1 {
            return Err(Error::Precondition("quadratic constraints are only supported for a single pair (f, h)".into()).into());
        }
        // Only the sufficient condition applies to two quadratics.
        rep.set("verdict", json!({"convex": if polyak.is_null() { Value::Null } else { json!(true) }, "case": Value::Null}));
        rep.set("certificate", polyak.clone());
        rep.set("details", json!({"polyak": polyak}));
        return Ok(());
    }
    let prob = NumrangeProblem::new(p.objective.clone(), p.affine_maps()?)?;
    let v = numrange::classify_convexity(&prob, &ctx.tols)?;
    rep.set("verdict", json!({"convex": v.convex, "case": v.case.tag()}));
    let orthant = if !v.convex && prob.affines.len() == 1 {
        let (b1, d1) = &prob.affines[0];
        match numrange::classify_orthant_p1(&prob.f, b1, *d1, &ctx.tols) {
            Ok(o) => json!({
                "case": match o.case { numrange::OrthantCase::I => "i", numrange::OrthantCase::Ii => "ii" },
                "escape_direction": opt_vector(o.escape_direction.as_ref()),
                "alpha": opt_num(o.alpha),
            }),
            Err(e) => json!({"error": e.to_string()}),
        }
    } else {
        Value::Null
    };
    rep.set(
        "details",
        json!({
            "r": v.r,
            "vav_eigenvalues": vector(&v.vav_eigenvalues),
            "waw_eigenvalues": vector(&v.waw_eigenvalues),
            "va_in_range": v.va_in_range,
            "witness_eig": opt_num(v.witness_eig),
            "boundary": v.boundary,
            "orthant": orthant,
            "polyak": polyak,
        }),
    );
    if v.boundary {
        rep.warn(&["boundary: a decisive eigenvalue is within two orders of magnitude of the tolerance".into()]);
    }
    Ok(())
}

fn scond_cmd(p: &ProblemFile, ctx: &Ctx, rep: &mut Report) -> Result<(), Failure> {
    let f = &p.objective;
    let h = p.single_constraint()?;
    let s = scond::all_sconditions(f, h, &ctx.tols)?;
    let assumption1 = slemma::assumption1_holds(h, &ctx.tols)?;
    let v = slemma::slemma_equality(f, h, &ctx.tols, ctx.seed)?;
    rep.set(
        "verdict",
        json!({
            "s1": s[0], "s2": s[1], "s3": s[2], "s4": s[3],
            "assumption1": assumption1,
            "equivalence_holds": v.equivalence_holds,
        }),
    );
    rep.set("branch", json!(v.branch.tag()));
    Ok(())
}

fn oracle_cmd(samples: usize, lo: f64, hi: f64, step: f64) -> impl Fn(&ProblemFile, &Ctx, &mut Report) -> Result<(), Failure> + Sync {
    move |p, ctx, rep| {
        if !(step > 0.0) || !(lo <= hi) {
            return Err(Error::Precondition("multiplier grid needs mu_lo <= mu_hi and mu_step > 0".into()).into());
        }
        let f = &p.objective;
        let h = p.single_constraint()?;
        let e1 = oracle::oracle_e1(f, h, samples, ctx.seed, &ctx.tols);
        let grid = oracle::mu_grid(lo, hi, step);
        let e2 = oracle::oracle_e2(f, h, &grid, &ctx.tols);
        let (e1_tag, checked, witness) = match &e1 {
            E1Oracle::TrueSoFar { checked } => ("TrueSoFar", Some(*checked), None),
            E1Oracle::FalseWithWitness(x) => ("FalseWithWitness", None, Some(x)),
        };
        let (e2_tag, mu) = match e2 {
            E2Oracle::FoundMu(mu) => ("FoundMu", Some(mu)),
            E2Oracle::NoneOnGrid => ("NoneOnGrid", None),
        };
        rep.set("verdict", json!({"e1": e1_tag, "e1_checked": checked, "e2": e2_tag, "grid_points": grid.len()}));
        rep.set("certificate", opt_num(mu));
        rep.set("counterexample", opt_vector(witness));
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_PARSE as u8),
            };
        }
    };
    let mut tols = Tolerances::<f64>::default();
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            eprintln!("--tol must be a positive finite number");
            return ExitCode::from(EXIT_PARSE as u8);
        }
        tols = tols.with_eig(t);
    }
    let ctx = Ctx { tols, tol_override: cli.tol, seed: cli.seed };

    let (_name, files, reports) = match &cli.command {
        Command::Check { mode, epsilon, files } => {
            let h = check(*mode, *epsilon);
            ("check", files, run_batch("check", files, &ctx, cli.jobs, &h))
        }
        Command::Solve { kind: SolveKind::Qp1eqc { files } } => {
            ("solve qp1eqc", files, run_batch("solve qp1eqc", files, &ctx, cli.jobs, &solve_qp1eqc))
        }
        Command::Solve { kind: SolveKind::Gtrs { files } } => {
            ("solve gtrs", files, run_batch("solve gtrs", files, &ctx, cli.jobs, &solve_gtrs))
        }
        Command::Numrange { files } => ("numrange", files, run_batch("numrange", files, &ctx, cli.jobs, &numrange_cmd)),
        Command::Scond { files } => ("scond", files, run_batch("scond", files, &ctx, cli.jobs, &scond_cmd)),
        Command::Oracle { samples, mu_lo, mu_hi, mu_step, files } => {
            let h = oracle_cmd(*samples, *mu_lo, *mu_hi, *mu_step);
            ("oracle", files, run_batch("oracle", files, &ctx, cli.jobs, &h))
        }
    };
    let code = reports.iter().map(|r| r.exit_code).max().unwrap_or(0);
    let single = files.len() == 1;
    for r in reports {
        let v = r.into_value();
        let text = if single { serde_json::to_string_pretty(&v) } else { serde_json::to_string(&v) };
        println!("{}", text.expect("reports serialize"));
    }
    ExitCode::from(code as u8)
}
