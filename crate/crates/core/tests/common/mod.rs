//! Seeded instance generators and per-instance checks shared by the
//! property suites and the acceptance harness. Each check returns
//! `Ok(true)` when the instance was audited, `Ok(false)` when it fell
//! outside the property's hypotheses, and `Err` describing a violation.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use quadlemma::gtrs;
use quadlemma::numrange;
use quadlemma::oracle::{self, E1Oracle, E2Oracle, MidpointOracle};
use quadlemma::qp1eqc;
use quadlemma::scond;
use quadlemma::slemma;
use quadlemma::symlin;
use quadlemma::{
    Error, GtrsProblem, NumrangeProblem, Qp1eqcProblem, QuadForm, Status, SymMatrix, Tolerances,
};
use proptest::test_runner::{Config as ProptestConfig, RngSeed, TestCaseError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<bool, String>;

/// Property-run settings: a fixed generator seed and no persisted failure
/// files, so every run explores the same instances.
pub fn prop_config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(0x51e4_4a11),
        ..ProptestConfig::default()
    }
}

/// Turns a check into a proptest verdict; skipped instances pass.
pub fn holds(c: Check) -> Result<(), TestCaseError> {
    c.map(|_| ()).map_err(TestCaseError::fail)
}

pub fn tols() -> Tolerances<f64> {
    Tolerances::default()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Errors that mean "instance outside the hypotheses" rather than a bug.
fn skip(e: &Error) -> bool {
    matches!(
        e,
        Error::InfeasibleConstraint
            | Error::InfeasibleProblem
            | Error::SlaterViolation
            | Error::StrictFeasibilityViolation
            | Error::E1Violated
            | Error::HypothesisViolation(_)
            | Error::Precondition(_)
    )
}

macro_rules! tryc {
    ($e:expr, $what:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) if skip(&e) => return Ok(false),
            Err(e) => return Err(format!("{}: {e}", $what)),
        }
    };
}

fn entry(rng: &mut ChaCha8Rng, integer: bool) -> f64 {
    if integer {
        rng.random_range(-2i32..=2) as f64
    } else {
        rng.random_range(-2.0..2.0)
    }
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    match rng.random_range(0..4) {
        0 => DVector::zeros(n),
        1 => DVector::from_fn(n, |_, _| entry(rng, true)),
        _ => DVector::from_fn(n, |_, _| entry(rng, false)),
    }
}

pub fn rand_scalar(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => 0.0,
        1 => entry(rng, true),
        _ => entry(rng, false),
    }
}

/// A symmetric matrix drawn from a mix of generic, integer, low-rank,
/// semidefinite and zero structures so that degenerate branches get hit.
pub fn rand_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix<f64> {
    let m = match rng.random_range(0..7) {
        0 => DMatrix::zeros(n, n),
        1 | 2 => {
            let integer = rng.random_bool(0.5);
            let g = DMatrix::from_fn(n, n, |_, _| entry(rng, integer));
            (&g + g.transpose()) * 0.5
        }
        3 => {
            let r = rng.random_range(1..=n);
            let mut acc = DMatrix::zeros(n, n);
            for _ in 0..r {
                let v = DVector::from_fn(n, |_, _| entry(rng, true));
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                acc += &v * v.transpose() * s;
            }
            acc
        }
        4 => {
            let g = DMatrix::from_fn(n, n, |_, _| entry(rng, false));
            let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            g.transpose() * &g * s
        }
        _ => DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| entry(rng, true))),
    };
    SymMatrix::new(m).expect("generated matrix is symmetric")
}

pub fn rand_form(rng: &mut ChaCha8Rng, n: usize) -> QuadForm<f64> {
    let a = rand_sym(rng, n);
    let b = rand_vec(rng, n);
    let c = rand_scalar(rng);
    QuadForm::new(a, b, c).unwrap()
}

/// A random pair `(f, h)` with `1 <= n <= 4`; `h` is affine a quarter of
/// the time.
pub fn rand_pair(seed: u64) -> (QuadForm<f64>, QuadForm<f64>) {
    let mut r = rng(seed);
    let n = r.random_range(1..=4);
    let f = rand_form(&mut r, n);
    let mut h = rand_form(&mut r, n);
    if r.random_bool(0.25) {
        h.quad = SymMatrix::zeros(n);
    }
    (f, h)
}

/// Smallest eigenvalue of a symmetric matrix, computed without the crate.
pub fn independent_lambda_min(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// PSD up to `1e-7 (1 + ||M||)`, looser than the crate's own test.
pub fn independent_psd(m: &DMatrix<f64>) -> bool {
    independent_lambda_min(m) >= -1e-7 * (1.0 + inf_norm(m))
}

fn lift_of(q: &QuadForm<f64>) -> DMatrix<f64> {
    q.lift().into_inner()
}

/// Every multiplier the decision procedures return passes an eigenvalue
/// check done with nalgebra directly.
pub fn check_certificate_soundness(seed: u64) -> Check {
    let (f, h) = rand_pair(seed);
    let t = tols();
    let v = tryc!(slemma::slemma_equality(&f, &h, &t, seed), "slemma_equality");
    if let Some(mu) = v.certificate {
        if !independent_psd(&lift_of(&f.add_scaled(&h, mu))) {
            return Err(format!("equality certificate mu = {mu} fails the PSD check"));
        }
    }
    if v.e1_true {
        let c = tryc!(slemma::regularized_lambda(&f, &h, 0.1, &t, seed), "regularized_lambda");
        let g = if c.exponent == 2 { h.affine_square() } else { h.clone() };
        if !independent_psd(&lift_of(&f.regularized(c.epsilon).add_scaled(&g, c.lambda_eps))) {
            return Err(format!("regularized lambda = {} fails the PSD check", c.lambda_eps));
        }
    }
    if let Ok(vi) = slemma::slemma_inequality(&f, &h, &t, seed) {
        if let Some(mu) = vi.certificate {
            if mu < 0.0 || !independent_psd(&lift_of(&f.add_scaled(&h, mu))) {
                return Err(format!("inequality certificate mu = {mu} is unsound"));
            }
        }
    }
    if h.quad.is_zero(0.0) && h.lin.norm() > 0.0 {
        let (l, u) = (-1.0, 1.0);
        if let Some(nu) = tryc!(gtrs::exception_nu(&f, &h, l, u, &t), "exception_nu") {
            let m = gtrs::exception_matrix_interval(&f, &h, l, u, nu, &t).unwrap();
            if nu < 0.0 || !independent_psd(m.as_matrix()) {
                return Err(format!("exception nu = {nu} fails the PSD check"));
            }
        }
        let vi = tryc!(gtrs::interval_slemma(&f, &h, l, u, &t, seed), "interval_slemma");
        if let Some(mu) = vi.mu {
            if !independent_psd(&lift_of(&gtrs::interval_combination(&f, &h, l, u, mu))) {
                return Err(format!("interval certificate mu = {mu} fails the PSD check"));
            }
        }
    }
    Ok(true)
}

/// The decision procedure never contradicts the brute-force oracles.
pub fn check_oracle_consistency(seed: u64, samples: usize) -> Check {
    let (f, h) = rand_pair(seed);
    let t = tols();
    let v = tryc!(slemma::slemma_equality(&f, &h, &t, seed), "slemma_equality");
    if let Some(x) = &v.counterexample {
        let scale = 1.0 + h.data_norm() * (1.0 + x.norm_squared());
        if h.value(x).abs() > 1e-6 * scale || f.value(x) >= 0.0 {
            return Err(format!("counterexample {x:?} is not a violation: h = {}, f = {}", h.value(x), f.value(x)));
        }
    }
    if let E1Oracle::FalseWithWitness(x) = oracle::oracle_e1(&f, &h, samples, seed, &t) {
        if v.e1_true {
            return Err(format!("e1 reported true but f({x:?}) = {} on h = 0", f.value(&x)));
        }
    }
    let grid = oracle::mu_grid(-10.0, 10.0, 0.05);
    if let E2Oracle::FoundMu(mu) = oracle::oracle_e2(&f, &h, &grid, &t) {
        if !v.e2_true {
            return Err(format!("e2 reported false but grid multiplier {mu} works"));
        }
    }
    if v.e2_true && !v.e1_true {
        return Err("e2 true but e1 false".into());
    }
    Ok(true)
}

/// A single-equality problem satisfying the two-sided Slater condition
/// with `B != 0`, or `None` if the draw misses.
pub fn rand_qp1eqc(seed: u64) -> Option<Qp1eqcProblem<f64>> {
    let (f, h) = rand_pair(seed);
    let t = tols();
    if h.quad.is_zero(1e-12 * (1.0 + f.quad.norm_inf())) || !slemma::assumption1_holds(&h, &t).ok()? {
        return None;
    }
    Qp1eqcProblem::new(f, h).ok()
}

/// Attained solves have no duality gap and pass the global optimality
/// conditions; finite values come with an attained dual.
pub fn check_strong_duality(seed: u64) -> Check {
    let Some(p) = rand_qp1eqc(seed) else { return Ok(false) };
    let t = tols();
    let out = tryc!(qp1eqc::solve(&p, &t, seed), "solve");
    if out.status == Status::Unbounded {
        return Ok(false);
    }
    let profile = tryc!(qp1eqc::maximize_dual(&p, &t), "maximize_dual");
    let Some(mu) = profile.mu_star else {
        return Err(format!("finite value {} but dual maximum not attained", out.value));
    };
    let gap = (out.value - profile.value).abs();
    if gap > 1e-6 * (1.0 + out.value.abs()) {
        return Err(format!("duality gap {gap} at value {}", out.value));
    }
    if out.status == Status::Attained {
        let x = out.x_star.as_ref().ok_or("attained without x_star")?;
        let ms = out.mu_star.unwrap_or(mu);
        if !tryc!(qp1eqc::verify_global_optimality(&p, x, ms, &t), "verify_global_optimality") {
            return Err(format!("x* = {x:?}, mu* = {ms} fails the global optimality check"));
        }
        let fx = p.objective.value(x);
        if (fx - out.value).abs() > 1e-6 * (1.0 + out.value.abs()) {
            return Err(format!("f(x*) = {fx} differs from value {}", out.value));
        }
    }
    Ok(true)
}

/// Constraint functions biased toward the structures the four conditions
/// describe.
pub fn rand_scond_pair(seed: u64) -> (QuadForm<f64>, QuadForm<f64>) {
    let mut r = rng(seed);
    let n = r.random_range(1..=4);
    let f = rand_form(&mut r, n);
    let mut h = rand_form(&mut r, n);
    match r.random_range(0..5) {
        0 => {
            let g = DMatrix::from_fn(n, n, |_, _| entry(&mut r, false));
            let s = if r.random_bool(0.5) { 1.0 } else { -1.0 };
            h.quad = SymMatrix::new((g.transpose() * &g + DMatrix::identity(n, n) * 0.5) * s).unwrap();
        }
        1 => {
            h.lin = DVector::zeros(n);
            h.constant = 0.0;
        }
        2 => {
            h.constant = 0.0;
            let z = DVector::from_fn(n, |_, _| entry(&mut r, true));
            h.lin = h.quad.mul_vec(&z);
        }
        _ => {}
    }
    if r.random_bool(0.3) {
        h.constant = 0.0;
    }
    (f, h)
}

/// Implications among the conditions, and each condition being sufficient
/// for the equality lemma when `h` takes both signs.
pub fn check_scond(seed: u64) -> Check {
    let (f, h) = rand_scond_pair(seed);
    let t = tols();
    let s = tryc!(scond::all_sconditions(&f, &h, &t), "all_sconditions");
    if s[0] && !s[1] {
        return Err("condition 1 holds but condition 2 does not".into());
    }
    if s[0] && h.constant == 0.0 && !s[3] {
        return Err("condition 1 with h(0) = 0 holds but condition 4 does not".into());
    }
    if s[2] && !s[3] {
        return Err("condition 3 holds but condition 4 does not".into());
    }
    let two_signs = tryc!(slemma::assumption1_holds(&h, &t), "assumption1_holds");
    if two_signs && s.iter().any(|&b| b) {
        let v = tryc!(slemma::slemma_equality(&f, &h, &t, seed), "slemma_equality");
        if !v.equivalence_holds {
            return Err(format!("conditions {s:?} hold but the lemma fails on branch {}", v.branch.tag()));
        }
    }
    Ok(true)
}

fn rand_pd(r: &mut ChaCha8Rng, n: usize) -> SymMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| entry(r, false));
    SymMatrix::new(g.transpose() * &g + DMatrix::identity(n, n) * 0.1).unwrap()
}

/// `f` strictly convex: `rank(P) <= n - 1` gives a convex image and `p = n`
/// independent maps give a nonconvex one.
pub fn check_beck(seed: u64, convex: bool) -> Check {
    let mut r = rng(seed);
    let n = if convex { r.random_range(2..=4) } else { r.random_range(1..=4) };
    let a = rand_pd(&mut r, n);
    let f = QuadForm::new(a, rand_vec(&mut r, n), rand_scalar(&mut r)).unwrap();
    let affines: Vec<(DVector<f64>, f64)> = if convex {
        let rank = r.random_range(1..n);
        let basis: Vec<DVector<f64>> = (0..rank).map(|_| DVector::from_fn(n, |_, _| entry(&mut r, false))).collect();
        let p = r.random_range(1..=n + 1);
        (0..p)
            .map(|_| {
                let mut b = DVector::zeros(n);
                for v in &basis {
                    b += v * r.random_range(-1.0..1.0);
                }
                (b, rand_scalar(&mut r))
            })
            .collect()
    } else {
        let m = loop {
            let m = DMatrix::from_fn(n, n, |_, _| entry(&mut r, false));
            if m.determinant().abs() > 0.1 {
                break m;
            }
        };
        m.row_iter().map(|row| (row.transpose().into_owned(), rand_scalar(&mut r))).collect()
    };
    let p = NumrangeProblem::new(f, affines).unwrap();
    let v = tryc!(numrange::classify_convexity(&p, &tols()), "classify_convexity");
    if v.convex != convex {
        return Err(format!("expected convex = {convex}, got case {}", v.case.tag()));
    }
    Ok(true)
}

/// A random interval problem `l <= h <= u` with a strictly feasible point.
pub fn rand_gtrs(seed: u64) -> GtrsProblem<f64> {
    let mut r = rng(seed);
    let n = r.random_range(1..=3);
    let f = rand_form(&mut r, n);
    let mut h = rand_form(&mut r, n);
    if r.random_bool(0.25) {
        h.quad = SymMatrix::zeros(n);
    }
    let x0 = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
    let h0 = h.value(&x0);
    let l = h0 - r.random_range(0.1..2.0);
    let u = h0 + r.random_range(0.1..2.0);
    GtrsProblem::new(f, h, l, u).unwrap()
}

/// The global solver never loses to dense feasible sampling, and on
/// attained problems sampling comes within `1e-2` of it. A miss is retried
/// with ten and then a hundred times the budget before it counts, since
/// minimizers far from the origin are hard to hit.
pub fn check_gtrs_vs_sampling(seed: u64, samples: usize) -> Check {
    let p = rand_gtrs(seed);
    let t = tols();
    let out = tryc!(gtrs::solve_gtrs(&p, &t, seed), "solve_gtrs");
    let sample = |budget| oracle::gtrs_sampling_min(&p.objective, &p.constraint, p.l, p.u, budget, seed);
    let Some((mut s, x)) = sample(samples) else {
        return Err("no feasible sample on a strictly feasible problem".into());
    };
    if out.status == Status::Unbounded {
        return Ok(true);
    }
    let scale = 1.0 + out.value.abs();
    if s < out.value - 1e-6 * scale {
        return Err(format!("sampling found {s} at {x:?} below the solver value {}", out.value));
    }
    if out.status == Status::Attained {
        let xs = out.x_star.as_ref().ok_or("attained without x_star")?;
        let hx = p.constraint.value(xs);
        let band = 1e-6 * (1.0 + p.constraint.data_norm() * (1.0 + xs.norm_squared()));
        if hx < p.l - band || hx > p.u + band {
            return Err(format!("x* = {xs:?} is infeasible: h = {hx}"));
        }
        let fx = p.objective.value(xs);
        if (fx - out.value).abs() > 1e-6 * scale {
            return Err(format!("f(x*) = {fx} differs from the reported value {}", out.value));
        }
        for factor in [10, 100] {
            if s - out.value > 1e-2 * scale {
                s = sample(factor * samples).map_or(s, |(v, _)| v);
            }
        }
        if s - out.value > 1e-2 * scale {
            return Err(format!("sampling min {s} is more than 1e-2 above the solver value {}", out.value));
        }
    }
    Ok(true)
}

/// A midpoint outside the image refutes convexity, so the oracle must
/// never find one when the classifier says convex.
pub fn check_midpoint(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=3);
    let f = rand_form(&mut r, n);
    let p_count = r.random_range(1..=2);
    let affines = (0..p_count).map(|_| (DVector::from_fn(n, |_, _| entry(&mut r, false)), rand_scalar(&mut r))).collect();
    let p = NumrangeProblem::new(f, affines).unwrap();
    let t = tols();
    let v = tryc!(numrange::classify_convexity(&p, &t), "classify_convexity");
    if let MidpointOracle::Violation { midpoint, .. } = oracle::midpoint_oracle(&p, 100, seed, &t) {
        if v.convex {
            return Err(format!("classified convex but midpoint {midpoint:?} is outside the image"));
        }
    }
    Ok(true)
}

/// With `l = u` the interval lemma is the equality lemma for `h - l`.
pub fn check_interval_equals_equality(seed: u64) -> Check {
    let (f, h) = rand_pair(seed);
    let mut r = rng(seed ^ 0x5eed);
    let level = rand_scalar(&mut r);
    let t = tols();
    let eq = tryc!(slemma::slemma_equality(&f, &h.shifted(level), &t, seed), "slemma_equality");
    let iv = tryc!(gtrs::interval_slemma(&f, &h, level, level, &t, seed), "interval_slemma");
    if eq.equivalence_holds != iv.equivalence_holds || eq.e1_true != iv.i1_true || eq.e2_true != iv.i2_true {
        return Err(format!(
            "equality ({}, {}, {}) vs interval ({}, {}, {})",
            eq.equivalence_holds, eq.e1_true, eq.e2_true, iv.equivalence_holds, iv.i1_true, iv.i2_true
        ));
    }
    if iv.branch != Some(eq.branch) {
        return Err("interval verdict does not carry the equality branch".into());
    }
    Ok(true)
}

/// Identical seeds give identical samples and identical solves.
pub fn check_determinism(seed: u64) -> Check {
    let (f, h) = rand_pair(seed);
    let t = tols();
    if oracle::sample_constraint(&h, 50, seed, &t) != oracle::sample_constraint(&h, 50, seed, &t) {
        return Err("sample_constraint is not deterministic".into());
    }
    if oracle::gtrs_sampling_min(&f, &h, -1.0, 1.0, 50, seed) != oracle::gtrs_sampling_min(&f, &h, -1.0, 1.0, 50, seed) {
        return Err("gtrs_sampling_min is not deterministic".into());
    }
    let a = slemma::slemma_equality(&f, &h, &t, seed);
    let b = slemma::slemma_equality(&f, &h, &t, seed);
    if a != b {
        return Err("slemma_equality is not deterministic".into());
    }
    Ok(true)
}

/// Runs `check` over `count` seeds from `base`, returning (audited, violations).
pub fn sweep(base: u64, count: u64, check: impl Fn(u64) -> Check) -> (usize, Vec<String>) {
    let mut audited = 0;
    let mut bad = Vec::new();
    for s in base..base + count {
        match check(s) {
            Ok(true) => audited += 1,
            Ok(false) => {}
            Err(e) => bad.push(format!("seed {s}: {e}")),
        }
    }
    (audited, bad)
}

fn rel_err(m: &DMatrix<f64>, scale: f64) -> f64 {
    m.abs().max() / (1.0 + scale)
}

/// The four Penrose identities of the pseudo-inverse.
pub fn check_pinv_penrose(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=5);
    let m = rand_sym(&mut r, n);
    let p = symlin::pinv(&m, tols().eig);
    let (a, x) = (m.as_matrix(), p.as_matrix());
    let scale = a.abs().max() * (1.0 + x.abs().max()).powi(2);
    let ids = [
        a * x * a - a,
        x * a * x - x,
        (a * x).transpose() - a * x,
        (x * a).transpose() - x * a,
    ];
    for (i, d) in ids.iter().enumerate() {
        if rel_err(d, scale) > 1e-8 {
            return Err(format!("Penrose identity {} off by {}", i + 1, d.abs().max()));
        }
    }
    Ok(true)
}

/// Null basis columns are orthonormal, annihilated by `M`, and orthogonal
/// to the range of `M^T`.
pub fn check_null_basis(seed: u64) -> Check {
    let mut r = rng(seed);
    let rows = r.random_range(1..=5);
    let cols = r.random_range(1..=5);
    let rank = r.random_range(0..=rows.min(cols));
    let left = DMatrix::from_fn(rows, rank, |_, _| entry(&mut r, false));
    let right = DMatrix::from_fn(rank, cols, |_, _| entry(&mut r, false));
    let m = left * right;
    let k = symlin::null_basis(&m, tols().rank);
    let scale = 1.0 + m.abs().max();
    if (&m * &k).abs().max() > 1e-8 * scale {
        return Err(format!("M N has entries of size {}", (&m * &k).abs().max()));
    }
    let gram = k.transpose() * &k - DMatrix::identity(k.ncols(), k.ncols());
    if gram.abs().max() > 1e-8 {
        return Err("null basis is not orthonormal".into());
    }
    let row_space = m.transpose();
    if (k.transpose() * row_space).abs().max() > 1e-8 * scale {
        return Err("null basis is not orthogonal to the row space".into());
    }
    if k.ncols() + symlin::rank(&m, tols().rank) != cols {
        return Err("rank and nullity do not add up".into());
    }
    Ok(true)
}

fn pencil_tol(a: &DMatrix<f64>, b: &DMatrix<f64>, mu: f64) -> f64 {
    1e-7 * (1.0 + inf_norm(a) + mu.abs() * inf_norm(b))
}

fn pencil_lambda(a: &DMatrix<f64>, b: &DMatrix<f64>, mu: f64) -> f64 {
    independent_lambda_min(&(a + b * mu))
}

/// Points inside the pencil interval are PSD; points just outside are not
/// positive definite.
pub fn check_pencil_interval(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=5);
    let a = rand_sym(&mut r, n);
    let b = rand_sym(&mut r, n);
    let iv = tryc!(symlin::pencil_interval(&a, &b, &tols()), "pencil_interval");
    let (am, bm) = (a.as_matrix(), b.as_matrix());
    if iv.empty {
        for k in -20..=20 {
            let mu = k as f64 * 0.5;
            let l = pencil_lambda(am, bm, mu);
            if l > pencil_tol(am, bm, mu) {
                return Err(format!("interval empty but lambda_min({mu}) = {l}"));
            }
        }
        return Ok(true);
    }
    let lo = if iv.lo.is_finite() { iv.lo } else { iv.hi.min(0.0) - 50.0 };
    let hi = if iv.hi.is_finite() { iv.hi } else { iv.lo.max(0.0) + 50.0 };
    for k in 0..=10 {
        let mu = lo + (hi - lo) * k as f64 / 10.0;
        let l = pencil_lambda(am, bm, mu);
        if l < -pencil_tol(am, bm, mu) {
            return Err(format!("mu = {mu} inside [{}, {}] has lambda_min {l}", iv.lo, iv.hi));
        }
    }
    for mu in [iv.lo - 1e-6 * (1.0 + iv.lo.abs()), iv.hi + 1e-6 * (1.0 + iv.hi.abs())] {
        if mu.is_finite() {
            let l = pencil_lambda(am, bm, mu);
            if l >= pencil_tol(am, bm, mu) {
                return Err(format!("mu = {mu} outside [{}, {}] has lambda_min {l}", iv.lo, iv.hi));
            }
        }
    }
    Ok(true)
}

/// `mu -> lambda_min(A + mu B)` is concave.
pub fn check_lambda_min_concave(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=5);
    let a = rand_sym(&mut r, n);
    let b = rand_sym(&mut r, n);
    let g = |mu: f64| symlin::lambda_min(&a.add_scaled(&b, mu));
    for _ in 0..10 {
        let s = r.random_range(-5.0..5.0);
        let t = r.random_range(-5.0..5.0);
        let mid = g((s + t) / 2.0);
        let tol = 1e-9 * (1.0 + a.norm_inf() + 5.0 * b.norm_inf());
        if mid < (g(s) + g(t)) / 2.0 - tol {
            return Err(format!("midpoint of {s} and {t} breaks concavity"));
        }
    }
    Ok(true)
}

/// `[x; 1]^T lift(q) [x; 1] = q(x)`, and the lift round-trips.
pub fn check_lift_evaluate(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=5);
    let q = rand_form(&mut r, n);
    let lift = q.lift();
    for _ in 0..5 {
        let x = DVector::from_fn(n, |_, _| r.random_range(-3.0..3.0));
        let y = x.clone().insert_row(n, 1.0);
        let direct = q.evaluate(&x).map_err(|e| e.to_string())?;
        let lifted = lift.quad(&y);
        if (direct - lifted).abs() > 1e-10 * (1.0 + q.data_norm()) * (1.0 + x.norm_squared()) {
            return Err(format!("evaluate {direct} vs lifted {lifted}"));
        }
    }
    if QuadForm::from_lift(&lift) != q {
        return Err("from_lift does not invert lift".into());
    }
    Ok(true)
}

/// Every sampled value lies in the computed range and attained endpoints
/// come with a point achieving them.
pub fn check_value_range(seed: u64, samples: usize) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=4);
    let q = rand_form(&mut r, n);
    let vr = quadlemma::model::value_range(&q, &tols());
    for i in 0..samples {
        let s = [0.1, 1.0, 10.0, 100.0][i % 4];
        let x = DVector::from_fn(n, |_, _| r.random_range(-s..s));
        let v = q.value(&x);
        let tol = 1e-9 * (1.0 + q.data_norm()) * (1.0 + x.norm_squared());
        if !vr.contains_approx(v, tol) && !(v >= vr.lo - tol && v <= vr.hi + tol) {
            return Err(format!("q({x:?}) = {v} outside [{}, {}]", vr.lo, vr.hi));
        }
    }
    for (attained, end, point) in [(vr.lo_attained, vr.lo, &vr.lo_point), (vr.hi_attained, vr.hi, &vr.hi_point)] {
        if attained {
            let x = point.as_ref().ok_or("attained endpoint without a point")?;
            if (q.value(x) - end).abs() > 1e-8 * (1.0 + q.data_norm()) * (1.0 + x.norm_squared()) {
                return Err(format!("endpoint {end} but q(point) = {}", q.value(x)));
            }
        }
    }
    Ok(true)
}

/// The dispatcher answers every pair with a nonempty constraint set.
pub fn check_dispatcher_totality(seed: u64) -> Check {
    let (f, h) = if seed.is_multiple_of(2) { rand_pair(seed) } else { rand_scond_pair(seed) };
    match slemma::slemma_equality(&f, &h, &tols(), seed) {
        Ok(v) => {
            if v.equivalence_holds != (v.e1_true == v.e2_true) {
                return Err("equivalence flag disagrees with e1 and e2".into());
            }
            Ok(true)
        }
        Err(Error::InfeasibleConstraint) => Ok(false),
        Err(e) => Err(format!("slemma_equality failed: {e}")),
    }
}

/// Pairs with affine `h` and `A` having one negative eigenvalue, the shape
/// where the exceptional case can occur.
pub fn rand_exception_shape(seed: u64) -> (QuadForm<f64>, QuadForm<f64>) {
    let mut r = rng(seed);
    let n = r.random_range(2..=4);
    let q = SymmetricEigen::new(DMatrix::from_fn(n, n, |_, _| entry(&mut r, false)).symmetric_part()).eigenvectors;
    let mut d: Vec<f64> = (0..n).map(|_| r.random_range(0..3) as f64 * 0.5).collect();
    d[0] = -r.random_range(0.5..2.0);
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(d)) * q.transpose();
    let f = QuadForm::new(SymMatrix::symmetrized(a).unwrap().0, rand_vec(&mut r, n), rand_scalar(&mut r)).unwrap();
    let mut b = rand_vec(&mut r, n);
    if b.norm() == 0.0 {
        b[0] = 1.0;
    }
    let h = QuadForm::affine(b, rand_scalar(&mut r));
    (f, h)
}

trait SymPart {
    fn symmetric_part(&self) -> DMatrix<f64>;
}

impl SymPart for DMatrix<f64> {
    fn symmetric_part(&self) -> DMatrix<f64> {
        (self + self.transpose()) * 0.5
    }
}

/// The exceptional branch fires exactly when (E1) holds and no multiplier
/// exists, for two-sign `h`.
pub fn check_exception_shape(seed: u64) -> Check {
    let (f, h) = rand_exception_shape(seed);
    let t = tols();
    let v = tryc!(slemma::slemma_equality(&f, &h, &t, seed), "slemma_equality");
    let search = slemma::e2_certificate_search(&f, &h, slemma::SignConstraint::Free, &t);
    let (e1, _) = tryc!(slemma::e1_check(&f, &h, &t, seed), "e1_check");
    let shape = search.is_none() && e1;
    let exception = v.branch == slemma::Branch::Thm3Exception;
    if exception != shape {
        return Err(format!("branch {} but search = {search:?}, e1 = {e1}", v.branch.tag()));
    }
    Ok(true)
}

/// A regularized multiplier for `eps` stays valid for any larger `eps`.
pub fn check_regularized_monotone(seed: u64) -> Check {
    let (f, h) = rand_pair(seed);
    let t = tols();
    let mut r = rng(seed ^ 0xe9);
    let eps = r.random_range(1e-3..1.0);
    let cert = tryc!(slemma::regularized_lambda(&f, &h, eps, &t, seed), "regularized_lambda");
    for factor in [1.5, 10.0, 1e3] {
        let bigger = slemma::RegularizedCertificate { epsilon: eps * factor, ..cert };
        if !slemma::regularized_certificate_is_valid(&f, &h, &bigger, &t) {
            return Err(format!("certificate for eps = {eps} fails at eps = {}", eps * factor));
        }
    }
    Ok(true)
}

/// Dual values never exceed feasible primal values, and the dual is
/// concave on its domain.
pub fn check_weak_duality_and_concavity(seed: u64) -> Check {
    let Some(p) = rand_qp1eqc(seed) else { return Ok(false) };
    let t = tols();
    let xs = oracle::sample_constraint(&p.constraint, 200, seed, &t);
    let grid = oracle::mu_grid(-10.0, 10.0, 0.1);
    let finite: Vec<(f64, f64)> = grid
        .iter()
        .map(|&mu| (mu, qp1eqc::dual_value(&p, mu, &t)))
        .filter(|(_, d)| d.is_finite())
        .collect();
    for &(mu, d) in &finite {
        for x in &xs {
            let fx = p.objective.value(x);
            let slack = 1e-6 * (1.0 + p.data_norm() * (1.0 + mu.abs()) * (1.0 + x.norm_squared()));
            if d > fx + slack {
                return Err(format!("d({mu}) = {d} exceeds f = {fx} at a feasible point"));
            }
        }
    }
    for w in finite.windows(3) {
        let (m0, d0) = w[0];
        let (m2, d2) = w[2];
        let (m1, d1) = w[1];
        let adjacent = (m2 - m0 - 0.2).abs() < 1e-9;
        let chord = d0 + (d2 - d0) * (m1 - m0) / (m2 - m0);
        if adjacent && d1 < chord - 1e-6 * (1.0 + d0.abs().max(d2.abs())) {
            return Err(format!("dual not concave around mu = {m1}"));
        }
    }
    Ok(true)
}

/// Exactly one outcome, with the fields that outcome promises.
pub fn check_trichotomy(seed: u64) -> Check {
    let Some(p) = rand_qp1eqc(seed) else { return Ok(false) };
    let out = tryc!(qp1eqc::solve(&p, &tols(), seed), "solve");
    let ok = match out.status {
        Status::Attained => out.x_star.is_some() && out.value.is_finite() && out.witness.is_none(),
        Status::Unattained => out.x_star.is_none() && out.value.is_finite() && out.witness.is_some(),
        Status::Unbounded => out.value == f64::NEG_INFINITY && out.x_star.is_none(),
    };
    if !ok {
        return Err(format!("{:?} outcome with inconsistent fields", out.status));
    }
    Ok(true)
}

/// `z1^2 + sum c_i z_i^2 + c` subject to `z1 z2 - 1 + sum e_i z_i^2 = 0`,
/// whose infimum `c` is approached as `z2 -> inf` but never attained,
/// seen through a random invertible affine change of variables.
pub fn rand_unattained(seed: u64) -> Qp1eqcProblem<f64> {
    let mut r = rng(seed);
    let n = r.random_range(2..=4);
    let mut fz = DMatrix::zeros(n + 1, n + 1);
    let mut hz = DMatrix::zeros(n + 1, n + 1);
    fz[(0, 0)] = r.random_range(0.5..2.0);
    hz[(0, 1)] = 0.5;
    hz[(1, 0)] = 0.5;
    for i in 2..n {
        fz[(i, i)] = r.random_range(0.5..2.0);
        hz[(i, i)] = r.random_range(-1.0..1.0);
    }
    fz[(n, n)] = rand_scalar(&mut r);
    hz[(n, n)] = -r.random_range(0.5..2.0);
    let m = loop {
        let m = DMatrix::from_fn(n, n, |_, _| entry(&mut r, false));
        if m.determinant().abs() > 0.3 {
            break m;
        }
    };
    let mut pm = DMatrix::identity(n + 1, n + 1);
    pm.view_mut((0, 0), (n, n)).copy_from(&m);
    for i in 0..n {
        pm[(i, n)] = r.random_range(-1.0..1.0);
    }
    let lift = |l: &DMatrix<f64>| QuadForm::from_lift(&SymMatrix::symmetrized(pm.transpose() * l * &pm).unwrap().0);
    Qp1eqcProblem::new(lift(&fz), lift(&hz)).unwrap()
}

/// On unattained problems no feasible sample beats the infimum, and
/// samples pushed along the witness null space approach it.
pub fn check_unattained_approach(seed: u64) -> Check {
    let Some(p) = (if seed.is_multiple_of(4) { rand_qp1eqc(seed) } else { Some(rand_unattained(seed)) }) else { return Ok(false) };
    let t = tols();
    let out = tryc!(qp1eqc::solve(&p, &t, seed), "solve");
    if out.status != Status::Unattained {
        return Ok(false);
    }
    let w = out.witness.as_ref().ok_or("unattained without a witness")?;
    let scale = 1.0 + out.value.abs();
    for x in oracle::sample_constraint(&p.constraint, 2000, seed, &t) {
        let fx = p.objective.value(&x);
        if fx < out.value - 1e-6 * scale * (1.0 + x.norm_squared()).sqrt() {
            return Err(format!("feasible f = {fx} below the infimum {}", out.value));
        }
    }
    let n = p.dim();
    let mut r = rng(seed ^ 0xa5);
    let mut best = f64::INFINITY;
    for k in 0..4000 {
        let s = 10f64.powi(1 + (k % 5));
        let c = DVector::from_fn(w.v.ncols(), |_, _| r.random_range(-1.0..1.0));
        let jitter = 10f64.powi(-((k / 5) % 4));
        let x0 = &w.y0 + &w.v * c * s + DVector::from_fn(n, |_, _| r.random_range(-jitter..jitter));
        let u = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
        for root in p.constraint.line_roots(&x0, &u) {
            let x = &x0 + &u * root;
            if p.constraint.value(&x).abs() <= p.feas_tol_at(&x, &t) {
                best = best.min(p.objective.value(&x));
            }
        }
    }
    if best - out.value > 1e-2 * scale {
        return Err(format!("samples along the null space reach only {best}, infimum {}", out.value));
    }
    Ok(true)
}

/// The interval optimum is no worse than either boundary optimum.
pub fn check_gtrs_boundaries(seed: u64) -> Check {
    let p = rand_gtrs(seed);
    let t = tols();
    let out = tryc!(gtrs::solve_gtrs(&p, &t, seed), "solve_gtrs");
    let scale = 1.0 + out.value.abs();
    for level in [p.l, p.u] {
        let bp = p.boundary(level);
        if let Ok(b) = qp1eqc::solve(&bp, &t, seed) {
            if out.value > b.value + 1e-6 * (scale + b.value.abs()) {
                return Err(format!("interval value {} above boundary value {} at level {level}", out.value, b.value));
            }
        }
    }
    Ok(true)
}

/// Nonconvex single-map images: in case (i) the escape curve decreases in
/// both coordinates.
pub fn check_orthant(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=4);
    let f = rand_form(&mut r, n);
    let b1 = DVector::from_fn(n, |_, _| entry(&mut r, false));
    let d1 = rand_scalar(&mut r);
    let t = tols();
    let v = tryc!(numrange::classify_orthant_p1(&f, &b1, d1, &t), "classify_orthant_p1");
    let h = QuadForm::affine(b1.clone(), d1);
    match v.case {
        quadlemma::OrthantCase::I => {
            let z = v.escape_direction.as_ref().ok_or("case (i) without a direction")?;
            let ts = [10.0, 100.0, 1000.0];
            let fu: Vec<f64> = ts.iter().map(|&s| f.value(&(z * s))).collect();
            let hv: Vec<f64> = ts.iter().map(|&s| h.value(&(z * s))).collect();
            if !(fu[0] > fu[1] && fu[1] > fu[2] && hv[0] > hv[1] && hv[1] > hv[2]) {
                return Err(format!("escape curve not decreasing: f {fu:?}, h {hv:?}"));
            }
        }
        quadlemma::OrthantCase::Ii => {
            let alpha = v.alpha.ok_or("case (ii) without alpha")?;
            let target = b1.clone() * b1.transpose() * alpha;
            if alpha <= 0.0 || (f.quad.as_matrix() - target).abs().max() > 1e-8 * (1.0 + f.quad.norm_inf()) {
                return Err(format!("case (ii) with alpha = {alpha} does not reproduce A"));
            }
        }
    }
    Ok(true)
}

/// Witnesses returned by the oracles are genuine.
pub fn check_oracle_witnesses(seed: u64) -> Check {
    let (f, h) = rand_pair(seed);
    let t = tols();
    if let E1Oracle::FalseWithWitness(x) = oracle::oracle_e1(&f, &h, 500, seed, &t) {
        let hs = 1e-6 * (1.0 + h.data_norm() * (1.0 + x.norm_squared()));
        if h.value(&x).abs() > hs || f.value(&x) >= 0.0 {
            return Err(format!("e1 witness {x:?} has h = {}, f = {}", h.value(&x), f.value(&x)));
        }
    }
    let grid = oracle::mu_grid(-10.0, 10.0, 0.5);
    if let E2Oracle::FoundMu(mu) = oracle::oracle_e2(&f, &h, &grid, &t) {
        if !independent_psd(&lift_of(&f.add_scaled(&h, mu))) {
            return Err(format!("e2 oracle multiplier {mu} is not PSD"));
        }
    }
    if let Some((v, x)) = oracle::gtrs_sampling_min(&f, &h, -1.0, 1.0, 300, seed) {
        let hx = h.value(&x);
        let band = 1e-6 * (1.0 + h.data_norm() * (1.0 + x.norm_squared()));
        if hx < -1.0 - band || hx > 1.0 + band || (f.value(&x) - v).abs() > 1e-9 * (1.0 + v.abs()) {
            return Err(format!("sampling minimum {v} at an infeasible or mislabeled point"));
        }
    }
    Ok(true)
}
