//! Acceptance criteria, one status line per criterion on standard error.
//!
//! The lines are written straight to the stderr handle so they show up even
//! though the test harness captures `println!`.

use std::io::Write;
use std::time::{Duration, Instant};

use momlab::christoffel::{assemble_t, chain_meeting_residual, darboux, darboux_permuted, run_chain, BidiagonalChain};
use momlab::oracles::{polynomial_oracle, recurrence_oracle, ClassicalFamily};
use momlab::scalar::parse_rational;
use momlab::verify::cycling;
use momlab::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Float, Rational};

const TOL_EXP: u32 = 32;

fn tol<S: Scalar>(ctx: &PrecisionContext) -> S {
    let t = Rational::from((1, rug::Integer::from(rug::Integer::u_pow_u(10, TOL_EXP))));
    S::from_rational(&t, ctx)
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn r(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn report(id: &str, title: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{status}] {id} {title}: {detail}");
}

fn fact(n: u64) -> rug::Integer {
    rug::Integer::from(rug::Integer::factorial(n as u32))
}

fn binom(n: u64, k: u64) -> rug::Integer {
    rug::Integer::from(rug::Integer::binomial_u(n as u32, k as u32))
}

/// Coefficient of `x^k` in the monic Laguerre polynomial of degree `n`.
fn monic_laguerre(n: u64, k: u64) -> Rational {
    let sign = if (n - k).is_multiple_of(2) { 1 } else { -1 };
    Rational::from(binom(n, k) * fact(n) / fact(k)) * sign
}

fn criterion_1() -> (bool, String) {
    let start = Instant::now();
    let ctx = PrecisionContext::rational();
    let mm = MeasureMatrix::<Rational>::laguerre_first_kind(
        LaguerreFirstKindParams { alpha: vec![q(0, 1)], beta: vec![q(0, 1)] },
        &ctx,
    )
    .unwrap();
    let n = 6;
    let m = MomentMatrix::build(&mm, n, n).unwrap();
    let f = factorize(&m, n, &ctx).unwrap();
    let mut failures = Vec::new();
    for i in 0..n {
        let expected = Rational::from(fact(i as u64) * fact(i as u64));
        if f.d()[i] != expected {
            failures.push(format!("D_{i}"));
        }
    }
    let l = f.lower(Side::Left);
    for row in 0..n {
        for col in 0..=row {
            if l[(row, col)] != monic_laguerre(row as u64, col as u64) {
                failures.push(format!("L_L[{row}][{col}]"));
            }
        }
    }
    if l[(2, 0)] != 2 || l[(2, 1)] != -4 || l[(2, 2)] != 1 {
        failures.push("B_2 = x^2 - 4x + 2".into());
    }
    // chain windows are n_max + 2 = 6
    let n_max = n - 2;
    let left = run_chain(&mm, Side::Left, 1, n_max).unwrap();
    let right = run_chain(&mm, Side::Right, 1, n_max).unwrap();
    for i in 0..n - 1 {
        if left.off_diagonal(1, i).unwrap() != (i + 1) as i64 {
            failures.push(format!("(L_1)[{}][{i}]", i + 1));
        }
        if right.off_diagonal(1, i).unwrap() != (i + 1) as i64 {
            failures.push(format!("(U_1)[{i}][{}]", i + 1));
        }
    }
    let t = build_t(&f, Side::Left, n_max).unwrap();
    for i in 0..=n_max {
        if *t.get(i, i) != (2 * i + 1) as i64 {
            failures.push(format!("T[{i}][{i}]"));
        }
        if i < n_max {
            if *t.get(i + 1, i) != ((i + 1) * (i + 1)) as i64 {
                failures.push(format!("T[{}][{i}]", i + 1));
            }
            if *t.get(i, i + 1) != 1 {
                failures.push(format!("T[{i}][{}]", i + 1));
            }
        }
    }
    let (assembled, res) = assemble_t(&left, &right, Side::Left, n_max).unwrap();
    if res != 0 || assembled.entries() != t.entries() {
        failures.push("assembled T_L".into());
    }
    let stieltjes = recurrence_oracle(&ClassicalFamily::Laguerre { alpha: q(0, 1) }, &t, &ctx).unwrap();
    if stieltjes.max_abs_deviation != 0 {
        failures.push("Stieltjes".into());
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(1) {
        failures.push(format!("runtime {elapsed:?}"));
    }
    let pass = failures.is_empty();
    let detail = if pass {
        format!("D, L_L, L_1, U_1, T_L and Stieltjes exact in {elapsed:?}")
    } else {
        format!("mismatches: {}", failures.join(", "))
    };
    (pass, detail)
}

/// One family configuration of the main floating-point runs.
struct Run {
    label: String,
    mm: MeasureMatrix<Float>,
    left: BidiagonalChain<Float>,
    right: BidiagonalChain<Float>,
}

const N_MAX: usize = 12;

fn float_runs(digits: u32) -> (Vec<Run>, Duration) {
    let start = Instant::now();
    let ctx = PrecisionContext::bigfloat(digits).unwrap();
    let alphas = ["0", "1/2", "4/5"];
    let betas = ["0", "1/3"];
    let mut runs = Vec::new();
    for (p, qq) in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 2)] {
        let alpha: Vec<Rational> = alphas[..p].iter().map(|s| r(s)).collect();
        let beta: Vec<Rational> = betas[..qq].iter().map(|s| r(s)).collect();
        let families = [
            (
                "jacobi-pineiro",
                MeasureMatrix::jacobi_pineiro(
                    JacobiPineiroParams { alpha: alpha.clone(), beta: beta.clone(), gamma: q(0, 1) },
                    &ctx,
                )
                .unwrap(),
            ),
            (
                "laguerre",
                MeasureMatrix::laguerre_first_kind(
                    LaguerreFirstKindParams { alpha: alpha.clone(), beta: beta.clone() },
                    &ctx,
                )
                .unwrap(),
            ),
        ];
        for (name, mm) in families {
            let left = run_chain(&mm, Side::Left, p, N_MAX).unwrap();
            let right = run_chain(&mm, Side::Right, qq, N_MAX).unwrap();
            runs.push(Run {
                label: format!("{name} (p,q)=({p},{qq})"),
                mm,
                left,
                right,
            });
        }
    }
    (runs, start.elapsed())
}

fn worst_over<F>(runs: &[Run], mut f: F) -> (Float, String)
where
    F: FnMut(&Run) -> Float,
{
    let mut worst: Option<(Float, String)> = None;
    for run in runs {
        let v = f(run);
        if worst.as_ref().is_none_or(|(w, _)| v > *w) {
            worst = Some((v, run.label.clone()));
        }
    }
    worst.expect("at least one run")
}

fn fmt(v: &Float) -> String {
    format!("{:.3e}", v.to_f64())
}

fn criterion_2(runs: &[Run], build_time: Duration) -> (bool, String) {
    let start = Instant::now();
    let ctx = runs[0].mm.context().clone();
    let (worst, label) = worst_over(runs, |run| {
        let (_, a) = assemble_t(&run.left, &run.right, Side::Left, N_MAX).unwrap();
        let (_, b) = assemble_t(&run.left, &run.right, Side::Right, N_MAX).unwrap();
        if a > b {
            a
        } else {
            b
        }
    });
    let elapsed = build_time + start.elapsed();
    let pass = worst <= tol::<Float>(&ctx) && elapsed < Duration::from_secs(30);
    (
        pass,
        format!(
            "{} runs, max theorem residual {} ({label}) at n_max={N_MAX}, {elapsed:?}",
            runs.len(),
            fmt(&worst)
        ),
    )
}

/// Random discrete systems with rational nodes and positive weights.
fn random_discrete(rng: &mut ChaCha8Rng, ctx: &PrecisionContext) -> MeasureMatrix<Rational> {
    let p = rng.gen_range(1..=2);
    let qq = rng.gen_range(1..=2);
    let count = 16;
    let mut nodes: Vec<Rational> = Vec::new();
    while nodes.len() < count {
        let x = Rational::from((rng.gen_range(-40i64..=40), rng.gen_range(1i64..=9)));
        if !nodes.contains(&x) {
            nodes.push(x);
        }
    }
    let weights = (0..count)
        .map(|_| Matrix::from_fn(qq, p, |_, _| Rational::from((rng.gen_range(1i64..=20), rng.gen_range(1i64..=7)))))
        .collect();
    MeasureMatrix::discrete(nodes, weights, ctx).unwrap()
}

struct ExactRun {
    left: BidiagonalChain<Rational>,
    right: BidiagonalChain<Rational>,
    p: usize,
    q: usize,
}

fn exact_runs() -> Vec<ExactRun> {
    let ctx = PrecisionContext::rational();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    (0..8)
        .map(|_| {
            let mm = random_discrete(&mut rng, &ctx);
            let (p, qq) = (mm.p(), mm.q());
            // window N = n_max + max(p, q) + 1 = 10
            let n_max = 10 - p.max(qq) - 1;
            ExactRun {
                left: run_chain(&mm, Side::Left, p, n_max).unwrap(),
                right: run_chain(&mm, Side::Right, qq, n_max).unwrap(),
                p,
                q: qq,
            }
        })
        .collect()
}

fn criterion_3(runs: &[Run], exact: &[ExactRun]) -> (bool, String) {
    let ctx = runs[0].mm.context().clone();
    let (worst, label) = worst_over(runs, |run| {
        let a = run.left.triple_equality_max().unwrap();
        let b = run.right.triple_equality_max().unwrap();
        if a > b {
            a
        } else {
            b
        }
    });
    let mut exact_ok = true;
    for run in exact {
        for chain in [&run.left, &run.right] {
            exact_ok &= chain.triple_equality_max().unwrap() == 0;
            exact_ok &= chain.bidiagonality_residual() == 0;
        }
    }
    let pass = worst <= tol::<Float>(&ctx) && exact_ok;
    let shapes: Vec<String> = exact.iter().map(|e| format!("({},{})", e.p, e.q)).collect();
    (
        pass,
        format!(
            "float max {} ({label}); rational discrete systems {} exact: {exact_ok}",
            fmt(&worst),
            shapes.join(" ")
        ),
    )
}

fn criterion_4(runs: &[Run], exact: &[ExactRun]) -> (bool, String) {
    let ctx = runs[0].mm.context().clone();
    let (worst, label) = worst_over(runs, |run| {
        let mut w = Float::new(ctx.bits());
        let (p, qq) = (run.mm.p(), run.mm.q());
        for (side, count) in [(Side::Left, p), (Side::Right, qq)] {
            let base = build_t(&run.left.stages()[0].factors, side, N_MAX).unwrap();
            let chain = if side == Side::Left { &run.left } else { &run.right };
            for k in 1..=count {
                let (_, a) = darboux_permuted(&run.left, &run.right, side, k, N_MAX).unwrap();
                let (_, b) = darboux(chain, &base, k).unwrap();
                for v in [a, b] {
                    if v > w {
                        w = v;
                    }
                }
            }
        }
        w
    });
    let mut exact_ok = true;
    for run in exact {
        let n_max = run.left.n_max();
        for (side, count) in [(Side::Left, run.p), (Side::Right, run.q)] {
            let chain = if side == Side::Left { &run.left } else { &run.right };
            let base = build_t(&chain.stages()[0].factors, side, n_max).unwrap();
            for k in 1..=count {
                exact_ok &= darboux_permuted(&run.left, &run.right, side, k, n_max).unwrap().1 == 0;
                exact_ok &= darboux(chain, &base, k).unwrap().1 == 0;
            }
        }
    }
    let pass = worst <= tol::<Float>(&ctx) && exact_ok;
    (
        pass,
        format!("float max {} ({label}); rational discrete exact: {exact_ok}", fmt(&worst)),
    )
}

fn criterion_5(runs: &[Run]) -> (bool, String) {
    let ctx = runs[0].mm.context().clone();
    let mut shifts_equal = true;
    for run in runs {
        let (p, qq) = (run.mm.p(), run.mm.q());
        let size = N_MAX + p.max(qq) + 1 + p.max(qq);
        let m = MomentMatrix::build(&run.mm, size, size).unwrap();
        let a = m.shift_left(p).unwrap();
        let b = m.shift_right(qq).unwrap();
        let (rows, cols) = (a.rows().min(b.rows()), a.cols().min(b.cols()));
        shifts_equal &= a.entries().block(rows, cols) == b.entries().block(rows, cols);
    }
    let (worst, label) = worst_over(runs, |run| chain_meeting_residual(&run.left, &run.right).unwrap());
    let pass = shifts_equal && worst <= tol::<Float>(&ctx);
    (
        pass,
        format!(
            "moment shifts identical: {shifts_equal}; max D^(p) vs D^(q) deviation {} ({label})",
            fmt(&worst)
        ),
    )
}

fn criterion_6(runs: &[Run]) -> (bool, String) {
    let ctx = runs[0].mm.context().clone();
    let (worst_poly, label) = worst_over(runs, |run| {
        polynomial_oracle(&run.mm, &run.left.stages()[0].factors, N_MAX, &ctx)
            .unwrap()
            .max_abs_deviation
    });
    let mut stieltjes = Vec::new();
    for run in runs.iter().filter(|r| r.mm.p() == 1 && r.mm.q() == 1) {
        let family = ClassicalFamily::from_measure(&run.mm).unwrap();
        let t = build_t(&run.left.stages()[0].factors, Side::Left, N_MAX).unwrap();
        stieltjes.push(recurrence_oracle(&family, &t, &ctx).unwrap().max_abs_deviation);
    }
    let worst_stieltjes = stieltjes
        .into_iter()
        .fold(Float::new(ctx.bits()), |a, b| if b > a { b } else { a });
    let t = tol::<Float>(&ctx);
    let pass = worst_poly <= t && worst_stieltjes <= t;
    (
        pass,
        format!(
            "direct solve max {} ({label}), n <= {N_MAX}; Stieltjes max {}",
            fmt(&worst_poly),
            fmt(&worst_stieltjes)
        ),
    )
}

fn criterion_7() -> (bool, String) {
    let ctx = PrecisionContext::bigfloat(64).unwrap();
    let alphas = ["0", "1/2", "4/5"];
    let mut pass = true;
    let mut notes = Vec::new();
    for p in [2, 3] {
        let alpha: Vec<Rational> = alphas[..p].iter().map(|s| r(s)).collect();
        let beta: Vec<Rational> = vec![q(0, 1), q(1, 3)];
        let systems: [(&str, MeasureMatrix<Float>); 2] = [
            (
                "jacobi-pineiro",
                MeasureMatrix::jacobi_pineiro(
                    JacobiPineiroParams { alpha: alpha.clone(), beta: beta.clone(), gamma: q(0, 1) },
                    &ctx,
                )
                .unwrap(),
            ),
            (
                "laguerre",
                MeasureMatrix::laguerre_first_kind(LaguerreFirstKindParams { alpha, beta }, &ctx).unwrap(),
            ),
        ];
        for (name, mm) in systems {
            let res = cycling(&mm, 6).unwrap();
            for side in ["left", "right"] {
                let matching = &res.details[side]["matching"];
                let ok = *matching == serde_json::json!(["forward"]);
                pass &= ok;
                notes.push(format!("{name} p={p} {side}: {matching}"));
            }
        }
    }
    (pass, format!("only the forward map matches the shifted moments; {}", notes.join("; ")))
}

fn theorem_residual(ctx: &PrecisionContext, n_max: usize) -> Result<Float> {
    let mm = MeasureMatrix::<Float>::jacobi_pineiro(
        JacobiPineiroParams { alpha: vec![q(0, 1), q(1, 2)], beta: vec![q(0, 1)], gamma: q(0, 1) },
        ctx,
    )?;
    let left = run_chain(&mm, Side::Left, 2, n_max)?;
    let right = run_chain(&mm, Side::Right, 1, n_max)?;
    let (_, a) = assemble_t(&left, &right, Side::Left, n_max)?;
    let (_, b) = assemble_t(&left, &right, Side::Right, n_max)?;
    Ok(if a > b { a } else { b })
}

fn criterion_8() -> String {
    let digits = 16;
    let ctx = PrecisionContext::bigfloat(digits).unwrap();
    let mut notes = Vec::new();
    for n_max in [10, 12] {
        let outcome = match theorem_residual(&ctx, n_max) {
            Ok(res) => format!("theorem residual {} (> 1e-8: {})", fmt(&res), res.to_f64() > 1e-8),
            Err(e) => format!("{e}"),
        };
        notes.push(format!("n_max={n_max}: {outcome}"));
    }
    format!("digits={digits}, jacobi-pineiro (2,1): {}", notes.join("; "))
}

#[test]
fn acceptance_criteria() {
    let mut all = true;
    let (pass, detail) = criterion_1();
    report("C1", "hand anchors, rational Laguerre", pass, &detail);
    all &= pass;

    let (runs, build_time) = float_runs(64);
    let exact = exact_runs();

    let (pass, detail) = criterion_2(&runs, build_time);
    report("C2", "bidiagonal factorization theorem", pass, &detail);
    all &= pass;

    let (pass, detail) = criterion_3(&runs, &exact);
    report("C3", "entry formulas and leading-coefficient ratios", pass, &detail);
    all &= pass;

    let (pass, detail) = criterion_4(&runs, &exact);
    report("C4", "Darboux transformations", pass, &detail);
    all &= pass;

    let (pass, detail) = criterion_5(&runs);
    report("C5", "chain meeting", pass, &detail);
    all &= pass;

    let (pass, detail) = criterion_6(&runs);
    report("C6", "oracle equivalence", pass, &detail);
    all &= pass;

    let (pass, detail) = criterion_7();
    report("C7", "parameter cycling order", pass, &detail);
    all &= pass;

    let detail = criterion_8();
    let _ = writeln!(std::io::stderr(), "[INFO] C8 degradation at machine precision: {detail}");

    assert!(all, "at least one acceptance criterion failed");
}
