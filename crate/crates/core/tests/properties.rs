use momlab::christoffel::{assemble_t, chain_meeting_residual, darboux_permuted, run_chain};
use momlab::measures::CyclingOrder;
use momlab::scalar::scaled_diff;
use momlab::*;
use proptest::prelude::*;
use rug::{Float, Rational};

const DIGITS: u32 = 40;

fn ctx() -> PrecisionContext {
    PrecisionContext::bigfloat(DIGITS).unwrap()
}

fn rel(a: &Float, b: &Float) -> f64 {
    let d = Float::with_val(a.prec(), a - b).abs();
    (d / Float::with_val(a.prec(), b.abs_ref())).to_f64()
}

/// Positive rational in `(0, 50]` with a small denominator.
fn positive() -> impl Strategy<Value = Rational> {
    (1i64..=200, 1i64..=4).prop_map(|(n, d)| Rational::from((n, d)))
}

/// Rational in `(-1, 4)` with a small denominator.
fn exponent() -> impl Strategy<Value = Rational> {
    (-5i64..=23, 1i64..=6)
        .prop_map(|(n, d)| Rational::from((n, d)))
        .prop_filter("must exceed -1", |v| *v > -1 && *v < 4)
}

fn discrete_system() -> impl Strategy<Value = (usize, usize, Vec<Rational>, Vec<Vec<Rational>>)> {
    (1usize..=2, 1usize..=2).prop_flat_map(|(p, q)| {
        let nodes = proptest::collection::hash_set((-40i64..=40, 1i64..=9), 14..=16).prop_map(|set| {
            let mut v: Vec<Rational> = set.into_iter().map(Rational::from).collect();
            v.sort();
            v.dedup();
            v
        });
        let weights = proptest::collection::vec(proptest::collection::vec((1i64..=20, 1i64..=7), p * q), 16);
        (Just(p), Just(q), nodes, weights).prop_map(|(p, q, nodes, w)| {
            let w = w
                .into_iter()
                .take(nodes.len())
                .map(|cells| cells.into_iter().map(Rational::from).collect())
                .collect();
            (p, q, nodes, w)
        })
    })
}

fn build_discrete(
    p: usize,
    q: usize,
    nodes: Vec<Rational>,
    weights: Vec<Vec<Rational>>,
    ctx: &PrecisionContext,
) -> MeasureMatrix<Rational> {
    let weights = weights.into_iter().map(|cells| Matrix::from_fn(q, p, |b, a| cells[b * p + a].clone())).collect();
    MeasureMatrix::discrete(nodes, weights, ctx).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gamma_recurrence(a in positive()) {
        let ctx = ctx();
        let g = <Float as Scalar>::gamma(&a, &ctx).unwrap();
        let g1 = <Float as Scalar>::gamma(&Rational::from(&a + 1), &ctx).unwrap();
        let expected = g * Float::with_val(ctx.bits(), &a);
        prop_assert!(rel(&g1, &expected) <= 10f64.powi(-(DIGITS as i32) + 12));
    }

    #[test]
    fn beta_recurrence(a in positive(), b in positive()) {
        let ctx = ctx();
        let bab = <Float as Scalar>::beta(&a, &b, &ctx).unwrap();
        let b1 = <Float as Scalar>::beta(&Rational::from(&a + 1), &b, &ctx).unwrap();
        // B(a + 1, b) = B(a, b) a / (a + b)
        let factor = Rational::from(&a + &b).recip() * &a;
        let expected = bab * Float::with_val(ctx.bits(), &factor);
        prop_assert!(rel(&b1, &expected) <= 10f64.powi(-(DIGITS as i32) + 12));
    }

    #[test]
    fn jacobi_pineiro_moments_match_closed_form(
        alpha in proptest::collection::vec(exponent(), 1..=3),
        beta in proptest::collection::vec(exponent(), 1..=2),
        gamma in exponent(),
        n in 0usize..20,
    ) {
        prop_assume!(alpha.iter().all(|a| beta.iter().all(|b| Rational::from(a + b) > -1)));
        let ctx = ctx();
        let mm = MeasureMatrix::<Float>::jacobi_pineiro(
            JacobiPineiroParams { alpha: alpha.clone(), beta: beta.clone(), gamma: gamma.clone() },
            &ctx,
        ).unwrap();
        for (b, bv) in beta.iter().enumerate() {
            for (a, av) in alpha.iter().enumerate() {
                let s = Rational::from(av + bv);
                let direct = <Float as Scalar>::beta(&(s + (n as u64 + 1)), &Rational::from(&gamma + 1), &ctx).unwrap();
                let got = mm.moment(b, a, n).unwrap();
                prop_assert!(rel(&got, &direct) <= 10f64.powi(-(DIGITS as i32) + 12));
            }
        }
    }

    #[test]
    fn laguerre_moments_exact_in_rational_mode(
        alpha in proptest::collection::vec(0i64..6, 1..=3),
        beta in proptest::collection::vec(0i64..6, 1..=2),
        n in 0usize..15,
    ) {
        let ctx = PrecisionContext::rational();
        let alpha: Vec<Rational> = alpha.into_iter().map(Rational::from).collect();
        let beta: Vec<Rational> = beta.into_iter().map(Rational::from).collect();
        let mm = MeasureMatrix::<Rational>::laguerre_first_kind(
            LaguerreFirstKindParams { alpha: alpha.clone(), beta: beta.clone() },
            &ctx,
        ).unwrap();
        for (b, bv) in beta.iter().enumerate() {
            for (a, av) in alpha.iter().enumerate() {
                let s = Rational::from(av + bv) + (n as u64 + 1);
                let direct = <Rational as Scalar>::gamma(&s, &ctx).unwrap();
                prop_assert_eq!(mm.moment(b, a, n).unwrap(), direct);
            }
        }
    }

    #[test]
    fn parameter_map_applied_p_times_adds_one(
        params in proptest::collection::vec(exponent(), 1..=5),
        backward in any::<bool>(),
    ) {
        let order = if backward { CyclingOrder::Backward } else { CyclingOrder::Forward };
        let mut cur = params.clone();
        for _ in 0..params.len() {
            cur = order.apply(&cur);
        }
        let shifted: Vec<Rational> = params.iter().map(|v| Rational::from(v + 1)).collect();
        prop_assert_eq!(cur, shifted);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn moment_matrix_follows_interleaving_rule((p, q, nodes, weights) in discrete_system(), size in 4usize..12) {
        let ctx = PrecisionContext::rational();
        let mm = build_discrete(p, q, nodes, weights, &ctx);
        let m = MomentMatrix::build(&mm, size, size).unwrap();
        for row in 0..size {
            for col in 0..size {
                let expected = mm.moment(row % q, col % p, row / q + col / p).unwrap();
                prop_assert_eq!(m.entry(row, col), &expected);
            }
        }
        prop_assert_eq!(m.hankel_residual(&ctx).unwrap(), 0);
    }

    #[test]
    fn random_discrete_systems_are_exact((p, q, nodes, weights) in discrete_system()) {
        let ctx = PrecisionContext::rational();
        let mm = build_discrete(p, q, nodes, weights, &ctx);
        let n_max = 5;
        let window = n_max + p.max(q) + 1;
        let m = MomentMatrix::build(&mm, window, window).unwrap();
        let f = factorize(&m, window, &ctx).unwrap();
        prop_assert_eq!(f.biorthogonality_residual(&m, &ctx).unwrap(), 0);
        for side in [Side::Left, Side::Right] {
            let t = build_t(&f, side, n_max).unwrap();
            prop_assert_eq!(t.band_violation(&ctx), 0);
            let via_upper = build_t_via_upper(&f, side, n_max).unwrap();
            prop_assert_eq!(t.max_abs_diff(&via_upper, &ctx), 0);
        }
        let left = run_chain(&mm, Side::Left, p, n_max).unwrap();
        let right = run_chain(&mm, Side::Right, q, n_max).unwrap();
        prop_assert_eq!(chain_meeting_residual(&left, &right).unwrap(), 0);
        for chain in [&left, &right] {
            prop_assert_eq!(chain.bidiagonality_residual(), 0);
            prop_assert_eq!(chain.triple_equality_max().unwrap(), 0);
        }
        for side in [Side::Left, Side::Right] {
            let (_, res) = assemble_t(&left, &right, side, n_max).unwrap();
            prop_assert_eq!(res, 0);
            let steps = if side == Side::Left { p } else { q };
            for k in 1..steps {
                let (_, res) = darboux_permuted(&left, &right, side, k, n_max).unwrap();
                prop_assert_eq!(res, 0);
            }
        }
    }
}

#[test]
fn scaled_diff_is_relative_for_large_values() {
    let ctx = ctx();
    let a = Float::with_val(ctx.bits(), Float::u_pow_u(10, 20));
    let b = Float::with_val(ctx.bits(), &a + 10_000);
    let d = scaled_diff(&a, &b);
    assert!((d.to_f64() - 1e-16).abs() < 1e-20);
    let small = scaled_diff(&Float::with_val(ctx.bits(), 0.5), &Float::with_val(ctx.bits(), 0.25));
    assert_eq!(small.to_f64(), 0.25);
}
