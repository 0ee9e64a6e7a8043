//! Independent computations used to cross-check the elimination path:
//! polynomials solved directly from their orthogonality conditions and
//! classical three-term recurrences from the Stieltjes procedure.

use rug::Rational;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gaussborel::{GaussBorelFactors, PolySet, Side};
use crate::measures::{Family, MeasureMatrix};
use crate::recurrence::BandedRecurrence;
use crate::scalar::{max_of, scaled_diff, Mode, PrecisionContext, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport<S> {
    pub subject: String,
    /// Largest deviation, absolute for values up to one and relative above.
    pub max_abs_deviation: S,
    pub pass: bool,
}

impl<S: Scalar> OracleReport<S> {
    pub fn new(subject: impl Into<String>, deviation: S, ctx: &PrecisionContext) -> Self {
        let pass = deviation <= ctx.residual_tol::<S>();
        OracleReport {
            subject: subject.into(),
            max_abs_deviation: deviation,
            pass,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "subject": self.subject,
            "max_abs_deviation": self.max_abs_deviation.to_text(),
            "pass": self.pass,
        })
    }
}

/// Solves `a x = rhs` by Gaussian elimination with partial pivoting.
fn solve_dense<S: Scalar>(mut a: Vec<Vec<S>>, mut rhs: Vec<S>, ctx: &PrecisionContext) -> Result<Vec<S>> {
    let n = rhs.len();
    let tol = ctx.pivot_tol::<S>();
    let scale = a
        .iter()
        .flatten()
        .map(|v| v.abs_value())
        .fold(S::zero(ctx), max_of);
    for col in 0..n {
        let (best, mag) = (col..n)
            .map(|r| (r, a[r][col].abs_value()))
            .fold(None, |acc: Option<(usize, S)>, (r, m)| match acc {
                Some((_, ref bm)) if *bm >= m => acc,
                _ => Some((r, m)),
            })
            .expect("non-empty column");
        let singular = match S::MODE {
            Mode::Rational => mag.is_zero(),
            Mode::BigFloat => mag.is_zero() || mag < tol.clone() * &scale,
        };
        if singular {
            return Err(Error::SingularSystem);
        }
        a.swap(col, best);
        rhs.swap(col, best);
        for r in col + 1..n {
            let f = a[r][col].clone() / &a[col][col];
            if f.is_zero() {
                continue;
            }
            let (upper, lower) = a.split_at_mut(r);
            for (dst, src) in lower[0][col..n].iter_mut().zip(&upper[col][col..n]) {
                *dst -= &(f.clone() * src);
            }
            let t = f * &rhs[col];
            rhs[r] -= &t;
        }
    }
    let mut x = vec![S::zero(ctx); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r].clone();
        for c in r + 1..n {
            acc -= &(a[r][c].clone() * &x[c]);
        }
        x[r] = acc / &a[r][r];
    }
    Ok(x)
}

/// Coefficients of the `n`-th polynomial of `set` in normalization `side`,
/// obtained from the step-line orthogonality conditions alone.
///
/// The unknowns are indexed by `i = 0..=n`: for `A`, index `i` is the
/// coefficient of `x^(i/p)` in component `i mod p`; for `B`, of `x^(i/q)` in
/// component `i mod q`. The result uses the same layout as
/// [`crate::gaussborel::PolynomialTable::polynomial`].
pub fn solve_polynomial_direct<S: Scalar>(
    mm: &MeasureMatrix<S>,
    n: usize,
    set: PolySet,
    side: Side,
    ctx: &PrecisionContext,
) -> Result<Vec<Vec<S>>> {
    let (p, q) = (mm.p(), mm.q());
    // pairing of unknown i with the dual index m
    let pairing = |i: usize, m: usize| -> Result<S> {
        match set {
            PolySet::A => mm.moment(m % q, i % p, m / q + i / p),
            PolySet::B => mm.moment(i % q, m % p, i / q + m / p),
        }
    };
    let mut a = Vec::with_capacity(n + 1);
    let mut rhs = Vec::with_capacity(n + 1);
    for m in 0..n {
        a.push((0..=n).map(|i| pairing(i, m)).collect::<Result<Vec<_>>>()?);
        rhs.push(S::zero(ctx));
    }
    let unit_leading = matches!((set, side), (PolySet::A, Side::Right) | (PolySet::B, Side::Left));
    if unit_leading {
        a.push((0..=n).map(|i| if i == n { S::one(ctx) } else { S::zero(ctx) }).collect());
    } else {
        a.push((0..=n).map(|i| pairing(i, n)).collect::<Result<Vec<_>>>()?);
    }
    rhs.push(S::one(ctx));
    let x = solve_dense(a, rhs, ctx)?;
    let block = match set {
        PolySet::A => p,
        PolySet::B => q,
    };
    let mut comps = vec![Vec::new(); block];
    for (i, v) in x.into_iter().enumerate() {
        comps[i % block].push(v);
    }
    Ok(comps)
}

/// Compares every polynomial of the factorization on `0..=n_max`, both sets
/// and both normalizations, with the direct solve.
pub fn polynomial_oracle<S: Scalar>(
    mm: &MeasureMatrix<S>,
    factors: &GaussBorelFactors<S>,
    n_max: usize,
    ctx: &PrecisionContext,
) -> Result<OracleReport<S>> {
    if n_max >= factors.size() {
        return Err(Error::WindowTooSmall {
            needed: n_max + 1,
            available: factors.size(),
        });
    }
    let mut worst = S::zero(ctx);
    for set in [PolySet::A, PolySet::B] {
        for side in [Side::Left, Side::Right] {
            let table = factors.polynomials(set, side);
            for n in 0..=n_max {
                let direct = solve_polynomial_direct(mm, n, set, side, ctx)?;
                for (c, coeffs) in direct.iter().enumerate() {
                    for (x, y) in table.component(n, c).iter().zip(coeffs) {
                        worst = max_of(worst, scaled_diff(x, y));
                    }
                }
            }
        }
    }
    Ok(OracleReport::new(format!("direct polynomial solve, n <= {n_max}"), worst, ctx))
}

/// Scalar (`p = q = 1`) weights with closed-form moments.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassicalFamily {
    /// `x^alpha e^-x` on the half line.
    Laguerre { alpha: Rational },
    /// `x^alpha (1 - x)^gamma` on `[0, 1]`.
    ShiftedJacobi { alpha: Rational, gamma: Rational },
}

impl ClassicalFamily {
    /// Scalar reduction of a `1 x 1` measure matrix, when the family has one.
    pub fn from_measure<S: Scalar>(mm: &MeasureMatrix<S>) -> Option<Self> {
        if mm.p() != 1 || mm.q() != 1 {
            return None;
        }
        match mm.family() {
            Family::JacobiPineiro(jp) => Some(ClassicalFamily::ShiftedJacobi {
                alpha: Rational::from(&jp.alpha[0] + &jp.beta[0]),
                gamma: jp.gamma.clone(),
            }),
            Family::LaguerreFirstKind(l) => Some(ClassicalFamily::Laguerre {
                alpha: Rational::from(&l.alpha[0] + &l.beta[0]),
            }),
            Family::Discrete(_) => None,
        }
    }

    fn moment<S: Scalar>(&self, k: usize, ctx: &PrecisionContext) -> Result<S> {
        match self {
            ClassicalFamily::Laguerre { alpha } => S::gamma(&Rational::from(alpha + (k + 1) as u64), ctx),
            ClassicalFamily::ShiftedJacobi { alpha, gamma } => S::beta(
                &Rational::from(alpha + (k + 1) as u64),
                &Rational::from(gamma + 1u32),
                ctx,
            ),
        }
    }
}

/// Monic recurrence coefficients `(b_n, c_n)`, `n < count`, with
/// `x pi_n = pi_(n+1) + b_n pi_n + c_n pi_(n-1)` and `c_0 = 0`, computed by the
/// Stieltjes procedure on moments evaluated at twice the working precision.
pub fn classical_tridiagonal<S: Scalar>(
    family: &ClassicalFamily,
    count: usize,
    ctx: &PrecisionContext,
) -> Result<Vec<(S, S)>> {
    let hi = ctx.doubled();
    let moments = (0..2 * count + 1)
        .map(|k| family.moment::<S>(k, &hi))
        .collect::<Result<Vec<S>>>()?;
    let zero = S::zero(&hi);
    // <f, g> for ascending coefficient vectors
    let inner = |f: &[S], g: &[S]| {
        let mut acc = zero.clone();
        for (i, a) in f.iter().enumerate() {
            for (j, b) in g.iter().enumerate() {
                acc += &(a.clone() * b * &moments[i + j]);
            }
        }
        acc
    };
    let mut out = Vec::with_capacity(count);
    let mut prev: Vec<S> = Vec::new();
    let mut cur = vec![S::one(&hi)];
    let mut prev_norm = S::one(&hi);
    for n in 0..count {
        let norm = inner(&cur, &cur);
        let mut x_cur = vec![zero.clone()];
        x_cur.extend(cur.iter().cloned());
        let b = inner(&x_cur, &cur) / &norm;
        let c = if n == 0 { zero.clone() } else { norm.clone() / &prev_norm };
        let mut next = x_cur;
        for (i, v) in cur.iter().enumerate() {
            next[i] -= &(b.clone() * v);
        }
        for (i, v) in prev.iter().enumerate() {
            next[i] -= &(c.clone() * v);
        }
        out.push((b, c));
        prev = std::mem::replace(&mut cur, next);
        prev_norm = norm;
    }
    Ok(out)
}

/// Compares the diagonal and subdiagonal of a left-normalized `p = q = 1`
/// recurrence matrix with the Stieltjes coefficients.
pub fn recurrence_oracle<S: Scalar>(
    family: &ClassicalFamily,
    t: &BandedRecurrence<S>,
    ctx: &PrecisionContext,
) -> Result<OracleReport<S>> {
    if t.side() != Side::Left || t.p() != 1 || t.q() != 1 {
        return Err(Error::NormalizationMismatch(
            "classical comparison needs a left-normalized tridiagonal matrix".into(),
        ));
    }
    let coeffs = classical_tridiagonal::<S>(family, t.n_max() + 1, ctx)?;
    let mut worst = S::zero(ctx);
    for (n, (b, c)) in coeffs.iter().enumerate() {
        worst = max_of(worst, scaled_diff(t.get(n, n), b));
        if n > 0 {
            worst = max_of(worst, scaled_diff(t.get(n, n - 1), c));
        }
    }
    Ok(OracleReport::new(
        format!("Stieltjes recurrence, n <= {}", t.n_max()),
        worst,
        ctx,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussborel::factorize;
    use crate::measures::{JacobiPineiroParams, LaguerreFirstKindParams};
    use crate::moments::MomentMatrix;
    use crate::recurrence::build_t;
    use rug::Float;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn laguerre() -> MeasureMatrix<Rational> {
        MeasureMatrix::laguerre_first_kind(
            LaguerreFirstKindParams { alpha: vec![q(0, 1)], beta: vec![q(0, 1)] },
            &PrecisionContext::rational(),
        )
        .unwrap()
    }

    #[test]
    fn laguerre_direct_solve() {
        let ctx = PrecisionContext::rational();
        let a2 = solve_polynomial_direct(&laguerre(), 2, PolySet::A, Side::Right, &ctx).unwrap();
        assert_eq!(a2, vec![vec![q(2, 1), q(-4, 1), q(1, 1)]]);
        let a0 = solve_polynomial_direct(&laguerre(), 0, PolySet::B, Side::Left, &ctx).unwrap();
        assert_eq!(a0, vec![vec![q(1, 1)]]);
        // left-normalized A_2 pairs to one with x^2: leading coefficient 1/D_2 = 1/4
        let l2 = solve_polynomial_direct(&laguerre(), 2, PolySet::A, Side::Left, &ctx).unwrap();
        assert_eq!(l2[0][2], q(1, 4));
    }

    #[test]
    fn direct_solve_matches_factorization() {
        let ctx = PrecisionContext::rational();
        let mm = laguerre();
        let f = factorize(&MomentMatrix::build(&mm, 7, 7).unwrap(), 7, &ctx).unwrap();
        let report = polynomial_oracle(&mm, &f, 6, &ctx).unwrap();
        assert_eq!(report.max_abs_deviation, 0);
        assert!(report.pass);
        assert_eq!(report.to_json()["max_abs_deviation"], "0");
    }

    #[test]
    fn singular_system() {
        let ctx = PrecisionContext::rational();
        let a = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        assert_eq!(solve_dense(a, vec![q(1, 1), q(0, 1)], &ctx), Err(Error::SingularSystem));
    }

    #[test]
    fn stieltjes_classical_values() {
        let ctx = PrecisionContext::rational();
        let lag = classical_tridiagonal::<Rational>(&ClassicalFamily::Laguerre { alpha: q(0, 1) }, 5, &ctx).unwrap();
        for (n, (b, c)) in lag.iter().enumerate() {
            assert_eq!(*b, (2 * n + 1) as i64);
            assert_eq!(*c, (n * n) as i64);
        }
        let leg = classical_tridiagonal::<Rational>(
            &ClassicalFamily::ShiftedJacobi { alpha: q(0, 1), gamma: q(0, 1) },
            3,
            &ctx,
        )
        .unwrap();
        assert_eq!(leg[0], (q(1, 2), q(0, 1)));
        assert_eq!(leg[1].1, q(1, 12));
    }

    #[test]
    fn stieltjes_matches_recurrence_in_floats() {
        let ctx = PrecisionContext::bigfloat(64).unwrap();
        let mm = MeasureMatrix::<Float>::jacobi_pineiro(
            JacobiPineiroParams { alpha: vec![q(1, 2)], beta: vec![q(1, 3)], gamma: q(1, 5) },
            &ctx,
        )
        .unwrap();
        let f = factorize(&MomentMatrix::build(&mm, 12, 12).unwrap(), 12, &ctx).unwrap();
        let t = build_t(&f, Side::Left, 10).unwrap();
        let fam = ClassicalFamily::from_measure(&mm).unwrap();
        assert_eq!(fam, ClassicalFamily::ShiftedJacobi { alpha: q(5, 6), gamma: q(1, 5) });
        let report = recurrence_oracle(&fam, &t, &ctx).unwrap();
        assert!(report.pass, "{}", report.max_abs_deviation.to_text());
    }
}
