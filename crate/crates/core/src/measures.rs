//! Matrices of measures given through their moments.
//!
//! A [`MeasureMatrix`] is a `q x p` array of measures `mu_{b,a}` on a common
//! support. Only moments `int x^n d mu_{b,a}` are ever needed. Component
//! indices are zero-based throughout: `b in 0..q`, `a in 0..p`.
//!
//! Three families are supported:
//! * mixed Jacobi–Piñeiro, `x^(beta_b + alpha_a) (1-x)^gamma dx` on `[0, 1]`;
//! * mixed Laguerre of the first kind, `x^(beta_b + alpha_a) e^(-x) dx` on `[0, inf)`;
//! * discrete, `sum_m W_m delta_{x_m}` with `q x p` weight matrices.
//!
//! The elementary Christoffel transformations act on columns (left) or rows
//! (right): component `a < p-1` takes the old component `a+1` and the last
//! component takes `x` times the old first one.

use std::sync::Mutex;

use rug::Rational;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{PrecisionContext, Scalar};

/// Default number of moments per entry when no explicit budget is set.
pub const DEFAULT_DEGREE_BUDGET: usize = 256;

/// Degree budget for a run with window `n_max`, `k` Christoffel steps and
/// block sizes `p`, `q`.
pub fn degree_budget(n_max: usize, k: usize, p: usize, q: usize) -> usize {
    4 * (n_max + k + p.max(q))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Support {
    UnitInterval,
    HalfLine,
    Points(usize),
}

/// Order in which the elementary Christoffel map cycles the parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CyclingOrder {
    /// `(a_1, ..., a_p) -> (a_2, ..., a_p, a_1 + 1)`, the action of the
    /// cyclic polynomial matrix with ones on the superdiagonal.
    Forward,
    /// `(a_1, ..., a_p) -> (a_p + 1, a_1, ..., a_{p-1})`.
    Backward,
}

impl CyclingOrder {
    pub fn name(self) -> &'static str {
        match self {
            CyclingOrder::Forward => "forward",
            CyclingOrder::Backward => "backward",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            CyclingOrder::Forward => "(a_2,...,a_p,a_1+1)",
            CyclingOrder::Backward => "(a_p+1,a_1,...,a_{p-1})",
        }
    }

    pub fn apply(self, params: &[Rational]) -> Vec<Rational> {
        let n = params.len();
        match self {
            CyclingOrder::Forward => {
                let mut out: Vec<Rational> = params[1..].to_vec();
                out.push(Rational::from(&params[0] + 1));
                out
            }
            CyclingOrder::Backward => {
                let mut out = vec![Rational::from(&params[n - 1] + 1)];
                out.extend_from_slice(&params[..n - 1]);
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiPineiroParams {
    pub alpha: Vec<Rational>,
    pub beta: Vec<Rational>,
    pub gamma: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaguerreFirstKindParams {
    pub alpha: Vec<Rational>,
    pub beta: Vec<Rational>,
}

/// Finite point masses with matrix weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasureMatrix<S> {
    pub nodes: Vec<S>,
    /// One `q x p` matrix per node.
    pub weights: Vec<Matrix<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family<S> {
    JacobiPineiro(JacobiPineiroParams),
    LaguerreFirstKind(LaguerreFirstKindParams),
    Discrete(DiscreteMeasureMatrix<S>),
}

impl<S> Family<S> {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::JacobiPineiro(_) => "jacobi-pineiro",
            Family::LaguerreFirstKind(_) => "laguerre-first-kind",
            Family::Discrete(_) => "discrete",
        }
    }
}

pub struct MeasureMatrix<S: Scalar> {
    p: usize,
    q: usize,
    family: Family<S>,
    ctx: PrecisionContext,
    budget: usize,
    // moments of entry (b, a) at index b * p + a, extended on demand
    cache: Vec<Mutex<Vec<S>>>,
}

impl<S: Scalar> Clone for MeasureMatrix<S> {
    fn clone(&self) -> Self {
        MeasureMatrix {
            p: self.p,
            q: self.q,
            family: self.family.clone(),
            ctx: self.ctx.clone(),
            budget: self.budget,
            cache: self
                .cache
                .iter()
                .map(|c| Mutex::new(c.lock().expect("moment cache poisoned").clone()))
                .collect(),
        }
    }
}

impl<S: Scalar> std::fmt::Debug for MeasureMatrix<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasureMatrix")
            .field("p", &self.p)
            .field("q", &self.q)
            .field("family", &self.family)
            .field("budget", &self.budget)
            .finish()
    }
}

fn check_params(alpha: &[Rational], beta: &[Rational]) -> Result<()> {
    if alpha.is_empty() || beta.is_empty() {
        return Err(Error::InadmissibleParameters(
            "alpha and beta need at least one entry each".into(),
        ));
    }
    for (name, v) in alpha.iter().map(|v| ("alpha", v)).chain(beta.iter().map(|v| ("beta", v))) {
        if *v <= -1 {
            return Err(Error::InadmissibleParameters(format!("{name} entry {v} is not > -1")));
        }
    }
    // x^(alpha_a + beta_b) must be integrable at the origin
    for a in alpha {
        for b in beta {
            if Rational::from(a + b) <= -1 {
                return Err(Error::InadmissibleParameters(format!(
                    "alpha {a} + beta {b} must be > -1 for finite moments"
                )));
            }
        }
    }
    Ok(())
}

fn integer_difference_warnings(name: &str, values: &[Rational]) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let d = Rational::from(&values[i] - &values[j]);
            if *d.denom() == 1 {
                out.push(format!(
                    "{name}[{}] - {name}[{}] = {d} is an integer; normality is not guaranteed",
                    i + 1,
                    j + 1
                ));
            }
        }
    }
    out
}

impl<S: Scalar> MeasureMatrix<S> {
    pub fn jacobi_pineiro(params: JacobiPineiroParams, ctx: &PrecisionContext) -> Result<Self> {
        check_params(&params.alpha, &params.beta)?;
        if params.gamma <= -1 {
            return Err(Error::InadmissibleParameters(format!(
                "gamma {} is not > -1",
                params.gamma
            )));
        }
        let (p, q) = (params.alpha.len(), params.beta.len());
        Self::with_family(p, q, Family::JacobiPineiro(params), ctx)
    }

    pub fn laguerre_first_kind(params: LaguerreFirstKindParams, ctx: &PrecisionContext) -> Result<Self> {
        check_params(&params.alpha, &params.beta)?;
        let (p, q) = (params.alpha.len(), params.beta.len());
        Self::with_family(p, q, Family::LaguerreFirstKind(params), ctx)
    }

    /// Discrete matrix of measures. Nodes must be pairwise distinct and every
    /// node needs at least one nonzero weight.
    pub fn discrete(nodes: Vec<S>, weights: Vec<Matrix<S>>, ctx: &PrecisionContext) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidMeasure("no nodes".into()));
        }
        if nodes.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} nodes but {} weight matrices",
                nodes.len(),
                weights.len()
            )));
        }
        let (q, p) = (weights[0].rows(), weights[0].cols());
        if p == 0 || q == 0 {
            return Err(Error::InvalidMeasure("empty weight matrix".into()));
        }
        for (i, w) in weights.iter().enumerate() {
            if (w.rows(), w.cols()) != (q, p) {
                return Err(Error::InvalidMeasure(format!("weight {i} is not {q}x{p}")));
            }
            if w.entries().all(|(_, _, v)| v.is_zero()) {
                return Err(Error::InvalidMeasure(format!("node {i} has only zero weights")));
            }
        }
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if nodes[i] == nodes[j] {
                    return Err(Error::InvalidMeasure(format!("nodes {i} and {j} coincide")));
                }
            }
        }
        Self::with_family(p, q, Family::Discrete(DiscreteMeasureMatrix { nodes, weights }), ctx)
    }

    fn with_family(p: usize, q: usize, family: Family<S>, ctx: &PrecisionContext) -> Result<Self> {
        ctx.require::<S>()?;
        let mut mm = MeasureMatrix {
            p,
            q,
            family,
            ctx: ctx.clone(),
            budget: DEFAULT_DEGREE_BUDGET,
            cache: Vec::new(),
        };
        let mut cache = Vec::with_capacity(p * q);
        for b in 0..q {
            for a in 0..p {
                cache.push(Mutex::new(vec![mm.seed(b, a)?]));
            }
        }
        mm.cache = cache;
        Ok(mm)
    }

    pub fn with_degree_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn family(&self) -> &Family<S> {
        &self.family
    }

    pub fn context(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn degree_budget(&self) -> usize {
        self.budget
    }

    pub fn support(&self) -> Support {
        match &self.family {
            Family::JacobiPineiro(_) => Support::UnitInterval,
            Family::LaguerreFirstKind(_) => Support::HalfLine,
            Family::Discrete(d) => Support::Points(d.nodes.len()),
        }
    }

    /// Warnings for parameter configurations outside the guaranteed-normal
    /// range (integer differences between alphas or between betas).
    pub fn admissibility_warnings(&self) -> Vec<String> {
        let (alpha, beta) = match &self.family {
            Family::JacobiPineiro(jp) => (&jp.alpha, &jp.beta),
            Family::LaguerreFirstKind(l) => (&l.alpha, &l.beta),
            Family::Discrete(_) => return Vec::new(),
        };
        let mut w = integer_difference_warnings("alpha", alpha);
        w.extend(integer_difference_warnings("beta", beta));
        w
    }

    fn exponent(alpha: &[Rational], beta: &[Rational], b: usize, a: usize) -> Rational {
        Rational::from(&alpha[a] + &beta[b])
    }

    fn seed(&self, b: usize, a: usize) -> Result<S> {
        match &self.family {
            Family::JacobiPineiro(jp) => {
                let s = Self::exponent(&jp.alpha, &jp.beta, b, a);
                S::beta(&Rational::from(&s + 1), &Rational::from(&jp.gamma + 1), &self.ctx)
            }
            Family::LaguerreFirstKind(l) => {
                let s = Self::exponent(&l.alpha, &l.beta, b, a);
                S::gamma(&Rational::from(&s + 1), &self.ctx)
            }
            Family::Discrete(d) => Ok(Self::discrete_moment(d, b, a, 0, &self.ctx)),
        }
    }

    fn discrete_moment(d: &DiscreteMeasureMatrix<S>, b: usize, a: usize, n: usize, ctx: &PrecisionContext) -> S {
        let mut acc = S::zero(ctx);
        for (x, w) in d.nodes.iter().zip(&d.weights) {
            if !w[(b, a)].is_zero() {
                acc += &(x.powi(n) * &w[(b, a)]);
            }
        }
        acc
    }

    /// `m_{n+1} / m_n` for the parametric families.
    fn ratio(&self, b: usize, a: usize, n: usize) -> Option<Rational> {
        match &self.family {
            Family::JacobiPineiro(jp) => {
                let s = Self::exponent(&jp.alpha, &jp.beta, b, a);
                let num = Rational::from(&s + (n as u64 + 1));
                let den = Rational::from(&s + &jp.gamma) + (n as u64 + 2);
                Some(num / den)
            }
            Family::LaguerreFirstKind(l) => {
                let s = Self::exponent(&l.alpha, &l.beta, b, a);
                Some(s + (n as u64 + 1))
            }
            Family::Discrete(_) => None,
        }
    }

    /// `int x^n d mu_{b,a}(x)` with zero-based components.
    pub fn moment(&self, b: usize, a: usize, n: usize) -> Result<S> {
        assert!(b < self.q && a < self.p, "component ({b},{a}) outside {}x{}", self.q, self.p);
        if n > self.budget {
            return Err(Error::DegreeBudgetExceeded {
                requested: n,
                budget: self.budget,
            });
        }
        let mut seq = self.cache[b * self.p + a].lock().expect("moment cache poisoned");
        while seq.len() <= n {
            let k = seq.len() - 1;
            let next = match self.ratio(b, a, k) {
                Some(r) => seq[k].clone() * &S::from_rational(&r, &self.ctx),
                None => match &self.family {
                    Family::Discrete(d) => Self::discrete_moment(d, b, a, k + 1, &self.ctx),
                    _ => unreachable!("parametric families always have a ratio"),
                },
            };
            seq.push(next);
        }
        Ok(seq[n].clone())
    }

    /// Left Christoffel transformation `d mu (X_p)^T`.
    pub fn christoffel_left(&self) -> Result<Self> {
        self.christoffel_left_with(CyclingOrder::Forward)
    }

    /// Right Christoffel transformation `X_q d mu`.
    pub fn christoffel_right(&self) -> Result<Self> {
        self.christoffel_right_with(CyclingOrder::Forward)
    }

    /// `k`-fold left transformation; `k = 0` returns a copy.
    pub fn christoffel_left_iter(&self, k: usize) -> Result<Self> {
        let mut out = self.clone();
        for _ in 0..k {
            out = out.christoffel_left()?;
        }
        Ok(out)
    }

    pub fn christoffel_right_iter(&self, k: usize) -> Result<Self> {
        let mut out = self.clone();
        for _ in 0..k {
            out = out.christoffel_right()?;
        }
        Ok(out)
    }

    /// Left transformation with an explicit parameter cycling order. Only the
    /// forward order is defined for discrete measures.
    pub fn christoffel_left_with(&self, order: CyclingOrder) -> Result<Self> {
        let family = match (&self.family, order) {
            (Family::JacobiPineiro(jp), _) => Family::JacobiPineiro(JacobiPineiroParams {
                alpha: order.apply(&jp.alpha),
                beta: jp.beta.clone(),
                gamma: jp.gamma.clone(),
            }),
            (Family::LaguerreFirstKind(l), _) => Family::LaguerreFirstKind(LaguerreFirstKindParams {
                alpha: order.apply(&l.alpha),
                beta: l.beta.clone(),
            }),
            (Family::Discrete(d), CyclingOrder::Forward) => {
                let weights = d
                    .nodes
                    .iter()
                    .zip(&d.weights)
                    .map(|(x, w)| {
                        Matrix::from_fn(self.q, self.p, |b, a| {
                            if a + 1 < self.p {
                                w[(b, a + 1)].clone()
                            } else {
                                x.clone() * &w[(b, 0)]
                            }
                        })
                    })
                    .collect();
                Family::Discrete(DiscreteMeasureMatrix {
                    nodes: d.nodes.clone(),
                    weights,
                })
            }
            (Family::Discrete(_), CyclingOrder::Backward) => return Err(Error::UnsupportedFamily("discrete")),
        };
        Ok(Self::with_family(self.p, self.q, family, &self.ctx)?.with_degree_budget(self.budget))
    }

    pub fn christoffel_right_with(&self, order: CyclingOrder) -> Result<Self> {
        let family = match (&self.family, order) {
            (Family::JacobiPineiro(jp), _) => Family::JacobiPineiro(JacobiPineiroParams {
                alpha: jp.alpha.clone(),
                beta: order.apply(&jp.beta),
                gamma: jp.gamma.clone(),
            }),
            (Family::LaguerreFirstKind(l), _) => Family::LaguerreFirstKind(LaguerreFirstKindParams {
                alpha: l.alpha.clone(),
                beta: order.apply(&l.beta),
            }),
            (Family::Discrete(d), CyclingOrder::Forward) => {
                let weights = d
                    .nodes
                    .iter()
                    .zip(&d.weights)
                    .map(|(x, w)| {
                        Matrix::from_fn(self.q, self.p, |b, a| {
                            if b + 1 < self.q {
                                w[(b + 1, a)].clone()
                            } else {
                                x.clone() * &w[(0, a)]
                            }
                        })
                    })
                    .collect();
                Family::Discrete(DiscreteMeasureMatrix {
                    nodes: d.nodes.clone(),
                    weights,
                })
            }
            (Family::Discrete(_), CyclingOrder::Backward) => return Err(Error::UnsupportedFamily("discrete")),
        };
        Ok(Self::with_family(self.p, self.q, family, &self.ctx)?.with_degree_budget(self.budget))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Float;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn jp(alpha: Vec<Rational>, beta: Vec<Rational>, gamma: Rational) -> JacobiPineiroParams {
        JacobiPineiroParams { alpha, beta, gamma }
    }

    #[test]
    fn lebesgue_moments() {
        let ctx = PrecisionContext::rational();
        let mm = MeasureMatrix::<Rational>::jacobi_pineiro(jp(vec![q(0, 1)], vec![q(0, 1)], q(0, 1)), &ctx).unwrap();
        for n in 0..12 {
            assert_eq!(mm.moment(0, 0, n).unwrap(), q(1, n as i64 + 1));
        }
    }

    #[test]
    fn laguerre_factorial_moments() {
        let ctx = PrecisionContext::rational();
        let mm = MeasureMatrix::<Rational>::laguerre_first_kind(
            LaguerreFirstKindParams { alpha: vec![q(0, 1)], beta: vec![q(0, 1)] },
            &ctx,
        )
        .unwrap();
        let mut f = 1i64;
        for n in 0..15 {
            if n > 0 {
                f *= n;
            }
            assert_eq!(mm.moment(0, 0, n as usize).unwrap(), f);
        }
    }

    #[test]
    fn point_mass_moments() {
        let ctx = PrecisionContext::rational();
        let w = Matrix::from_fn(1, 1, |_, _| q(2, 1));
        let mm = MeasureMatrix::discrete(vec![q(1, 1)], vec![w], &ctx).unwrap();
        for n in 0..6 {
            assert_eq!(mm.moment(0, 0, n).unwrap(), 2);
        }
    }

    #[test]
    fn ratio_recurrence_matches_direct_beta() {
        let ctx = PrecisionContext::bigfloat(64).unwrap();
        let params = jp(vec![q(0, 1), q(1, 2)], vec![q(1, 3)], q(1, 4));
        let mm = MeasureMatrix::<Float>::jacobi_pineiro(params.clone(), &ctx).unwrap();
        let tol = Float::with_val(ctx.bits(), 1e-54);
        for a in 0..2 {
            let s = Rational::from(&params.alpha[a] + &params.beta[0]);
            for n in [0usize, 1, 5, 17] {
                let direct = Float::beta(&Rational::from(&s + (n as u64 + 1)), &q(5, 4), &ctx).unwrap();
                let rel = (mm.moment(0, a, n).unwrap() - &direct) / &direct;
                assert!(rel.abs() < tol);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let ctx = PrecisionContext::rational();
        let mm = MeasureMatrix::<Rational>::jacobi_pineiro(jp(vec![q(0, 1)], vec![q(0, 1)], q(0, 1)), &ctx)
            .unwrap()
            .with_degree_budget(4);
        assert!(mm.moment(0, 0, 4).is_ok());
        assert_eq!(
            mm.moment(0, 0, 5),
            Err(Error::DegreeBudgetExceeded { requested: 5, budget: 4 })
        );
    }

    #[test]
    fn inadmissible_parameters() {
        let ctx = PrecisionContext::bigfloat(32).unwrap();
        let bad = [
            jp(vec![q(-1, 1)], vec![q(0, 1)], q(0, 1)),
            jp(vec![q(0, 1)], vec![q(0, 1)], q(-3, 2)),
            jp(vec![q(-3, 5)], vec![q(-3, 5)], q(0, 1)),
            jp(vec![], vec![q(0, 1)], q(0, 1)),
        ];
        for params in bad {
            assert!(matches!(
                MeasureMatrix::<Float>::jacobi_pineiro(params, &ctx),
                Err(Error::InadmissibleParameters(_))
            ));
        }
        let r = PrecisionContext::rational();
        assert!(matches!(
            MeasureMatrix::<Rational>::jacobi_pineiro(jp(vec![q(1, 2)], vec![q(0, 1)], q(0, 1)), &r),
            Err(Error::RationalModeNonInteger(_))
        ));
        assert!(matches!(
            MeasureMatrix::<Rational>::jacobi_pineiro(jp(vec![q(0, 1)], vec![q(0, 1)], q(0, 1)), &ctx),
            Err(Error::ModeMismatch { .. })
        ));
    }

    #[test]
    fn integer_differences_only_warn() {
        let ctx = PrecisionContext::rational();
        let mm = MeasureMatrix::<Rational>::laguerre_first_kind(
            LaguerreFirstKindParams { alpha: vec![q(0, 1), q(1, 1)], beta: vec![q(0, 1)] },
            &ctx,
        )
        .unwrap();
        assert_eq!(mm.admissibility_warnings().len(), 1);
    }

    #[test]
    fn parameter_cycling() {
        let ctx = PrecisionContext::bigfloat(32).unwrap();
        let mm = MeasureMatrix::<Float>::jacobi_pineiro(jp(vec![q(3, 7)], vec![q(0, 1), q(1, 3)], q(0, 1)), &ctx)
            .unwrap();
        let Family::JacobiPineiro(l) = mm.christoffel_left().unwrap().family().clone() else { unreachable!() };
        assert_eq!(l.alpha, vec![q(10, 7)]);
        let Family::JacobiPineiro(r) = mm.christoffel_right().unwrap().family().clone() else { unreachable!() };
        assert_eq!(r.beta, vec![q(1, 3), q(1, 1)]);
        assert_eq!(CyclingOrder::Forward.apply(&[q(0, 1), q(1, 2)]), vec![q(1, 2), q(1, 1)]);
        assert_eq!(CyclingOrder::Backward.apply(&[q(0, 1), q(1, 2)]), vec![q(3, 2), q(0, 1)]);
        let back = mm.christoffel_left_iter(0).unwrap();
        assert_eq!(back.family(), mm.family());
    }

    #[test]
    fn discrete_christoffel_moves_weights() {
        let ctx = PrecisionContext::rational();
        let w = Matrix::from_fn(1, 2, |_, a| q(a as i64 + 1, 1));
        let mm = MeasureMatrix::discrete(vec![q(3, 1)], vec![w], &ctx).unwrap();
        let l = mm.christoffel_left().unwrap();
        // column 0 <- old column 1, column 1 <- x * old column 0
        assert_eq!(l.moment(0, 0, 0).unwrap(), 2);
        assert_eq!(l.moment(0, 1, 0).unwrap(), 3);
        assert!(matches!(
            mm.christoffel_left_with(CyclingOrder::Backward),
            Err(Error::UnsupportedFamily(_))
        ));
        let zero_node = MeasureMatrix::discrete(vec![q(0, 1)], vec![Matrix::from_fn(1, 1, |_, _| q(1, 1))], &ctx)
            .unwrap()
            .christoffel_left()
            .unwrap();
        assert_eq!(zero_node.moment(0, 0, 0).unwrap(), 0);
    }

    #[test]
    fn discrete_validation() {
        let ctx = PrecisionContext::rational();
        let w = || Matrix::from_fn(1, 1, |_, _| q(1, 1));
        assert!(MeasureMatrix::discrete(vec![q(1, 1), q(1, 1)], vec![w(), w()], &ctx).is_err());
        assert!(MeasureMatrix::discrete(vec![q(1, 1)], vec![Matrix::from_fn(1, 1, |_, _| q(0, 1))], &ctx).is_err());
        assert!(MeasureMatrix::discrete(vec![q(1, 1)], vec![], &ctx).is_err());
    }
}
