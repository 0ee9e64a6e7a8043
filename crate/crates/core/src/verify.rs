//! Named invariant suites run by `momlab verify`.

use rug::Rational;
use serde_json::{json, Value};

use crate::christoffel::{chain_meeting_residual, darboux, darboux_permuted, run_chain, BidiagonalChain};
use crate::error::{Error, Result};
use crate::gaussborel::{factorize, GaussBorelFactors, PolySet, Side};
use crate::measures::{CyclingOrder, Family, MeasureMatrix};
use crate::moments::MomentMatrix;
use crate::oracles::{polynomial_oracle, recurrence_oracle, ClassicalFamily};
use crate::recurrence::build_t;
use crate::scalar::{max_of, scaled_diff, PrecisionContext, Scalar};

pub const SUITES: &[&str] = &[
    "hankel",
    "biorthogonality",
    "orthogonality",
    "eigen",
    "bidiagonality",
    "triple-equality",
    "lc-ratio",
    "theorem",
    "darboux",
    "chain-meeting",
    "cycling",
    "corollary-order",
    "oracle",
    "parameter-level",
];

/// Expands `all` and comma-separated lists, preserving the canonical order
/// and dropping duplicates.
pub fn parse_suites(spec: &str) -> Result<Vec<&'static str>> {
    let mut wanted = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "all" {
            wanted.extend_from_slice(SUITES);
            continue;
        }
        match SUITES.iter().find(|s| **s == name) {
            Some(s) => wanted.push(*s),
            None => {
                return Err(Error::InvalidArgument(format!(
                    "unknown suite `{name}`; expected one of all, {}",
                    SUITES.join(", ")
                )))
            }
        }
    }
    if wanted.is_empty() {
        return Err(Error::InvalidArgument("no suite selected".into()));
    }
    Ok(SUITES.iter().copied().filter(|s| wanted.contains(s)).collect())
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub pass: bool,
    pub residual: Option<String>,
    pub details: Value,
}

impl SuiteResult {
    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.name,
            "pass": self.pass,
            "residual": self.residual,
            "details": self.details,
        })
    }
}

/// Shared objects for one verification run, built on first use.
struct Workspace<'a, S: Scalar> {
    mm: &'a MeasureMatrix<S>,
    ctx: PrecisionContext,
    n_max: usize,
    window: usize,
    moments: Option<MomentMatrix<S>>,
    base: Option<GaussBorelFactors<S>>,
    chains: Option<(BidiagonalChain<S>, BidiagonalChain<S>)>,
}

impl<'a, S: Scalar> Workspace<'a, S> {
    fn new(mm: &'a MeasureMatrix<S>, n_max: usize) -> Self {
        Workspace {
            mm,
            ctx: mm.context().clone(),
            n_max,
            window: n_max + mm.p().max(mm.q()) + 1,
            moments: None,
            base: None,
            chains: None,
        }
    }

    fn moments(&mut self) -> Result<&MomentMatrix<S>> {
        if self.moments.is_none() {
            let size = self.window + self.mm.p().max(self.mm.q());
            self.moments = Some(MomentMatrix::build(self.mm, size, size)?);
        }
        Ok(self.moments.as_ref().expect("built above"))
    }

    fn base(&mut self) -> Result<&GaussBorelFactors<S>> {
        if self.base.is_none() {
            let w = self.window;
            let ctx = self.ctx.clone();
            let f = factorize(self.moments()?, w, &ctx)?;
            self.base = Some(f);
        }
        Ok(self.base.as_ref().expect("built above"))
    }

    fn chains(&mut self) -> Result<&(BidiagonalChain<S>, BidiagonalChain<S>)> {
        if self.chains.is_none() {
            let left = run_chain(self.mm, Side::Left, self.mm.p(), self.n_max)?;
            let right = run_chain(self.mm, Side::Right, self.mm.q(), self.n_max)?;
            self.chains = Some((left, right));
        }
        Ok(self.chains.as_ref().expect("built above"))
    }
}

fn outcome<S: Scalar>(name: &'static str, residual: S, ctx: &PrecisionContext, details: Value) -> SuiteResult {
    SuiteResult {
        name,
        pass: residual <= ctx.residual_tol::<S>(),
        residual: Some(residual.to_text()),
        details,
    }
}

/// Runs the selected suites against one measure. Singular data aborts the
/// run with the factorization error.
pub fn run_suites<S: Scalar>(mm: &MeasureMatrix<S>, n_max: usize, suites: &[&'static str]) -> Result<Vec<SuiteResult>> {
    let mut ws = Workspace::new(mm, n_max);
    suites.iter().map(|name| run_one(&mut ws, name)).collect()
}

fn run_one<S: Scalar>(ws: &mut Workspace<'_, S>, name: &'static str) -> Result<SuiteResult> {
    let ctx = ws.ctx.clone();
    let n_max = ws.n_max;
    let (p, q) = (ws.mm.p(), ws.mm.q());
    Ok(match name {
        "hankel" => {
            let r = ws.moments()?.hankel_residual(&ctx)?;
            outcome(name, r, &ctx, json!({}))
        }
        "biorthogonality" => {
            let m = ws.moments()?.clone();
            let r = ws.base()?.biorthogonality_residual(&m, &ctx)?;
            outcome(name, r, &ctx, json!({ "window": ws.window }))
        }
        "orthogonality" => {
            let mm = ws.mm;
            let base = ws.base()?;
            let mut worst = S::zero(&ctx);
            let mut per = serde_json::Map::new();
            for set in [PolySet::A, PolySet::B] {
                for side in [Side::Left, Side::Right] {
                    let r = base.polynomials(set, side).orthogonality_residual(mm, &ctx)?;
                    per.insert(format!("{}_{}", set_name(set), side.name()), json!(r.to_text()));
                    worst = max_of(worst, r);
                }
            }
            outcome(name, worst, &ctx, Value::Object(per))
        }
        "eigen" => {
            let xs: Vec<S> = [(0, 1), (1, 2), (1, 1)]
                .iter()
                .map(|&(a, b)| S::from_rational(&Rational::from((a, b)), &ctx))
                .collect();
            let base = ws.base()?;
            let mut worst = S::zero(&ctx);
            for side in [Side::Left, Side::Right] {
                let t = build_t(base, side, n_max)?;
                worst = max_of(worst, t.band_violation(&ctx));
                for set in [PolySet::A, PolySet::B] {
                    worst = max_of(worst, t.eigen_residual(&base.polynomials(set, side), &xs, &ctx)?);
                }
            }
            outcome(name, worst, &ctx, json!({ "x": ["0", "1/2", "1"] }))
        }
        "bidiagonality" => {
            let (l, r) = ws.chains()?;
            let (rl, rr) = (l.bidiagonality_residual(), r.bidiagonality_residual());
            let details = json!({ "left": rl.to_text(), "right": rr.to_text() });
            outcome(name, max_of(rl, rr), &ctx, details)
        }
        "triple-equality" => {
            let (l, r) = ws.chains()?;
            let (rl, rr) = (l.triple_equality_max()?, r.triple_equality_max()?);
            let details = json!({ "left": rl.to_text(), "right": rr.to_text() });
            outcome(name, max_of(rl, rr), &ctx, details)
        }
        "lc-ratio" => {
            let (l, r) = ws.chains()?;
            let mut worst = S::zero(&ctx);
            for chain in [l, r] {
                for k in 1..=chain.steps() {
                    for n in 0..chain.window() - 1 {
                        let entry = chain.off_diagonal(k, n)?;
                        worst = max_of(worst, scaled_diff(&entry, &chain.lc_ratio(k, n)?));
                    }
                }
            }
            outcome(name, worst, &ctx, json!({ "remainder": "n mod p (left), n mod q (right)" }))
        }
        "theorem" => {
            let (l, r) = ws.chains()?;
            let (_, tl) = crate::christoffel::assemble_t(l, r, Side::Left, n_max)?;
            let (_, tr) = crate::christoffel::assemble_t(l, r, Side::Right, n_max)?;
            let details = json!({ "left": tl.to_text(), "right": tr.to_text() });
            outcome(name, max_of(tl, tr), &ctx, details)
        }
        "darboux" => {
            let base_tl = build_t(ws.base()?, Side::Left, n_max)?;
            let base_tr = build_t(ws.base()?, Side::Right, n_max)?;
            let (l, r) = ws.chains()?;
            let mut worst = S::zero(&ctx);
            let mut permuted = Vec::new();
            let mut conjugated = Vec::new();
            for (side, chain, base_t, count) in [(Side::Left, l, &base_tl, p), (Side::Right, r, &base_tr, q)] {
                for k in 1..=count {
                    let (_, a) = darboux_permuted(l, r, side, k, n_max)?;
                    let (_, b) = darboux(chain, base_t, k)?;
                    permuted.push(json!({ "side": side.name(), "k": k, "residual": a.to_text() }));
                    conjugated.push(json!({ "side": side.name(), "k": k, "residual": b.to_text() }));
                    worst = max_of(worst, max_of(a, b));
                }
            }
            outcome(name, worst, &ctx, json!({ "permuted": permuted, "conjugated": conjugated }))
        }
        "chain-meeting" => {
            let m = ws.moments()?;
            let left = m.shift_left(p)?;
            let right = m.shift_right(q)?;
            let rows = left.rows().min(right.rows());
            let cols = left.cols().min(right.cols());
            let identical = left.entries().block(rows, cols) == right.entries().block(rows, cols);
            let (l, r) = ws.chains()?;
            let d = chain_meeting_residual(l, r)?;
            let mut res = outcome(name, d, &ctx, json!({ "moment_shifts_identical": identical }));
            res.pass &= identical;
            res
        }
        "cycling" => cycling(ws.mm, n_max)?,
        "corollary-order" => {
            let (_, r) = ws.chains()?;
            let (derived, printed) = r.upper_order_residuals()?;
            let tol = ctx.residual_tol::<S>();
            let details = json!({
                "derived_order": { "product": "(U_R^(k))^-1 U_R^(k-1)", "residual": derived.to_text(), "matches": derived <= tol },
                "printed_order": { "product": "U_R^(k-1) (U_R^(k))^-1", "residual": printed.to_text(), "matches": printed <= tol },
            });
            outcome(name, derived, &ctx, details)
        }
        "oracle" => {
            let mm = ws.mm;
            let base = ws.base()?.clone();
            let poly = polynomial_oracle(mm, &base, n_max, &ctx)?;
            let mut worst = poly.max_abs_deviation.clone();
            let mut reports = vec![poly.to_json()];
            if let Some(family) = ClassicalFamily::from_measure(mm) {
                let rec = recurrence_oracle(&family, &build_t(&base, Side::Left, n_max)?, &ctx)?;
                reports.push(rec.to_json());
                worst = max_of(worst, rec.max_abs_deviation);
            }
            outcome(name, worst, &ctx, json!({ "reports": reports }))
        }
        "parameter-level" => {
            let (l, r) = ws.chains()?;
            let (rl, rr) = (l.parameter_level_residual()?, r.parameter_level_residual()?);
            let details = json!({ "left": rl.to_text(), "right": rr.to_text() });
            outcome(name, max_of(rl, rr), &ctx, details)
        }
        other => return Err(Error::InvalidArgument(format!("unknown suite `{other}`"))),
    })
}

fn set_name(set: PolySet) -> &'static str {
    match set {
        PolySet::A => "A",
        PolySet::B => "B",
    }
}

/// Largest scaled entry difference between two moment matrices of equal shape.
fn moment_gap<S: Scalar>(a: &MomentMatrix<S>, b: &MomentMatrix<S>) -> S {
    let mut worst = a.entry(0, 0).zero_like();
    for (i, j, v) in a.entries().entries() {
        let d = scaled_diff(v, b.entry(i, j));
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// Which parameter cycling order reproduces the moment-level shifts
/// `M Lambda^T` (left) and `Lambda M` (right).
pub fn cycling<S: Scalar>(mm: &MeasureMatrix<S>, n_max: usize) -> Result<SuiteResult> {
    let ctx = mm.context().clone();
    let tol = ctx.residual_tol::<S>();
    let size = n_max + mm.p().max(mm.q()) + 1;
    let base = MomentMatrix::build(mm, size + 1, size + 1)?;
    let mut pass = true;
    let mut worst = S::zero(&ctx);
    let mut details = serde_json::Map::new();
    for side in [Side::Left, Side::Right] {
        let count = match side {
            Side::Left => mm.p(),
            Side::Right => mm.q(),
        };
        let shifted = match side {
            Side::Left => base.shift_left(1)?,
            Side::Right => base.shift_right(1)?,
        };
        let target = MomentMatrix::from_entries(mm.p(), mm.q(), shifted.entries().block(size, size));
        let mut orders = serde_json::Map::new();
        let mut matching = Vec::new();
        for order in [CyclingOrder::Forward, CyclingOrder::Backward] {
            let transformed = match side {
                Side::Left => mm.christoffel_left_with(order),
                Side::Right => mm.christoffel_right_with(order),
            };
            let transformed = match transformed {
                Ok(t) => t,
                Err(Error::UnsupportedFamily(_)) => {
                    orders.insert(order.name().into(), json!({ "residual": null, "matches": null }));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let m = MomentMatrix::build(&transformed, size, size)?;
            let gap = moment_gap(&m, &target);
            let matches = gap <= tol;
            if matches {
                matching.push(order.name());
            } else if order == CyclingOrder::Forward {
                worst = max_of(worst, gap.clone());
            }
            orders.insert(
                order.name().into(),
                json!({ "map": order.formula(), "residual": gap.to_text(), "matches": matches }),
            );
        }
        // with a single component both orders coincide
        let ok = matching.contains(&"forward") && (count == 1 || matching.len() == 1);
        pass &= ok;
        let params = match (mm.family(), side) {
            (Family::JacobiPineiro(jp), Side::Left) => Some(&jp.alpha),
            (Family::JacobiPineiro(jp), Side::Right) => Some(&jp.beta),
            (Family::LaguerreFirstKind(l), Side::Left) => Some(&l.alpha),
            (Family::LaguerreFirstKind(l), Side::Right) => Some(&l.beta),
            (Family::Discrete(_), _) => None,
        };
        let maps = params.map(|v| {
            json!({
                "forward": CyclingOrder::Forward.apply(v).iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "backward": CyclingOrder::Backward.apply(v).iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            })
        });
        details.insert(
            side.name().into(),
            json!({ "components": count, "orders": orders, "matching": matching, "parameters": maps }),
        );
    }
    Ok(SuiteResult {
        name: "cycling",
        pass,
        residual: Some(worst.to_text()),
        details: Value::Object(details),
    })
}
