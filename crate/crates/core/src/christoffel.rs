//! Iterated Christoffel transformations and the bidiagonal factorization of
//! the recurrence matrix.
//!
//! A left chain factorizes `M (Lambda^k)^T` for `k = 0..=K` and reads off
//! `L_k = L_L^(k-1) (L_L^(k))^-1`; a right chain factorizes `Lambda^k M` and
//! reads off `U_k = (U_R^(k))^-1 U_R^(k-1)`. All stages come from one base
//! truncation, so every stage factorization covers the same window
//! `N = n_max + max(p, q) + 1` exactly.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gaussborel::{factorize, GaussBorelFactors, PolySet, Side};
use crate::matrix::Matrix;
use crate::measures::MeasureMatrix;
use crate::moments::{truncation_size, MomentMatrix};
use crate::recurrence::{build_t, BandedRecurrence};
use crate::scalar::{max_abs, max_of, scaled_diff, PrecisionContext, Scalar};

#[derive(Clone, Debug)]
pub struct ChainStage<S: Scalar> {
    pub k: usize,
    pub side: Side,
    pub factors: GaussBorelFactors<S>,
    /// Parameter-level transformed measure, when the family supports it.
    pub measure: Option<MeasureMatrix<S>>,
}

#[derive(Clone, Debug)]
pub struct BidiagonalChain<S: Scalar> {
    side: Side,
    p: usize,
    q: usize,
    n_max: usize,
    window: usize,
    ctx: PrecisionContext,
    stages: Vec<ChainStage<S>>,
    factors: Vec<Matrix<S>>,
    rescaled: Vec<Matrix<S>>,
}

fn recip<S: Scalar>(v: &[S]) -> Vec<S> {
    v.iter().map(|d| d.one_like() / d).collect()
}

/// Product of the given square matrices over their leading `w x w` blocks.
fn product<'a, S: Scalar + 'a>(mats: impl IntoIterator<Item = &'a Matrix<S>>, w: usize, ctx: &PrecisionContext) -> Matrix<S> {
    mats.into_iter()
        .fold(Matrix::identity(w, ctx), |acc, m| acc.mul(&m.block(w, w)))
}

/// Runs `k_max` Christoffel steps on the given side, producing factors valid
/// on the window `0..=n_max` plus the band margin.
pub fn run_chain<S: Scalar>(mm: &MeasureMatrix<S>, side: Side, k_max: usize, n_max: usize) -> Result<BidiagonalChain<S>> {
    let (p, q) = (mm.p(), mm.q());
    let ctx = mm.context().clone();
    let window = n_max + p.max(q) + 1;
    let size = truncation_size(n_max, k_max, p, q);
    let base = MomentMatrix::build(mm, size, size)?;
    let mut stages = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let shifted = match side {
            Side::Left => base.shift_left(k)?,
            Side::Right => base.shift_right(k)?,
        };
        let factors = factorize(&shifted, window, &ctx).map_err(|e| e.at_stage(k))?;
        let measure = if k == 0 {
            Some(mm.clone())
        } else {
            match side {
                Side::Left => mm.christoffel_left_iter(k).ok(),
                Side::Right => mm.christoffel_right_iter(k).ok(),
            }
        };
        stages.push(ChainStage { k, side, factors, measure });
    }
    let d = stages[0].factors.d().to_vec();
    let d_inv = recip(&d);
    let mut factors = Vec::with_capacity(k_max);
    let mut rescaled = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let (prev, cur) = (&stages[k - 1].factors, &stages[k].factors);
        match side {
            Side::Left => {
                let l = prev.lower(Side::Left).mul(&cur.lower_inverse(Side::Left));
                rescaled.push(l.scale_rows(&d_inv).scale_cols(&d));
                factors.push(l);
            }
            Side::Right => {
                let u = cur.upper_inverse(Side::Right).mul(&prev.upper(Side::Right));
                rescaled.push(u.scale_rows(&d).scale_cols(&d_inv));
                factors.push(u);
            }
        }
    }
    Ok(BidiagonalChain {
        side,
        p,
        q,
        n_max,
        window,
        ctx,
        stages,
        factors,
        rescaled,
    })
}

impl<S: Scalar> BidiagonalChain<S> {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Size of every stage factorization.
    pub fn window(&self) -> usize {
        self.window
    }

    /// Number of Christoffel steps `K`.
    pub fn steps(&self) -> usize {
        self.factors.len()
    }

    pub fn context(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn stages(&self) -> &[ChainStage<S>] {
        &self.stages
    }

    pub fn stage(&self, k: usize) -> Result<&ChainStage<S>> {
        self.stages.get(k).ok_or(Error::IndexOutOfWindow {
            index: k,
            window: self.stages.len(),
        })
    }

    fn check_step(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.steps() {
            return Err(Error::IndexOutOfWindow {
                index: k,
                window: self.steps() + 1,
            });
        }
        Ok(())
    }

    /// `L_k` (left chain) or `U_k` (right chain), `1 <= k <= K`.
    pub fn factor(&self, k: usize) -> Result<&Matrix<S>> {
        self.check_step(k)?;
        Ok(&self.factors[k - 1])
    }

    /// `D^-1 L_k D` or `D U_k D^-1` with the base `D`.
    pub fn rescaled(&self, k: usize) -> Result<&Matrix<S>> {
        self.check_step(k)?;
        Ok(&self.rescaled[k - 1])
    }

    /// The single off-diagonal entry of factor `k` in column (left) or row
    /// (right) `n`.
    pub fn off_diagonal(&self, k: usize, n: usize) -> Result<S> {
        let f = self.factor(k)?;
        if n + 1 >= self.window {
            return Err(Error::IndexOutOfWindow {
                index: n,
                window: self.window - 1,
            });
        }
        Ok(match self.side {
            Side::Left => f[(n + 1, n)].clone(),
            Side::Right => f[(n, n + 1)].clone(),
        })
    }

    /// Largest deviation of the factors (and their rescalings) from unit
    /// bidiagonal form.
    pub fn bidiagonality_residual(&self) -> S {
        let side = self.side;
        let one = S::one(&self.ctx);
        let mut terms = Vec::new();
        for m in self.factors.iter().chain(&self.rescaled) {
            for (i, j, v) in m.entries() {
                let band = match side {
                    Side::Left => i == j + 1,
                    Side::Right => j == i + 1,
                };
                if i == j {
                    terms.push(v.clone() - &one);
                } else if !band {
                    terms.push(v.clone());
                }
            }
        }
        max_abs(&self.ctx, terms)
    }

    /// Three independent evaluations of the off-diagonal entry of factor `k`:
    /// the entry itself, the ratio of diagonals of the stage factorizations and
    /// the difference of the stage triangular factors.
    pub fn entry_formulas(&self, k: usize, n: usize) -> Result<[S; 3]> {
        let entry = self.off_diagonal(k, n)?;
        let (prev, cur) = (&self.stages[k - 1].factors, &self.stages[k].factors);
        let (ratio, difference) = match self.side {
            Side::Left => {
                let (up_prev, up_cur) = (prev.upper(Side::Left), cur.upper(Side::Left));
                let ratio = up_cur[(n, n)].clone() / &up_prev[(n + 1, n + 1)];
                let diff = prev.lower(Side::Left)[(n + 1, n)].clone() - &cur.lower(Side::Left)[(n + 1, n)];
                (ratio, diff)
            }
            Side::Right => {
                let (lo_prev, lo_cur) = (prev.lower(Side::Right), cur.lower(Side::Right));
                let ratio = lo_cur[(n, n)].clone() / &lo_prev[(n + 1, n + 1)];
                let diff = prev.upper(Side::Right)[(n, n + 1)].clone() - &cur.upper(Side::Right)[(n, n + 1)];
                (ratio, diff)
            }
        };
        Ok([entry, ratio, difference])
    }

    /// Off-diagonal entry of factor `k` as a ratio of leading coefficients of
    /// the dominant components: left-normalized `A` for a left chain,
    /// right-normalized `B` for a right chain.
    pub fn lc_ratio(&self, k: usize, n: usize) -> Result<S> {
        self.off_diagonal(k, n)?;
        let (set, norm) = match self.side {
            Side::Left => (PolySet::A, Side::Left),
            Side::Right => (PolySet::B, Side::Right),
        };
        let cur = self.stages[k].factors.polynomials(set, norm);
        let prev = self.stages[k - 1].factors.polynomials(set, norm);
        Ok(cur.leading_coefficient(n)? / &prev.leading_coefficient(n + 1)?)
    }

    /// Largest pairwise disagreement between the entry, the two formulas and
    /// the leading-coefficient ratio over every step and index.
    pub fn triple_equality_max(&self) -> Result<S> {
        let mut worst = S::zero(&self.ctx);
        for k in 1..=self.steps() {
            for n in 0..self.window - 1 {
                let [entry, ratio, diff] = self.entry_formulas(k, n)?;
                let lc = self.lc_ratio(k, n)?;
                for other in [&ratio, &diff, &lc] {
                    worst = max_of(worst, scaled_diff(&entry, other));
                }
            }
        }
        Ok(worst)
    }

    /// Largest scaled deviation between each stage factorization and the
    /// factorization of the parameter-level transformed measure. Stages without
    /// a parameter-level measure are skipped.
    pub fn parameter_level_residual(&self) -> Result<S> {
        let mut worst = S::zero(&self.ctx);
        for stage in self.stages.iter().skip(1) {
            let Some(measure) = &stage.measure else { continue };
            let m = MomentMatrix::build(measure, self.window, self.window)?;
            let direct = factorize(&m, self.window, &self.ctx).map_err(|e| e.at_stage(stage.k))?;
            let pairs = [
                (direct.lower(Side::Left), stage.factors.lower(Side::Left)),
                (direct.upper(Side::Right), stage.factors.upper(Side::Right)),
            ];
            for (a, b) in &pairs {
                for (i, j, v) in a.entries() {
                    worst = max_of(worst, scaled_diff(v, &b[(i, j)]));
                }
            }
            for (a, b) in direct.d().iter().zip(stage.factors.d()) {
                worst = max_of(worst, scaled_diff(a, b));
            }
        }
        Ok(worst)
    }

    /// Checks both printed orders for the upper factor against the
    /// transformation law `U_R^(k-1) = U_R^(k) U_k`. Returns the residual of
    /// `(U_R^(k))^-1 U_R^(k-1)` and of `U_R^(k-1) (U_R^(k))^-1`, maximized over
    /// `k`. Only meaningful for a right chain.
    pub fn upper_order_residuals(&self) -> Result<(S, S)> {
        if self.side != Side::Right {
            return Err(Error::NormalizationMismatch("upper factor order needs a right chain".into()));
        }
        let mut derived = S::zero(&self.ctx);
        let mut printed = S::zero(&self.ctx);
        for k in 1..=self.steps() {
            let prev = self.stages[k - 1].factors.upper(Side::Right);
            let cur = self.stages[k].factors.upper(Side::Right);
            let cur_inv = self.stages[k].factors.upper_inverse(Side::Right);
            let a = cur_inv.mul(&prev);
            let b = prev.mul(&cur_inv);
            derived = max_of(derived, cur.mul(&a).max_abs_diff(&prev, &self.ctx));
            printed = max_of(printed, cur.mul(&b).max_abs_diff(&prev, &self.ctx));
        }
        Ok((derived, printed))
    }

    pub fn report_json(&self, residuals: &ChainResiduals<S>) -> Value {
        let (kind, w) = match self.side {
            Side::Left => ("L", self.window),
            Side::Right => ("U", self.window),
        };
        let factors: Vec<Value> = (1..=self.steps())
            .map(|k| {
                let f = &self.factors[k - 1];
                let entries: Vec<Value> = (0..w - 1)
                    .map(|n| match self.side {
                        Side::Left => json!([n + 1, n, f[(n + 1, n)].to_text()]),
                        Side::Right => json!([n, n + 1, f[(n, n + 1)].to_text()]),
                    })
                    .collect();
                json!({ "k": k, "kind": kind, "entries": entries })
            })
            .collect();
        json!({
            "side": self.side.name(),
            "K": self.steps(),
            "factors": factors,
            "residuals": {
                "theorem": residuals.theorem.as_ref().map(|v| v.to_text()),
                "darboux": residuals.darboux.iter().map(|v| v.to_text()).collect::<Vec<_>>(),
                "triple_equality_max": residuals.triple_equality_max.to_text(),
            },
        })
    }
}

/// Residuals attached to a chain report.
#[derive(Clone, Debug)]
pub struct ChainResiduals<S> {
    pub theorem: Option<S>,
    pub darboux: Vec<S>,
    pub triple_equality_max: S,
}

fn check_pair<S: Scalar>(left: &BidiagonalChain<S>, right: &BidiagonalChain<S>, n_max: usize) -> Result<()> {
    if left.side != Side::Left || right.side != Side::Right {
        return Err(Error::ChainMismatch("expected a left chain and a right chain".into()));
    }
    if (left.p, left.q) != (right.p, right.q) {
        return Err(Error::ChainMismatch("chains belong to different (p, q)".into()));
    }
    if left.steps() != left.p || right.steps() != right.q {
        return Err(Error::ChainMismatch(format!(
            "need {} left and {} right steps, got {} and {}",
            left.p,
            left.q,
            left.steps(),
            right.steps()
        )));
    }
    let available = left.n_max.min(right.n_max);
    if n_max > available {
        return Err(Error::WindowTooSmall {
            needed: n_max + 1,
            available: available + 1,
        });
    }
    let tol = left.ctx.residual_tol::<S>();
    let base_l = left.stages[0].factors.d();
    let base_r = right.stages[0].factors.d();
    for (a, b) in base_l.iter().zip(base_r) {
        if scaled_diff(a, b) > tol {
            return Err(Error::ChainMismatch("chains start from different base factorizations".into()));
        }
    }
    Ok(())
}

/// `D^(p) D^-1` from the left chain's last stage, or `D^(q) D^-1` from the
/// right chain's, on the common window.
fn stage_ratio<S: Scalar>(chain: &BidiagonalChain<S>, w: usize) -> Vec<S> {
    let base = chain.stages[0].factors.d();
    let last = chain.stages.last().expect("chain has stage 0").factors.d();
    (0..w).map(|i| last[i].clone() / &base[i]).collect()
}

/// Largest scaled difference between the diagonals of the `p`-fold left
/// stage and the `q`-fold right stage. Both factorize the moment matrix of
/// `x d mu`, so the two agree.
pub fn chain_meeting_residual<S: Scalar>(left: &BidiagonalChain<S>, right: &BidiagonalChain<S>) -> Result<S> {
    check_pair(left, right, 0)?;
    let dl = left.stages[left.p].factors.d();
    let dr = right.stages[right.q].factors.d();
    let mut worst = S::zero(&left.ctx);
    for (a, b) in dl.iter().zip(dr) {
        worst = max_of(worst, scaled_diff(a, b));
    }
    Ok(worst)
}

fn common_window<S: Scalar>(left: &BidiagonalChain<S>, right: &BidiagonalChain<S>) -> usize {
    left.window.min(right.window)
}

fn checked_meeting<S: Scalar>(left: &BidiagonalChain<S>, right: &BidiagonalChain<S>) -> Result<()> {
    let meeting = chain_meeting_residual(left, right)?;
    if meeting > left.ctx.residual_tol::<S>() {
        return Err(Error::ChainMismatch(format!(
            "p-fold left and q-fold right diagonals differ by {}",
            meeting.to_text()
        )));
    }
    Ok(())
}

/// Assembles `T_L = L_1..L_p D^(p) D^-1 U~_q..U~_1` or
/// `T_R = L~_1..L~_p D^-1 D^(q) U_q..U_1` and compares it with the recurrence
/// matrix built directly from the base factorization.
pub fn assemble_t<S: Scalar>(
    left: &BidiagonalChain<S>,
    right: &BidiagonalChain<S>,
    side: Side,
    n_max: usize,
) -> Result<(BandedRecurrence<S>, S)> {
    darboux_permuted(left, right, side, 0, n_max)
}

/// Cyclically permuted product giving the recurrence matrix of the `k`-fold
/// transformed measure:
/// `T_L^(k) = L_(k+1)..L_p D^(p) D^-1 U~_q..U~_1 L_1..L_k` and
/// `T_R^(k) = U_k..U_1 L~_1..L~_p D^-1 D^(q) U_q..U_(k+1)`.
/// The residual is taken against the recurrence matrix of stage `k`.
pub fn darboux_permuted<S: Scalar>(
    left: &BidiagonalChain<S>,
    right: &BidiagonalChain<S>,
    side: Side,
    k: usize,
    n_max: usize,
) -> Result<(BandedRecurrence<S>, S)> {
    check_pair(left, right, n_max)?;
    checked_meeting(left, right)?;
    let ctx = &left.ctx;
    let w = common_window(left, right);
    let (p, q) = (left.p, left.q);
    let limit = match side {
        Side::Left => p,
        Side::Right => q,
    };
    if k > limit {
        return Err(Error::IndexOutOfWindow {
            index: k,
            window: limit + 1,
        });
    }
    let (full, reference) = match side {
        Side::Left => {
            let ratio = Matrix::diagonal(&stage_ratio(left, w), ctx);
            let head = product(left.factors[k..].iter(), w, ctx);
            let tail = product(right.rescaled.iter().rev(), w, ctx);
            let wrap = product(left.factors[..k].iter(), w, ctx);
            let full = head.mul(&ratio).mul(&tail).mul(&wrap);
            (full, build_t(&left.stages[k].factors, Side::Left, n_max)?)
        }
        Side::Right => {
            let ratio = Matrix::diagonal(&stage_ratio(right, w), ctx);
            let wrap = product(right.factors[..k].iter().rev(), w, ctx);
            let head = product(left.rescaled.iter(), w, ctx);
            let tail = product(right.factors[k..].iter().rev(), w, ctx);
            let full = wrap.mul(&head).mul(&ratio).mul(&tail);
            (full, build_t(&right.stages[k].factors, Side::Right, n_max)?)
        }
    };
    let t = BandedRecurrence::from_entries(side, p, q, full.block(n_max + 1, n_max + 1));
    let residual = t.max_abs_diff(&reference, ctx);
    Ok((t, residual))
}

/// Conjugation form of the Darboux transformation:
/// `T_L^(k) = L_k^-1..L_1^-1 T_L L_1..L_k` or
/// `T_R^(k) = U_k..U_1 T_R U_1^-1..U_k^-1`.
///
/// With `T` known on `0..=n_max`, the result is exact on
/// `0..=n_max - min(q, k)` (left) or `0..=n_max - min(p, k)` (right), and the
/// residual is taken against the stage-`k` recurrence matrix on that window.
pub fn darboux<S: Scalar>(chain: &BidiagonalChain<S>, base_t: &BandedRecurrence<S>, k: usize) -> Result<(BandedRecurrence<S>, S)> {
    if base_t.side() != chain.side {
        return Err(Error::NormalizationMismatch(format!(
            "{} chain with {} recurrence matrix",
            chain.side.name(),
            base_t.side().name()
        )));
    }
    if k > chain.steps() {
        return Err(Error::IndexOutOfWindow {
            index: k,
            window: chain.steps() + 1,
        });
    }
    let ctx = &chain.ctx;
    let margin = match chain.side {
        Side::Left => chain.q.min(k),
        Side::Right => chain.p.min(k),
    };
    if base_t.n_max() < margin {
        return Err(Error::WindowTooSmall {
            needed: margin + 1,
            available: base_t.n_max() + 1,
        });
    }
    let n_out = base_t.n_max() - margin;
    let w = base_t.n_max() + 1;
    if w > chain.window {
        return Err(Error::WindowTooSmall {
            needed: w,
            available: chain.window,
        });
    }
    let t = base_t.entries();
    let full = match chain.side {
        Side::Left => {
            let prod = product(chain.factors[..k].iter(), w, ctx);
            prod.unit_lower_inverse().mul(t).mul(&prod)
        }
        Side::Right => {
            let prod = product(chain.factors[..k].iter().rev(), w, ctx);
            prod.mul(t).mul(&prod.unit_upper_inverse())
        }
    };
    let out = BandedRecurrence::from_entries(chain.side, chain.p, chain.q, full.block(n_out + 1, n_out + 1));
    let reference = build_t(&chain.stages[k].factors, chain.side, n_out)?;
    let residual = out.max_abs_diff(&reference, ctx);
    Ok((out, residual))
}
