//! Gauss–Borel (LDU) factorization of a moment matrix window and the mixed
//! multiple orthogonal polynomials read off from it.
//!
//! On an `N x N` window the factorization is `L_L M U_R = D` with `L_L` unit
//! lower triangular, `U_R` unit upper triangular and `D` diagonal. The other
//! normalizations follow as `L_R = D^-1 L_L` and `U_L = U_R D^-1`.
//!
//! Elimination never pivots: row or column exchanges would break the link
//! between the triangular factors and the polynomials.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::measures::MeasureMatrix;
use crate::moments::MomentMatrix;
use crate::scalar::{max_abs, Mode, PrecisionContext, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Which polynomial family a table holds: `B` (rows of `L`, `q` components)
/// or `A` (columns of `U`, `p` components).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolySet {
    B,
    A,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussBorelFactors<S> {
    p: usize,
    q: usize,
    /// `L_L`
    lower: Matrix<S>,
    /// `L_L^-1`, the unit lower factor of `M = L_L^-1 D U_R^-1`
    lower_inv: Matrix<S>,
    diag: Vec<S>,
    /// `U_R`
    upper: Matrix<S>,
    /// `U_R^-1`
    upper_inv: Matrix<S>,
}

/// Factorizes the leading `n x n` block of `m`.
///
/// Fails with `SingularMinor(k)` on an exactly zero pivot in rational mode
/// and `NearSingularMinor(k)` when `|pivot| < pivot_tol * max|Schur complement|`
/// in floating point.
pub fn factorize<S: Scalar>(m: &MomentMatrix<S>, n: usize, ctx: &PrecisionContext) -> Result<GaussBorelFactors<S>> {
    if n == 0 || n > m.rows().min(m.cols()) {
        return Err(Error::WindowTooSmall {
            needed: n.max(1),
            available: m.rows().min(m.cols()),
        });
    }
    let mut a = m.entries().block(n, n);
    let mut lower_inv = Matrix::identity(n, ctx);
    let mut upper_inv = Matrix::identity(n, ctx);
    let mut diag = Vec::with_capacity(n);
    let pivot_tol = ctx.pivot_tol::<S>();
    for k in 0..n {
        let pivot = a[(k, k)].clone();
        let singular = match S::MODE {
            Mode::Rational => pivot.is_zero().then_some(Error::SingularMinor { stage: 0, index: k }),
            Mode::BigFloat => {
                let scale = a.max_abs_where(ctx, |i, j| i >= k && j >= k);
                (pivot.is_zero() || pivot.abs_value() < pivot_tol.clone() * &scale)
                    .then_some(Error::NearSingularMinor { stage: 0, index: k })
            }
        };
        if let Some(e) = singular {
            return Err(e);
        }
        for i in k + 1..n {
            lower_inv[(i, k)] = a[(i, k)].clone() / &pivot;
            upper_inv[(k, i)] = a[(k, i)].clone() / &pivot;
        }
        for i in k + 1..n {
            let li = lower_inv[(i, k)].clone();
            for j in k + 1..n {
                let t = li.clone() * &a[(k, j)];
                a[(i, j)] -= &t;
            }
        }
        diag.push(pivot);
    }
    let lower = lower_inv.unit_lower_inverse();
    let upper = upper_inv.unit_upper_inverse();
    Ok(GaussBorelFactors {
        p: m.p(),
        q: m.q(),
        lower,
        lower_inv,
        diag,
        upper,
        upper_inv,
    })
}

fn recip<S: Scalar>(v: &[S]) -> Vec<S> {
    v.iter().map(|d| d.one_like() / d).collect()
}

impl<S: Scalar> GaussBorelFactors<S> {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> &[S] {
        &self.diag
    }

    /// Factorization of the leading `k x k` block.
    pub fn leading(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.size() {
            return Err(Error::IndexOutOfWindow {
                index: k,
                window: self.size(),
            });
        }
        Ok(GaussBorelFactors {
            p: self.p,
            q: self.q,
            lower: self.lower.block(k, k),
            lower_inv: self.lower_inv.block(k, k),
            diag: self.diag[..k].to_vec(),
            upper: self.upper.block(k, k),
            upper_inv: self.upper_inv.block(k, k),
        })
    }

    /// `L` in the given normalization (`L_L` unit, `L_R = D^-1 L_L`).
    pub fn lower(&self, side: Side) -> Matrix<S> {
        match side {
            Side::Left => self.lower.clone(),
            Side::Right => self.lower.scale_rows(&recip(&self.diag)),
        }
    }

    /// `L^-1` in the given normalization.
    pub fn lower_inverse(&self, side: Side) -> Matrix<S> {
        match side {
            Side::Left => self.lower_inv.clone(),
            Side::Right => self.lower_inv.scale_cols(&self.diag),
        }
    }

    /// `U` in the given normalization (`U_L = U_R D^-1`, `U_R` unit).
    pub fn upper(&self, side: Side) -> Matrix<S> {
        match side {
            Side::Left => self.upper.scale_cols(&recip(&self.diag)),
            Side::Right => self.upper.clone(),
        }
    }

    pub fn upper_inverse(&self, side: Side) -> Matrix<S> {
        match side {
            Side::Left => self.upper_inv.scale_rows(&self.diag),
            Side::Right => self.upper_inv.clone(),
        }
    }

    /// `max |L_L M U_R D^-1 - I|` over the window.
    pub fn biorthogonality_residual(&self, m: &MomentMatrix<S>, ctx: &PrecisionContext) -> Result<S> {
        let n = self.size();
        if m.rows() < n || m.cols() < n {
            return Err(Error::WindowTooSmall {
                needed: n,
                available: m.rows().min(m.cols()),
            });
        }
        let product = self
            .lower
            .mul(&m.entries().block(n, n))
            .mul(&self.upper.scale_cols(&recip(&self.diag)));
        Ok(product.max_abs_diff(&Matrix::identity(n, ctx), ctx))
    }

    /// Polynomial table of `B` or `A` in the given normalization.
    pub fn polynomials(&self, set: PolySet, side: Side) -> PolynomialTable<S> {
        let n = self.size();
        let polys = match set {
            PolySet::B => {
                let l = self.lower(side);
                (0..n)
                    .map(|row| {
                        (0..self.q)
                            .map(|b| (b..=row).step_by(self.q).map(|col| l[(row, col)].clone()).collect())
                            .collect()
                    })
                    .collect()
            }
            PolySet::A => {
                let u = self.upper(side);
                (0..n)
                    .map(|col| {
                        (0..self.p)
                            .map(|a| (a..=col).step_by(self.p).map(|row| u[(row, col)].clone()).collect())
                            .collect()
                    })
                    .collect()
            }
        };
        PolynomialTable {
            set,
            side,
            p: self.p,
            q: self.q,
            polys,
        }
    }

    pub fn to_json(&self) -> Value {
        let n = self.size();
        let l: Vec<Value> = (0..n)
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .map(|(i, j)| json!([i, j, self.lower[(i, j)].to_text()]))
            .collect();
        let u: Vec<Value> = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| json!([i, j, self.upper[(i, j)].to_text()]))
            .collect();
        json!({
            "N": n,
            "L": l,
            "D": self.diag.iter().map(|d| d.to_text()).collect::<Vec<_>>(),
            "U": u,
        })
    }
}

/// Mixed multiple orthogonal polynomials on the step-line.
///
/// `polys[n][c]` holds the ascending coefficients of component `c` of the
/// `n`-th polynomial. For `B`, component `b` has coefficients
/// `L[n][j q + b]` for `j q + b <= n`; for `A`, component `a` has
/// `U[j p + a][n]` for `j p + a <= n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialTable<S> {
    set: PolySet,
    side: Side,
    p: usize,
    q: usize,
    polys: Vec<Vec<Vec<S>>>,
}

fn horner<S: Scalar>(coeffs: &[S], x: &S) -> S {
    let mut acc = x.zero_like();
    for c in coeffs.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

/// Number of moments `l` the `n`-th polynomial annihilates against
/// `component`: `l` runs over `0..ceil((n - component) / block)`, empty when
/// `n <= component`.
fn step_line_count(n: usize, component: usize, block: usize) -> usize {
    if n <= component {
        0
    } else {
        (n - component).div_ceil(block)
    }
}

impl<S: Scalar> PolynomialTable<S> {
    pub fn set(&self) -> PolySet {
        self.set
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn components(&self) -> usize {
        match self.set {
            PolySet::B => self.q,
            PolySet::A => self.p,
        }
    }

    pub fn component(&self, n: usize, c: usize) -> &[S] {
        &self.polys[n][c]
    }

    pub fn polynomial(&self, n: usize) -> &[Vec<S>] {
        &self.polys[n]
    }

    pub fn eval(&self, n: usize, c: usize, x: &S) -> S {
        horner(&self.polys[n][c], x)
    }

    /// Leading coefficient of the step-line dominant component
    /// (`n mod q` for `B`, `n mod p` for `A`).
    pub fn leading_coefficient(&self, n: usize) -> Result<S> {
        if n >= self.len() {
            return Err(Error::IndexOutOfWindow {
                index: n,
                window: self.len(),
            });
        }
        let c = n % self.components();
        let coeffs = &self.polys[n][c];
        Ok(coeffs.last().expect("dominant component has degree n / block").clone())
    }

    /// Largest violation of the step-line orthogonality relations against the
    /// measure's moments.
    pub fn orthogonality_residual(&self, mm: &MeasureMatrix<S>, ctx: &PrecisionContext) -> Result<S> {
        let mut terms = Vec::new();
        for n in 0..self.len() {
            match self.set {
                PolySet::A => {
                    for b in 0..self.q {
                        for l in 0..step_line_count(n, b, self.q) {
                            let mut acc = S::zero(ctx);
                            for a in 0..self.p {
                                for (j, c) in self.polys[n][a].iter().enumerate() {
                                    acc += &(c.clone() * &mm.moment(b, a, l + j)?);
                                }
                            }
                            terms.push(acc);
                        }
                    }
                }
                PolySet::B => {
                    for a in 0..self.p {
                        for l in 0..step_line_count(n, a, self.p) {
                            let mut acc = S::zero(ctx);
                            for b in 0..self.q {
                                for (j, c) in self.polys[n][b].iter().enumerate() {
                                    acc += &(c.clone() * &mm.moment(b, a, l + j)?);
                                }
                            }
                            terms.push(acc);
                        }
                    }
                }
            }
        }
        Ok(max_abs(ctx, terms))
    }

    pub fn to_json(&self) -> Value {
        let mut out = Vec::new();
        for (n, comps) in self.polys.iter().enumerate() {
            for (c, coeffs) in comps.iter().enumerate() {
                out.push(json!({
                    "n": n,
                    "component": c + 1,
                    "coeffs": coeffs.iter().map(|v| v.to_text()).collect::<Vec<_>>(),
                }));
            }
        }
        Value::Array(out)
    }
}
