//! The `(p, q)`-banded recurrence matrix `T = L Lambda^q L^-1 = U^-1 (Lambda^p)^T U`.
//!
//! Entries are produced on the window `0..=n_max`, which is exact as long as
//! the factorization covers `n_max + max(p, q) + 1` indices.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gaussborel::{GaussBorelFactors, PolySet, PolynomialTable, Side};
use crate::matrix::Matrix;
use crate::moments::triplets_csv;
use crate::scalar::{max_abs, PrecisionContext, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct BandedRecurrence<S> {
    side: Side,
    n_max: usize,
    p: usize,
    q: usize,
    entries: Matrix<S>,
}

fn check_window<S: Scalar>(f: &GaussBorelFactors<S>, n_max: usize) -> Result<()> {
    let needed = n_max + f.p().max(f.q()) + 1;
    if f.size() < needed {
        return Err(Error::WindowTooSmall {
            needed,
            available: f.size(),
        });
    }
    Ok(())
}

/// `T = L Lambda^q L^-1` in the requested normalization.
pub fn build_t<S: Scalar>(f: &GaussBorelFactors<S>, side: Side, n_max: usize) -> Result<BandedRecurrence<S>> {
    check_window(f, n_max)?;
    let q = f.q();
    let l = f.lower(side);
    let l_inv = f.lower_inverse(side);
    let entries = Matrix::from_fn(n_max + 1, n_max + 1, |n, m| {
        let mut acc = l[(0, 0)].zero_like();
        for i in m.saturating_sub(q)..=n {
            acc += &(l[(n, i)].clone() * &l_inv[(i + q, m)]);
        }
        acc
    });
    Ok(BandedRecurrence {
        side,
        n_max,
        p: f.p(),
        q,
        entries,
    })
}

/// `T = U^-1 (Lambda^p)^T U`, the second route to the same matrix.
pub fn build_t_via_upper<S: Scalar>(
    f: &GaussBorelFactors<S>,
    side: Side,
    n_max: usize,
) -> Result<BandedRecurrence<S>> {
    check_window(f, n_max)?;
    let p = f.p();
    let u = f.upper(side);
    let u_inv = f.upper_inverse(side);
    let entries = Matrix::from_fn(n_max + 1, n_max + 1, |n, m| {
        let mut acc = u[(0, 0)].zero_like();
        for k in n.max(p)..=m + p {
            acc += &(u_inv[(n, k)].clone() * &u[(k - p, m)]);
        }
        acc
    });
    Ok(BandedRecurrence {
        side,
        n_max,
        p,
        q: f.q(),
        entries,
    })
}

impl<S: Scalar> BandedRecurrence<S> {
    pub fn from_entries(side: Side, p: usize, q: usize, entries: Matrix<S>) -> Self {
        assert_eq!(entries.rows(), entries.cols());
        assert!(entries.rows() > 0);
        BandedRecurrence {
            side,
            n_max: entries.rows() - 1,
            p,
            q,
            entries,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, n: usize, m: usize) -> &S {
        &self.entries[(n, m)]
    }

    pub fn entries(&self) -> &Matrix<S> {
        &self.entries
    }

    pub fn in_band(&self, n: usize, m: usize) -> bool {
        m <= n + self.q && n <= m + self.p
    }

    /// Largest entry outside the `p` sub- / `q` superdiagonals.
    pub fn band_violation(&self, ctx: &PrecisionContext) -> S {
        self.entries.max_abs_where(ctx, |n, m| !self.in_band(n, m))
    }

    /// Restriction to the window `0..=n_max`.
    pub fn truncate(&self, n_max: usize) -> Result<Self> {
        if n_max > self.n_max {
            return Err(Error::IndexOutOfWindow {
                index: n_max,
                window: self.n_max + 1,
            });
        }
        Ok(BandedRecurrence {
            side: self.side,
            n_max,
            p: self.p,
            q: self.q,
            entries: self.entries.block(n_max + 1, n_max + 1),
        })
    }

    /// `max |T - other|` on the common window.
    pub fn max_abs_diff(&self, other: &BandedRecurrence<S>, ctx: &PrecisionContext) -> S {
        let w = self.n_max.min(other.n_max) + 1;
        self.entries.block(w, w).max_abs_diff(&other.entries.block(w, w), ctx)
    }

    /// Residual of `T B(x) = x B(x)` (for a `B` table) or `A(x) T = x A(x)`
    /// (for an `A` table) at the given sample points, over the rows whose band
    /// fits inside the window. The table must use the same normalization.
    pub fn eigen_residual(&self, table: &PolynomialTable<S>, xs: &[S], ctx: &PrecisionContext) -> Result<S> {
        if table.side() != self.side {
            return Err(Error::NormalizationMismatch(format!(
                "{} recurrence with {}-normalized polynomials",
                self.side.name(),
                table.side().name()
            )));
        }
        if table.len() <= self.n_max {
            return Err(Error::WindowTooSmall {
                needed: self.n_max + 1,
                available: table.len(),
            });
        }
        let mut terms = Vec::new();
        match table.set() {
            PolySet::B => {
                for n in 0..(self.n_max + 1).saturating_sub(self.q) {
                    for b in 0..table.components() {
                        for x in xs {
                            let mut acc = -(x.clone() * &table.eval(n, b, x));
                            for m in n.saturating_sub(self.p)..=n + self.q {
                                acc += &(self.entries[(n, m)].clone() * &table.eval(m, b, x));
                            }
                            terms.push(acc);
                        }
                    }
                }
            }
            PolySet::A => {
                for m in 0..(self.n_max + 1).saturating_sub(self.p) {
                    for a in 0..table.components() {
                        for x in xs {
                            let mut acc = -(x.clone() * &table.eval(m, a, x));
                            for n in m.saturating_sub(self.q)..=m + self.p {
                                acc += &(table.eval(n, a, x) * &self.entries[(n, m)]);
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
        let entries: Vec<Value> = self
            .entries
            .entries()
            .filter(|&(n, m, _)| self.in_band(n, m))
            .map(|(n, m, v)| json!([n, m, v.to_text()]))
            .collect();
        json!({
            "side": self.side.name(),
            "n_max": self.n_max,
            "p": self.p,
            "q": self.q,
            "entries": entries,
        })
    }

    pub fn to_csv(&self) -> String {
        triplets_csv(&self.entries, |n, m| self.in_band(n, m))
    }
}
