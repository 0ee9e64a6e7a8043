//! Finite truncations of the moment matrix and their shifts.
//!
//! Row `m` pairs with component `m mod q` of the row measures and power
//! `m / q`; column `n` pairs with component `n mod p` and power `n / p`, so
//! `M[m][n] = moment(m mod q, n mod p, m/q + n/p)`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::measures::MeasureMatrix;
use crate::scalar::{PrecisionContext, Scalar};

/// Rows (and columns) of the base truncation for a run producing window
/// `n_out` after up to `k` shifts.
pub fn truncation_size(n_out: usize, k: usize, p: usize, q: usize) -> usize {
    n_out + k + p.max(q) + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix<S> {
    p: usize,
    q: usize,
    entries: Matrix<S>,
}

impl<S: Scalar> MomentMatrix<S> {
    pub fn build(mm: &MeasureMatrix<S>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InsufficientTruncation("moment matrix needs at least one row and column".into()));
        }
        let (p, q) = (mm.p(), mm.q());
        let mut data = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                data.push(mm.moment(m % q, n % p, m / q + n / p)?);
            }
        }
        let mut it = data.into_iter();
        let entries = Matrix::from_fn(rows, cols, |_, _| it.next().expect("sized above"));
        Ok(MomentMatrix { p, q, entries })
    }

    /// Wraps raw entries; used for perturbation tests and external data.
    pub fn from_entries(p: usize, q: usize, entries: Matrix<S>) -> Self {
        MomentMatrix { p, q, entries }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn entry(&self, m: usize, n: usize) -> &S {
        &self.entries[(m, n)]
    }

    pub fn entries(&self) -> &Matrix<S> {
        &self.entries
    }

    /// `M (Lambda^k)^T`: drops the first `k` columns.
    pub fn shift_left(&self, k: usize) -> Result<Self> {
        if k >= self.cols() {
            return Err(Error::InsufficientTruncation(format!(
                "left shift by {k} needs more than {} columns",
                self.cols()
            )));
        }
        Ok(MomentMatrix {
            p: self.p,
            q: self.q,
            entries: self.entries.sub_block(0, k, self.rows(), self.cols() - k),
        })
    }

    /// `Lambda^k M`: drops the first `k` rows.
    pub fn shift_right(&self, k: usize) -> Result<Self> {
        if k >= self.rows() {
            return Err(Error::InsufficientTruncation(format!(
                "right shift by {k} needs more than {} rows",
                self.rows()
            )));
        }
        Ok(MomentMatrix {
            p: self.p,
            q: self.q,
            entries: self.entries.sub_block(k, 0, self.rows() - k, self.cols()),
        })
    }

    /// Largest deviation from `Lambda_q M = M Lambda_p^T` on the common window.
    pub fn hankel_residual(&self, ctx: &PrecisionContext) -> Result<S> {
        if self.rows() < self.q + 1 || self.cols() < self.p + 1 {
            return Err(Error::InsufficientTruncation(format!(
                "Hankel check needs at least {}x{} entries",
                self.q + 1,
                self.p + 1
            )));
        }
        let rows = self.rows() - self.q;
        let cols = self.cols() - self.p;
        let down = self.entries.sub_block(self.q, 0, rows, cols);
        let across = self.entries.sub_block(0, self.p, rows, cols);
        Ok(down.max_abs_diff(&across, ctx))
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .entries()
            .map(|(r, c, v)| json!([r, c, v.to_text()]))
            .collect();
        json!({
            "rows": self.rows(),
            "cols": self.cols(),
            "p": self.p,
            "q": self.q,
            "entries": entries,
        })
    }

    pub fn to_csv(&self) -> String {
        triplets_csv(&self.entries, |_, _| true)
    }
}

/// `row,col,value` CSV of the selected entries, values quoted.
pub fn triplets_csv<S: Scalar>(m: &Matrix<S>, keep: impl Fn(usize, usize) -> bool) -> String {
    let mut out = String::from("row,col,value\n");
    for (r, c, v) in m.entries() {
        if keep(r, c) {
            out.push_str(&format!("{r},{c},\"{}\"\n", v.to_text()));
        }
    }
    out
}
