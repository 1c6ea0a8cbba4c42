//! Smith normal form of integer matrices over checked i128 arithmetic.
//!
//! Diagonalization by unimodular row and column operations, with the
//! transform matrices (and their inverses) tracked so that `u * m * v = d`
//! exactly. Entry growth is overflow-checked, never wrapped.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnfError {
    #[error("integer overflow during Smith reduction")]
    Overflow,
    #[error("matrix rows have unequal lengths")]
    RaggedMatrix,
}

pub type Matrix = Vec<Vec<i128>>;

/// Result of a Smith reduction: `u * source * v = d`, with `u`, `v`
/// unimodular and the diagonal of `d` a divisibility chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfResult {
    pub d: Matrix,
    pub u: Matrix,
    pub v: Matrix,
    /// Inverse of `u`, tracked alongside the reduction.
    pub u_inv: Matrix,
    /// Inverse of `v`, tracked alongside the reduction.
    pub v_inv: Matrix,
    pub source: Matrix,
}

impl SnfResult {
    /// Diagonal entries (length `min(rows, cols)`), sign-normalized to be >= 0.
    pub fn diagonal(&self) -> Vec<i128> {
        let n = self.d.len().min(self.d.first().map_or(0, |r| r.len()));
        (0..n).map(|i| self.d[i][i]).collect()
    }

    /// Count of nonzero diagonal entries.
    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|&&x| x != 0).count()
    }
}

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect()
}

struct Reduction {
    d: Matrix,
    u: Matrix,
    u_inv: Matrix,
    v: Matrix,
    v_inv: Matrix,
    nr: usize,
    nc: usize,
}

impl Reduction {
    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.d.swap(a, b);
        self.u.swap(a, b);
        for row in &mut self.u_inv {
            row.swap(a, b);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for row in &mut self.d {
            row.swap(a, b);
        }
        for row in &mut self.v {
            row.swap(a, b);
        }
        self.v_inv.swap(a, b);
    }

    fn negate_row(&mut self, r: usize) {
        for x in &mut self.d[r] {
            *x = -*x;
        }
        for x in &mut self.u[r] {
            *x = -*x;
        }
        for row in &mut self.u_inv {
            row[r] = -row[r];
        }
    }

    /// row[r] -= t * row[k]
    fn add_row_multiple(&mut self, r: usize, k: usize, t: i128) -> Result<(), SnfError> {
        if t == 0 {
            return Ok(());
        }
        for j in 0..self.nc {
            self.d[r][j] = sub_mul(self.d[r][j], t, self.d[k][j])?;
        }
        for j in 0..self.nr {
            self.u[r][j] = sub_mul(self.u[r][j], t, self.u[k][j])?;
        }
        // u_inv gets the inverse op on the right: col k += t * col r
        for i in 0..self.nr {
            self.u_inv[i][k] = add_mul(self.u_inv[i][k], t, self.u_inv[i][r])?;
        }
        Ok(())
    }

    /// col[c] -= t * col[k]
    fn add_col_multiple(&mut self, c: usize, k: usize, t: i128) -> Result<(), SnfError> {
        if t == 0 {
            return Ok(());
        }
        for i in 0..self.nr {
            self.d[i][c] = sub_mul(self.d[i][c], t, self.d[i][k])?;
        }
        for i in 0..self.nc {
            self.v[i][c] = sub_mul(self.v[i][c], t, self.v[i][k])?;
        }
        // v_inv gets the inverse op on the left: row k += t * row c
        for j in 0..self.nc {
            self.v_inv[k][j] = add_mul(self.v_inv[k][j], t, self.v_inv[c][j])?;
        }
        Ok(())
    }

    /// Minimal-absolute-value nonzero entry in the trailing block, ties broken
    /// by row-major position.
    fn pivot(&self, k: usize) -> Option<(usize, usize)> {
        let mut best: Option<(i128, usize, usize)> = None;
        for i in k..self.nr {
            for j in k..self.nc {
                let a = self.d[i][j].abs();
                if a != 0 && best.is_none_or(|(b, _, _)| a < b) {
                    best = Some((a, i, j));
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }
}

fn sub_mul(a: i128, t: i128, b: i128) -> Result<i128, SnfError> {
    t.checked_mul(b)
        .and_then(|tb| a.checked_sub(tb))
        .ok_or(SnfError::Overflow)
}

fn add_mul(a: i128, t: i128, b: i128) -> Result<i128, SnfError> {
    t.checked_mul(b)
        .and_then(|tb| a.checked_add(tb))
        .ok_or(SnfError::Overflow)
}

pub fn smith_normal_form(source: &Matrix) -> Result<SnfResult, SnfError> {
    let nr = source.len();
    let nc = source.first().map_or(0, |r| r.len());
    if source.iter().any(|r| r.len() != nc) {
        return Err(SnfError::RaggedMatrix);
    }

    let mut w = Reduction {
        d: source.clone(),
        u: identity(nr),
        u_inv: identity(nr),
        v: identity(nc),
        v_inv: identity(nc),
        nr,
        nc,
    };

    for k in 0..nr.min(nc) {
        'stage: loop {
            let Some((pi, pj)) = w.pivot(k) else {
                break 'stage; // trailing block is zero, done
            };
            w.swap_rows(k, pi);
            w.swap_cols(k, pj);
            if w.d[k][k] < 0 {
                w.negate_row(k);
            }
            let pivot = w.d[k][k];

            let mut dirty = false;
            for r in k + 1..nr {
                let t = w.d[r][k].div_euclid(pivot);
                w.add_row_multiple(r, k, t)?;
                dirty |= w.d[r][k] != 0;
            }
            for c in k + 1..nc {
                let t = w.d[k][c].div_euclid(pivot);
                w.add_col_multiple(c, k, t)?;
                dirty |= w.d[k][c] != 0;
            }
            if dirty {
                continue 'stage; // remainders became new, smaller pivot candidates
            }

            // Row and column are clean; force the pivot to divide the rest.
            let mut fixed = true;
            'scan: for r in k + 1..nr {
                for c in k + 1..nc {
                    if w.d[r][c] % pivot != 0 {
                        w.add_row_multiple(k, r, -1)?;
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                break 'stage;
            }
        }
    }

    Ok(SnfResult {
        d: w.d,
        u: w.u,
        v: w.v,
        u_inv: w.u_inv,
        v_inv: w.v_inv,
        source: source.clone(),
    })
}

/// `a * b` with overflow checking.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix, SnfError> {
    let nr = a.len();
    let inner = a.first().map_or(0, |r| r.len());
    let nc = b.first().map_or(0, |r| r.len());
    assert!(b.len() == inner, "dimension mismatch");
    let mut out = vec![vec![0i128; nc]; nr];
    for i in 0..nr {
        for k in 0..inner {
            let aik = a[i][k];
            if aik == 0 {
                continue;
            }
            for j in 0..nc {
                out[i][j] = add_mul(out[i][j], aik, b[k][j])?;
            }
        }
    }
    Ok(out)
}
