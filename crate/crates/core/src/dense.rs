//! Dense exact kernels: multiply-accumulate, triangular solves and the
//! rank-profile-revealing CRE decomposition.

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::ffield::{FieldElement, PrimeField, SeededRng};

/// Row-major `rows x cols` matrix of canonical residues.
#[derive(Clone, PartialEq, Eq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    field: PrimeField,
    data: Vec<FieldElement>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} mod {}", self.rows, self.cols, self.field.modulus())?;
        for i in 0..self.rows.min(12) {
            let row: Vec<u32> = self.row(i).iter().take(12).map(|v| v.value()).collect();
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize, field: PrimeField) -> Self {
        DenseMatrix { rows, cols, field, data: vec![FieldElement::ZERO; rows * cols] }
    }

    pub fn identity(n: usize, field: PrimeField) -> Self {
        let mut m = Self::zeros(n, n, field);
        for i in 0..n {
            m.data[i * n + i] = FieldElement::ONE;
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        field: PrimeField,
        mut f: impl FnMut(usize, usize) -> FieldElement,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, field, data }
    }

    /// Build from integer rows, reducing every entry.
    pub fn from_rows<R: AsRef<[i64]>>(field: PrimeField, rows: &[R]) -> Self {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        let mut out = Self::zeros(m, n, field);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), n, "ragged rows");
            for (j, &v) in r.iter().enumerate() {
                out.data[i * n + j] = field.elem_i64(v);
            }
        }
        out
    }

    pub fn from_vec(rows: usize, cols: usize, field: PrimeField, data: Vec<FieldElement>) -> Self {
        assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, field, data }
    }

    pub fn random(rows: usize, cols: usize, field: PrimeField, rng: &mut SeededRng) -> Self {
        let data = rng.uniform(&field, rows * cols);
        DenseMatrix { rows, cols, field, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of stored field elements.
    pub fn storage(&self) -> usize {
        self.rows * self.cols
    }

    pub fn data(&self) -> &[FieldElement] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [FieldElement] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> DenseMatrix {
        let mut out = Self::zeros(rows.len(), cols.len(), self.field);
        for (oi, i) in rows.enumerate() {
            out.row_mut(oi).copy_from_slice(&self.row(i)[cols.clone()]);
        }
        out
    }

    /// Write `block` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &DenseMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            self.row_mut(r0 + i)[c0..c0 + block.cols].copy_from_slice(block.row(i));
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut out = Self::zeros(idx.len(), self.cols, self.field);
        for (oi, &i) in idx.iter().enumerate() {
            out.row_mut(oi).copy_from_slice(self.row(i));
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> DenseMatrix {
        let mut out = Self::zeros(self.rows, idx.len(), self.field);
        for i in 0..self.rows {
            let src = self.row(i);
            for (oj, &j) in idx.iter().enumerate() {
                out.data[i * idx.len() + oj] = src[j];
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.cols, self.rows, self.field);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn hstack(parts: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let first = parts.first().ok_or_else(|| Error::Shape("empty hstack".into()))?;
        let rows = first.rows;
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::Shape("hstack row counts differ".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols, first.field);
        let mut c0 = 0;
        for p in parts {
            out.set_block(0, c0, p);
            c0 += p.cols;
        }
        Ok(out)
    }

    pub fn vstack(parts: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let first = parts.first().ok_or_else(|| Error::Shape("empty vstack".into()))?;
        let cols = first.cols;
        if parts.iter().any(|p| p.cols != cols) {
            return Err(Error::Shape("vstack column counts differ".into()));
        }
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.data.len()).sum());
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        Ok(DenseMatrix { rows, cols, field: first.field, data })
    }

    /// Block-diagonal matrix with the given blocks.
    pub fn block_diag(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = Self::zeros(a.rows + b.rows, a.cols + b.cols, a.field);
        out.set_block(0, 0, a);
        out.set_block(a.rows, a.cols, b);
        out
    }

    fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.field != other.field {
            return Err(Error::Shape("matrices over different fields".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other)?;
        let k = self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| k.add(a, b)).collect();
        Ok(DenseMatrix { data, ..self.like() })
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other)?;
        let k = self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| k.sub(a, b)).collect();
        Ok(DenseMatrix { data, ..self.like() })
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) -> Result<()> {
        self.check_same_shape(other)?;
        let k = self.field;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = k.add(*a, b);
        }
        Ok(())
    }

    pub fn neg(&self) -> DenseMatrix {
        let k = self.field;
        DenseMatrix { data: self.data.iter().map(|&a| k.neg(a)).collect(), ..self.like() }
    }

    pub fn scale(&self, s: FieldElement) -> DenseMatrix {
        let k = self.field;
        DenseMatrix { data: self.data.iter().map(|&a| k.mul(a, s)).collect(), ..self.like() }
    }

    fn like(&self) -> DenseMatrix {
        DenseMatrix { rows: self.rows, cols: self.cols, field: self.field, data: Vec::new() }
    }

    /// `self * other`
    pub fn mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        let c = DenseMatrix::zeros(self.rows, other.cols, self.field);
        matmul_acc(c, self, other)
    }
}


const TILE_COLS: usize = 256;

/// `c += sign * a * b` in place, with delayed reduction.
fn gemm_into(c: &mut DenseMatrix, a: &DenseMatrix, b: &DenseMatrix, subtract: bool) -> Result<()> {
    if a.cols != b.rows || c.rows != a.rows || c.cols != b.cols {
        return Err(Error::Shape(format!(
            "({}x{}) += ({}x{})*({}x{})",
            c.rows, c.cols, a.rows, a.cols, b.rows, b.cols
        )));
    }
    if a.field != b.field || a.field != c.field {
        return Err(Error::Shape("matrices over different fields".into()));
    }
    let field = c.field;
    let p = field.modulus() as u64;
    let budget = field.acc_budget();
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 || k == 0 {
        return Ok(());
    }
    let mut acc = vec![0u64; TILE_COLS.min(n)];
    for jb in (0..n).step_by(TILE_COLS) {
        let je = (jb + TILE_COLS).min(n);
        let acc = &mut acc[..je - jb];
        for i in 0..m {
            for (dst, src) in acc.iter_mut().zip(&c.row(i)[jb..je]) {
                *dst = src.0 as u64;
            }
            let mut pending = 0u32;
            let arow = a.row(i);
            for (kk, &aik) in arow.iter().enumerate() {
                if aik.0 == 0 {
                    continue;
                }
                let coef = if subtract { p - aik.0 as u64 } else { aik.0 as u64 };
                let brow = &b.data[kk * n + jb..kk * n + je];
                for (dst, &bv) in acc.iter_mut().zip(brow) {
                    *dst += coef * bv.0 as u64;
                }
                pending += 1;
                if pending == budget {
                    for dst in acc.iter_mut() {
                        *dst %= p;
                    }
                    pending = 0;
                }
            }
            for (dst, src) in c.row_mut(i)[jb..je].iter_mut().zip(acc.iter()) {
                *dst = FieldElement((src % p) as u32);
            }
        }
    }
    Ok(())
}

/// Returns `c + a * b`.
pub fn matmul_acc(mut c: DenseMatrix, a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    gemm_into(&mut c, a, b, false)?;
    Ok(c)
}

/// `c += a * b` in place.
pub fn gemm_add(c: &mut DenseMatrix, a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    gemm_into(c, a, b, false)
}

/// `c -= a * b` in place.
pub fn gemm_sub(c: &mut DenseMatrix, a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    gemm_into(c, a, b, true)
}

/// `a * bᵀ` without materializing the transpose; `a` is `m x t`, `b` is `n x t`.
pub fn mul_transpose(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.cols {
        return Err(Error::Shape(format!("{}x{} * ({}x{})ᵀ", a.rows, a.cols, b.rows, b.cols)));
    }
    matmul_acc(DenseMatrix::zeros(a.rows, b.rows, a.field), a, &b.transpose())
}

/// Sorted row or column indices of the lexicographically earliest independent
/// rows (columns). Indices are 0-based; [`RankProfile::one_based`] gives the
/// conventional numbering.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RankProfile(pub Vec<usize>);

impl RankProfile {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    /// Indices in `0..n` not in the profile.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n - self.0.len());
        let mut it = self.0.iter().peekable();
        for i in 0..n {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        out
    }
}

/// `A = C·R·E` with `C` in column echelon form carrying unit pivots, `R` a
/// permutation and `E` in row echelon form.
///
/// Column `k` of `C` is paired with row `perm[k]` of `E`; the pivot pairs
/// `(pivot_rows[k], pivot_cols[perm[k]])` are the nonzero positions of the
/// rank profile matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cre {
    pub c: DenseMatrix,
    pub perm: Vec<usize>,
    pub e: DenseMatrix,
    /// Pivot row of each column of `c`, strictly increasing.
    pub pivot_rows: Vec<usize>,
    /// Pivot column of each row of `e`, strictly increasing.
    pub pivot_cols: Vec<usize>,
}

impl Cre {
    pub fn rank(&self) -> usize {
        self.perm.len()
    }

    pub fn empty(rows: usize, cols: usize, field: PrimeField) -> Self {
        Cre {
            c: DenseMatrix::zeros(rows, 0, field),
            perm: Vec::new(),
            e: DenseMatrix::zeros(0, cols, field),
            pivot_rows: Vec::new(),
            pivot_cols: Vec::new(),
        }
    }

    /// The permutation as an explicit `r x r` matrix.
    pub fn r_matrix(&self) -> DenseMatrix {
        let r = self.rank();
        let mut m = DenseMatrix::zeros(r, r, self.c.field());
        for (k, &l) in self.perm.iter().enumerate() {
            m.set(k, l, FieldElement::ONE);
        }
        m
    }

    /// `R·E`, the right factor paired column-by-column with `C`.
    pub fn right_factor(&self) -> DenseMatrix {
        self.e.select_rows(&self.perm)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.c.mul(&self.right_factor()).expect("conformal CRE factors")
    }

    pub fn row_profile(&self) -> RankProfile {
        RankProfile(self.pivot_rows.clone())
    }

    pub fn col_profile(&self) -> RankProfile {
        RankProfile(self.pivot_cols.clone())
    }
}

/// Rank-profile-revealing elimination.
///
/// At every step the pivot is the remaining nonzero entry with smallest
/// (row, column), so each row yields at most one pivot and rows are visited
/// once, top to bottom.
pub fn cre(a: &DenseMatrix) -> Cre {
    let (m, n) = a.shape();
    let field = a.field;
    let p = field.modulus() as u64;
    let mut work = a.data.clone();
    let mut pivot_rows = Vec::new();
    let mut pivot_cols_in_order = Vec::new();
    // Column k of C, stored from its pivot row downwards.
    let mut c_cols: Vec<Vec<FieldElement>> = Vec::new();
    let mut e_rows: Vec<Vec<FieldElement>> = Vec::new();
    for i in 0..m {
        let row = &work[i * n..(i + 1) * n];
        let Some(j) = row.iter().position(|v| v.0 != 0) else { continue };
        let e_row: Vec<FieldElement> = row.to_vec();
        let inv = field.inv(e_row[j]).expect("nonzero pivot");
        let mut c_col = vec![FieldElement::ZERO; m - i];
        c_col[0] = FieldElement::ONE;
        for x in i + 1..m {
            let f = work[x * n + j];
            if f.0 == 0 {
                continue;
            }
            let cx = field.mul(f, inv);
            c_col[x - i] = cx;
            let neg = p - cx.0 as u64;
            let target = &mut work[x * n + j..(x + 1) * n];
            for (t, &ev) in target.iter_mut().zip(&e_row[j..]) {
                t.0 = ((t.0 as u64 + neg * ev.0 as u64) % p) as u32;
            }
            debug_assert_eq!(work[x * n + j].0, 0);
        }
        pivot_rows.push(i);
        pivot_cols_in_order.push(j);
        c_cols.push(c_col);
        e_rows.push(e_row);
    }
    let r = pivot_rows.len();
    let mut c = DenseMatrix::zeros(m, r, field);
    for (k, col) in c_cols.iter().enumerate() {
        let i0 = pivot_rows[k];
        for (d, &v) in col.iter().enumerate() {
            c.data[(i0 + d) * r + k] = v;
        }
    }
    // Sort E rows by pivot column; pivots are in distinct columns.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by_key(|&k| pivot_cols_in_order[k]);
    let mut perm = vec![0; r];
    let mut e = DenseMatrix::zeros(r, n, field);
    let mut pivot_cols = Vec::with_capacity(r);
    for (l, &k) in order.iter().enumerate() {
        perm[k] = l;
        e.row_mut(l).copy_from_slice(&e_rows[k]);
        pivot_cols.push(pivot_cols_in_order[k]);
    }
    debug_assert!(pivot_cols.windows(2).all(|w| w[0] < w[1]));
    Cre { c, perm, e, pivot_rows, pivot_cols }
}

pub fn rank(a: &DenseMatrix) -> usize {
    cre(a).rank()
}

/// Row and column rank profiles.
pub fn rank_profiles(a: &DenseMatrix) -> (RankProfile, RankProfile) {
    let d = cre(a);
    (RankProfile(d.pivot_rows), RankProfile(d.pivot_cols))
}

/// Solve `L·X = B` for `L` lower triangular.
pub fn trsm_lower(l: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let r = l.rows;
    if !l.is_square() || b.rows != r {
        return Err(Error::Shape(format!("trsm_lower {}x{} \\ {}x{}", l.rows, l.cols, b.rows, b.cols)));
    }
    let field = l.field;
    let n = b.cols;
    let mut x = b.clone();
    for i in 0..r {
        let d = l.get(i, i);
        if d.is_zero() {
            return Err(Error::Singular(i));
        }
        let (done, rest) = x.data.split_at_mut(i * n);
        let xi = &mut rest[..n];
        for k in 0..i {
            let lik = l.get(i, k);
            if lik.is_zero() {
                continue;
            }
            let xk = &done[k * n..(k + 1) * n];
            for (t, &v) in xi.iter_mut().zip(xk) {
                *t = field.mul_sub(*t, lik, v);
            }
        }
        if d != FieldElement::ONE {
            let inv = field.inv(d)?;
            for t in xi.iter_mut() {
                *t = field.mul(*t, inv);
            }
        }
    }
    Ok(x)
}

/// Solve `X·U = B` for `U` upper triangular.
pub fn trsm_right_upper(b: &DenseMatrix, u: &DenseMatrix) -> Result<DenseMatrix> {
    let r = u.rows;
    if !u.is_square() || b.cols != r {
        return Err(Error::Shape(format!(
            "trsm_right_upper {}x{} / {}x{}",
            b.rows, b.cols, u.rows, u.cols
        )));
    }
    // X·U = B  <=>  Uᵀ·Xᵀ = Bᵀ with Uᵀ lower triangular.
    Ok(trsm_lower(&u.transpose(), &b.transpose())?.transpose())
}

/// Column echelon: every nonzero column has its topmost nonzero strictly
/// below the previous column's, and no zero column precedes a nonzero one.
pub fn is_column_echelon(c: &DenseMatrix) -> bool {
    is_row_echelon(&c.transpose())
}

/// Row echelon: leading nonzeros strictly move right going down.
pub fn is_row_echelon(e: &DenseMatrix) -> bool {
    let mut last: Option<usize> = None;
    let mut seen_zero = false;
    for i in 0..e.rows {
        match e.row(i).iter().position(|v| !v.is_zero()) {
            None => seen_zero = true,
            Some(j) => {
                if seen_zero || last.is_some_and(|l| j <= l) {
                    return false;
                }
                last = Some(j);
            }
        }
    }
    true
}
