use std::ops::Range;

use super::sparse::{sketch_cre, Sketched, SparseStats};
use super::sum::product_cre;
use super::{in_left, BruhatTriple, Pivot};
use crate::dense::{cre, gemm_sub, Cre, DenseMatrix};
use crate::error::{Error, Result};
use crate::ffield::{FieldElement, PrimeField, SeededRng};

/// Access to a left-triangular `m x m` operand, as needed by the recursive
/// construction.
pub trait LeftTriangularOracle {
    fn dim(&self) -> usize;

    fn field(&self) -> PrimeField;

    /// CRE of `operand[rows, cols] - g·hᵀ`, where `g` has one row per row of
    /// the block and `h` one row per column.
    fn bbcre(&mut self, rows: Range<usize>, cols: Range<usize>, g: &DenseMatrix, h: &DenseMatrix)
        -> Result<Cre>;

    /// `operand[rows, cols]` for an arbitrary row set.
    fn expand_rows(&self, rows: &[usize], cols: Range<usize>) -> DenseMatrix;

    /// `operand[rows, cols]` for an arbitrary column set.
    fn expand_cols(&self, rows: Range<usize>, cols: &[usize]) -> DenseMatrix;
}

fn minus_outer(block: &mut DenseMatrix, g: &DenseMatrix, h: &DenseMatrix) -> Result<()> {
    if g.cols() > 0 {
        gemm_sub(block, g, &h.transpose())?;
    }
    Ok(())
}

/// Operand held as a dense (already left-masked) matrix.
pub struct DenseOracle {
    operand: DenseMatrix,
}

impl DenseOracle {
    pub fn new(operand: DenseMatrix) -> Self {
        DenseOracle { operand: super::left_part(&operand) }
    }
}

impl LeftTriangularOracle for DenseOracle {
    fn dim(&self) -> usize {
        self.operand.rows()
    }

    fn field(&self) -> PrimeField {
        self.operand.field()
    }

    fn bbcre(&mut self, rows: Range<usize>, cols: Range<usize>, g: &DenseMatrix, h: &DenseMatrix) -> Result<Cre> {
        let mut block = self.operand.submatrix(rows, cols);
        minus_outer(&mut block, g, h)?;
        Ok(cre(&block))
    }

    fn expand_rows(&self, rows: &[usize], cols: Range<usize>) -> DenseMatrix {
        let op = &self.operand;
        DenseMatrix::from_fn(rows.len(), cols.len(), op.field(), |i, j| op.get(rows[i], cols.start + j))
    }

    fn expand_cols(&self, rows: Range<usize>, cols: &[usize]) -> DenseMatrix {
        let op = &self.operand;
        DenseMatrix::from_fn(rows.len(), cols.len(), op.field(), |i, j| op.get(rows.start + i, cols[j]))
    }
}

/// Operand held as coordinate entries, answered with sketched eliminations.
pub struct SparseOracle {
    dim: usize,
    field: PrimeField,
    /// Per row: (column, value) sorted by column.
    by_row: Vec<Vec<(usize, FieldElement)>>,
    /// Per column: (row, value) sorted by row.
    by_col: Vec<Vec<(usize, FieldElement)>>,
    retries: usize,
    rng: SeededRng,
    /// Largest rank seen so far; seeds the sketch width.
    hint: usize,
    stats: SparseStats,
}

impl SparseOracle {
    /// Entries `(row, col, value)` are 0-based operand coordinates; entries
    /// outside the left triangle are ignored.
    pub fn new(
        dim: usize,
        field: PrimeField,
        entries: Vec<(usize, usize, FieldElement)>,
        retries: usize,
        rng: SeededRng,
    ) -> Self {
        let mut by_row = vec![Vec::new(); dim];
        let mut by_col = vec![Vec::new(); dim];
        for (i, j, v) in entries {
            if in_left(i, j, dim) && !v.is_zero() {
                by_row[i].push((j, v));
                by_col[j].push((i, v));
            }
        }
        by_row.iter_mut().for_each(|r| r.sort_unstable_by_key(|e| e.0));
        by_col.iter_mut().for_each(|c| c.sort_unstable_by_key(|e| e.0));
        SparseOracle { dim, field, by_row, by_col, retries, rng, hint: 4, stats: SparseStats::default() }
    }

    pub fn stats(&self) -> SparseStats {
        self.stats
    }

    fn row_slice(&self, i: usize, cols: &Range<usize>) -> &[(usize, FieldElement)] {
        let row = &self.by_row[i];
        let a = row.partition_point(|e| e.0 < cols.start);
        let b = row.partition_point(|e| e.0 < cols.end);
        &row[a..b]
    }

    /// Entries of the block, in block coordinates, sorted by (row, col).
    fn block_entries(&self, rows: &Range<usize>, cols: &Range<usize>) -> Vec<(usize, usize, FieldElement)> {
        let mut out = Vec::new();
        for i in rows.clone() {
            for &(j, v) in self.row_slice(i, cols) {
                out.push((i - rows.start, j - cols.start, v));
            }
        }
        out
    }
}

impl LeftTriangularOracle for SparseOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn field(&self) -> PrimeField {
        self.field
    }

    fn bbcre(&mut self, rows: Range<usize>, cols: Range<usize>, g: &DenseMatrix, h: &DenseMatrix) -> Result<Cre> {
        let entries = self.block_entries(&rows, &cols);
        let (m, w) = (rows.len(), cols.len());
        for _ in 0..=self.retries {
            let mut width = self.hint + 2;
            loop {
                if width >= m.min(w) {
                    let mut block = DenseMatrix::zeros(m, w, self.field);
                    for &(i, j, v) in &entries {
                        block.set(i, j, v);
                    }
                    minus_outer(&mut block, g, h)?;
                    self.stats.dense_blocks += 1;
                    return Ok(cre(&block));
                }
                match sketch_cre(m, w, &entries, g, h, width, &mut self.rng) {
                    Ok(Sketched::Saturated) => {
                        self.stats.widenings += 1;
                        width *= 2;
                    }
                    Ok(Sketched::Done(f)) => {
                        self.hint = self.hint.max(f.rank());
                        self.stats.sketched_blocks += 1;
                        return Ok(f);
                    }
                    Err(Error::ProfileMismatch) => {
                        self.stats.failures += 1;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Err(Error::MonteCarloFailure(self.retries + 1))
    }

    fn expand_rows(&self, rows: &[usize], cols: Range<usize>) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), cols.len(), self.field);
        for (oi, &i) in rows.iter().enumerate() {
            for &(j, v) in self.row_slice(i, &cols) {
                out.set(oi, j - cols.start, v);
            }
        }
        out
    }

    fn expand_cols(&self, rows: Range<usize>, cols: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), cols.len(), self.field);
        for (oj, &j) in cols.iter().enumerate() {
            let col = &self.by_col[j];
            let a = col.partition_point(|e| e.0 < rows.start);
            let b = col.partition_point(|e| e.0 < rows.end);
            for &(i, v) in &col[a..b] {
                out.set(i - rows.start, oj, v);
            }
        }
        out
    }
}

/// Operand `Left(A + B)` for two triples on the same size.
pub struct SumOracle {
    dim: usize,
    field: PrimeField,
    pivots: Vec<Pivot>,
}

impl SumOracle {
    pub fn new(a: &BruhatTriple, b: &BruhatTriple) -> Self {
        assert_eq!(a.dim(), b.dim(), "triples of different sizes");
        let pivots = a.pivots().iter().chain(b.pivots()).cloned().collect();
        SumOracle { dim: a.dim(), field: a.field(), pivots }
    }

    fn touching<'a>(&'a self, rows: &'a Range<usize>, cols: &'a Range<usize>) -> impl Iterator<Item = &'a Pivot> {
        self.pivots.iter().filter(move |p| {
            p.row < rows.end && p.c_end() >= rows.start && p.col < cols.end && p.e_end() >= cols.start
        })
    }

    /// Value of a window at a global index, zero outside it.
    fn at(window: &[FieldElement], start: usize, idx: usize) -> FieldElement {
        idx.checked_sub(start).and_then(|d| window.get(d)).copied().unwrap_or(FieldElement::ZERO)
    }
}

impl LeftTriangularOracle for SumOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn field(&self) -> PrimeField {
        self.field
    }

    fn bbcre(&mut self, rows: Range<usize>, cols: Range<usize>, g: &DenseMatrix, h: &DenseMatrix) -> Result<Cre> {
        let relevant: Vec<&Pivot> = self.touching(&rows, &cols).collect();
        let q = relevant.len();
        let t = g.cols();
        // [C-columns, G] · [E-rows; -Hᵀ]
        let mut left = DenseMatrix::zeros(rows.len(), q + t, self.field);
        let mut right = DenseMatrix::zeros(q + t, cols.len(), self.field);
        for (k, p) in relevant.iter().enumerate() {
            for (oi, i) in rows.clone().enumerate() {
                left.set(oi, k, Self::at(&p.c, p.row, i));
            }
            for (oj, j) in cols.clone().enumerate() {
                right.set(k, oj, Self::at(&p.e, p.col, j));
            }
        }
        left.set_block(0, q, g);
        right.set_block(q, 0, &h.transpose().neg());
        product_cre(&left, &right)
    }

    fn expand_rows(&self, rows: &[usize], cols: Range<usize>) -> DenseMatrix {
        let f = self.field;
        let mut out = DenseMatrix::zeros(rows.len(), cols.len(), f);
        for (oi, &i) in rows.iter().enumerate() {
            for p in self.touching(&(i..i + 1), &cols) {
                let cv = Self::at(&p.c, p.row, i);
                for (oj, j) in cols.clone().enumerate() {
                    if in_left(i, j, self.dim) {
                        let v = f.mul(cv, Self::at(&p.e, p.col, j));
                        out.set(oi, oj, f.add(out.get(oi, oj), v));
                    }
                }
            }
        }
        out
    }

    fn expand_cols(&self, rows: Range<usize>, cols: &[usize]) -> DenseMatrix {
        let f = self.field;
        let mut out = DenseMatrix::zeros(rows.len(), cols.len(), f);
        for (oj, &j) in cols.iter().enumerate() {
            for p in self.touching(&rows, &(j..j + 1)) {
                let ev = Self::at(&p.e, p.col, j);
                for (oi, i) in rows.clone().enumerate() {
                    if in_left(i, j, self.dim) {
                        let v = f.mul(Self::at(&p.c, p.row, i), ev);
                        out.set(oi, oj, f.add(out.get(oi, oj), v));
                    }
                }
            }
        }
        out
    }
}
