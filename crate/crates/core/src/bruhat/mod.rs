//! Bruhat generators.
//!
//! A matrix is stored as its diagonal plus two left-triangular operands, one
//! per triangle: the strictly lower part read with its rows reversed and the
//! strictly upper part read with its columns reversed. Each operand is kept
//! as the pivots of its rank profile matrix, every pivot carrying the
//! nonzero window of its column of `C` and of its row of `E`.
//!
//! All indices here are 0-based; the left triangle of an `m x m` operand is
//! `i + j <= m - 2`.

mod lbruhat;
mod oracle;
mod sparse;
mod sum;

pub use lbruhat::lbruhat_gen;
pub use oracle::{DenseOracle, LeftTriangularOracle, SparseOracle, SumOracle};
pub use sparse::{sparse_cre, sparse_rank_profiles, SparseStats, ToeplitzSketch};
pub use sum::bruhat_sum_cre;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::ffield::{FieldElement, PrimeField, SeededRng};
use crate::qsgen::SparseMatrix;

/// Recursion stops at regions of this size unless configured otherwise.
pub const DEFAULT_BASE: usize = 32;

#[inline]
pub(crate) fn in_left(i: usize, j: usize, m: usize) -> bool {
    i + j + 2 <= m
}

/// Keep the entries with `i + j <= n - 2`, zero the rest.
pub fn left_part(a: &DenseMatrix) -> DenseMatrix {
    let m = a.rows();
    DenseMatrix::from_fn(a.rows(), a.cols(), a.field(), |i, j| {
        if in_left(i, j, m) { a.get(i, j) } else { FieldElement::ZERO }
    })
}

/// One nonzero of the rank profile matrix with its factor windows: `c` holds
/// column entries from `row` downwards, `e` row entries from `col` rightwards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pivot {
    pub row: usize,
    pub col: usize,
    pub c: Vec<FieldElement>,
    pub e: Vec<FieldElement>,
}

impl Pivot {
    /// Last row touched by the column window.
    pub fn c_end(&self) -> usize {
        self.row + self.c.len() - 1
    }

    pub fn e_end(&self) -> usize {
        self.col + self.e.len() - 1
    }

    /// Cut both windows at the left triangle and drop trailing zeros.
    pub(crate) fn clip(mut self, m: usize) -> Self {
        self.c.truncate(m - 1 - self.col - self.row);
        self.e.truncate(m - 1 - self.row - self.col);
        while self.c.len() > 1 && self.c.last().is_some_and(|v| v.is_zero()) {
            self.c.pop();
        }
        while self.e.len() > 1 && self.e.last().is_some_and(|v| v.is_zero()) {
            self.e.pop();
        }
        self
    }
}

/// A left-triangular operand `Left(C·R·E)` stored pivot by pivot, sorted by
/// pivot row (the column order of `C`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruhatTriple {
    dim: usize,
    field: PrimeField,
    pivots: Vec<Pivot>,
}

impl BruhatTriple {
    pub fn empty(dim: usize, field: PrimeField) -> Self {
        BruhatTriple { dim, field, pivots: Vec::new() }
    }

    pub(crate) fn from_pivots(dim: usize, field: PrimeField, mut pivots: Vec<Pivot>) -> Self {
        pivots.sort_by_key(|p| p.row);
        debug_assert!(pivots.windows(2).all(|w| w[0].row < w[1].row));
        BruhatTriple { dim, field, pivots }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[Pivot] {
        &self.pivots
    }

    /// Stored window elements of both factors.
    pub fn storage(&self) -> usize {
        self.pivots.iter().map(|p| p.c.len() + p.e.len()).sum()
    }

    /// `C` as a dense `m x u` column-echelon matrix.
    pub fn c_matrix(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.dim, self.rank(), self.field);
        for (k, p) in self.pivots.iter().enumerate() {
            for (d, &v) in p.c.iter().enumerate() {
                out.set(p.row + d, k, v);
            }
        }
        out
    }

    /// Order of the pivots by column: `order[l]` is the pivot owning row `l` of `E`.
    fn col_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.rank()).collect();
        order.sort_by_key(|&k| self.pivots[k].col);
        order
    }

    /// `R` as an index vector: column `k` of `C` meets row `perm[k]` of `E`.
    pub fn perm(&self) -> Vec<usize> {
        let mut perm = vec![0; self.rank()];
        for (l, k) in self.col_order().into_iter().enumerate() {
            perm[k] = l;
        }
        perm
    }

    /// `E` as a dense `u x m` row-echelon matrix.
    pub fn e_matrix(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rank(), self.dim, self.field);
        for (l, k) in self.col_order().into_iter().enumerate() {
            let p = &self.pivots[k];
            for (d, &v) in p.e.iter().enumerate() {
                out.set(l, p.col + d, v);
            }
        }
        out
    }

    /// Rebuild from dense factors; windows run from each pivot to the last
    /// nonzero of its column (row).
    pub fn from_factors(c: &DenseMatrix, perm: &[usize], e: &DenseMatrix) -> Result<Self> {
        let dim = c.rows();
        let u = c.cols();
        if e.shape() != (u, dim) || perm.len() != u {
            return Err(Error::Shape(format!(
                "factors {}x{}, {} indices, {}x{}",
                c.rows(), c.cols(), perm.len(), e.rows(), e.cols()
            )));
        }
        let mut seen = vec![false; u];
        for &l in perm {
            if l >= u || std::mem::replace(&mut seen[l], true) {
                return Err(Error::Parse("R is not a permutation".into()));
            }
        }
        if !crate::dense::is_column_echelon(c) || !crate::dense::is_row_echelon(e) {
            return Err(Error::Parse("factors are not in echelon form".into()));
        }
        let window = |vals: Vec<FieldElement>| -> Option<(usize, Vec<FieldElement>)> {
            let first = vals.iter().position(|v| !v.is_zero())?;
            let last = vals.iter().rposition(|v| !v.is_zero())?;
            Some((first, vals[first..=last].to_vec()))
        };
        let mut pivots = Vec::with_capacity(u);
        for (k, &l) in perm.iter().enumerate() {
            let (row, cw) = window(c.column(k)).ok_or_else(|| Error::Parse("zero column in C".into()))?;
            let (col, ew) = window(e.row(l).to_vec()).ok_or_else(|| Error::Parse("zero row in E".into()))?;
            if !in_left(row, col, dim) {
                return Err(Error::Parse(format!("pivot ({row}, {col}) outside the left triangle")));
            }
            pivots.push(Pivot { row, col, c: cw, e: ew }.clip(dim));
        }
        Ok(BruhatTriple::from_pivots(dim, c.field(), pivots))
    }

    /// Largest number of `C` windows (and of `E` windows) sharing one index.
    pub fn overlap(&self) -> (usize, usize) {
        let cover = |spans: Vec<(usize, usize)>| -> usize {
            let mut events: Vec<(usize, i64)> = Vec::with_capacity(2 * spans.len());
            for (a, b) in spans {
                events.push((a, 1));
                events.push((b + 1, -1));
            }
            events.sort_unstable();
            let (mut cur, mut best) = (0i64, 0i64);
            for (_, d) in events {
                cur += d;
                best = best.max(cur);
            }
            best as usize
        };
        let c_spans = self.pivots.iter().map(|p| (p.row, p.c_end())).collect();
        let e_spans = self.pivots.iter().map(|p| (p.col, p.e_end())).collect();
        (cover(c_spans), cover(e_spans))
    }

    /// Any `t + 1` columns of `C` (rows of `E`) contain two disjoint windows.
    pub fn is_t_overlapping(&self, t: usize) -> bool {
        let (c, e) = self.overlap();
        c <= t && e <= t
    }

    /// `Left(C·R·E)` as a dense matrix.
    pub fn expand(&self) -> DenseMatrix {
        let f = self.field;
        let m = self.dim;
        let mut out = DenseMatrix::zeros(m, m, f);
        for p in &self.pivots {
            for (d, &cv) in p.c.iter().enumerate() {
                let i = p.row + d;
                for (q, &ev) in p.e.iter().enumerate() {
                    let j = p.col + q;
                    if in_left(i, j, m) {
                        out.set(i, j, f.add(out.get(i, j), f.mul(cv, ev)));
                    }
                }
            }
        }
        out
    }

    /// `z = Left(C·R·E)·x` from prefix sums of each `E` window.
    pub(crate) fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        let f = self.field;
        let p = f.modulus() as u64;
        let m = self.dim;
        let v = x.cols();
        let mut z = vec![0u32; m * v];
        let mut prefix: Vec<u32> = Vec::new();
        for piv in &self.pivots {
            prefix.clear();
            prefix.resize(piv.e.len() * v, 0);
            let mut run = vec![0u64; v];
            for (q, &ev) in piv.e.iter().enumerate() {
                let xr = x.row(piv.col + q);
                let ev = ev.value() as u64;
                for (acc, xv) in run.iter_mut().zip(xr) {
                    *acc = (*acc + ev * xv.value() as u64) % p;
                }
                for (dst, &acc) in prefix[q * v..(q + 1) * v].iter_mut().zip(&run) {
                    *dst = acc as u32;
                }
            }
            for (d, &cv) in piv.c.iter().enumerate() {
                let i = piv.row + d;
                // Columns up to m - 2 - i stay inside the triangle.
                let last = (m - 2 - i - piv.col).min(piv.e.len() - 1);
                let cv = cv.value() as u64;
                let src = &prefix[last * v..(last + 1) * v];
                for (dst, &s) in z[i * v..(i + 1) * v].iter_mut().zip(src) {
                    *dst = ((*dst as u64 + cv * s as u64) % p) as u32;
                }
            }
        }
        DenseMatrix::from_vec(m, v, f, z.into_iter().map(|a| f.elem(a as u64)).collect())
    }
}

/// `A = D + J·Left(lower) + Left(upper)·J`, with `J` the row reversal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruhatGenerator {
    n: usize,
    field: PrimeField,
    pub diag: Vec<FieldElement>,
    pub lower: BruhatTriple,
    pub upper: BruhatTriple,
}

impl BruhatGenerator {
    pub fn new(diag: Vec<FieldElement>, lower: BruhatTriple, upper: BruhatTriple) -> Result<Self> {
        let n = diag.len();
        if lower.dim() != n || upper.dim() != n {
            return Err(Error::Shape(format!("triples of size {} and {} for n={n}", lower.dim(), upper.dim())));
        }
        if lower.field() != upper.field() {
            return Err(Error::Shape("triples over different fields".into()));
        }
        let field = lower.field();
        Ok(BruhatGenerator { n, field, diag, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Diagonal plus both triples' windows.
    pub fn storage(&self) -> usize {
        self.n + self.lower.storage() + self.upper.storage()
    }

    /// Largest window overlap over all four factors.
    pub fn overlap(&self) -> usize {
        let (a, b) = self.lower.overlap();
        let (c, d) = self.upper.overlap();
        a.max(b).max(c).max(d)
    }

    pub fn neg(&self) -> Self {
        let f = self.field;
        let flip = |t: &BruhatTriple| {
            let mut t = t.clone();
            for p in &mut t.pivots {
                p.c.iter_mut().for_each(|v| *v = f.neg(*v));
            }
            t
        };
        BruhatGenerator {
            n: self.n,
            field: f,
            diag: self.diag.iter().map(|&v| f.neg(v)).collect(),
            lower: flip(&self.lower),
            upper: flip(&self.upper),
        }
    }
}

/// Row-reversed strictly lower part, the lower operand.
pub(crate) fn lower_operand(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    DenseMatrix::from_fn(n, n, a.field(), |x, y| {
        if in_left(x, y, n) { a.get(n - 1 - x, y) } else { FieldElement::ZERO }
    })
}

/// Column-reversed strictly upper part, the upper operand.
pub(crate) fn upper_operand(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    DenseMatrix::from_fn(n, n, a.field(), |x, y| {
        if in_left(x, y, n) { a.get(x, n - 1 - y) } else { FieldElement::ZERO }
    })
}

pub fn bruhat_from_dense(a: &DenseMatrix) -> Result<BruhatGenerator> {
    bruhat_from_dense_with(a, DEFAULT_BASE)
}

/// As [`bruhat_from_dense`] with an explicit recursion cutoff.
pub fn bruhat_from_dense_with(a: &DenseMatrix, base: usize) -> Result<BruhatGenerator> {
    if !a.is_square() {
        return Err(Error::Shape(format!("{}x{} is not square", a.rows(), a.cols())));
    }
    let n = a.rows();
    let f = a.field();
    let empty = DenseMatrix::zeros(n, 0, f);
    let lower = lbruhat_gen(&mut DenseOracle::new(lower_operand(a)), &empty, &empty, base)?;
    let upper = lbruhat_gen(&mut DenseOracle::new(upper_operand(a)), &empty, &empty, base)?;
    BruhatGenerator::new((0..n).map(|i| a.get(i, i)).collect(), lower, upper)
}

pub fn bruhat_expand(g: &BruhatGenerator) -> DenseMatrix {
    let n = g.n;
    let lower = g.lower.expand();
    let upper = g.upper.expand();
    DenseMatrix::from_fn(n, n, g.field, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => g.diag[i],
        std::cmp::Ordering::Greater => lower.get(n - 1 - i, j),
        std::cmp::Ordering::Less => upper.get(i, n - 1 - j),
    })
}

/// `c + expand(g)·b` without forming the matrix.
pub fn bruhat_apply(g: &BruhatGenerator, b: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    let n = g.n;
    if b.rows() != n || c.shape() != (n, b.cols()) {
        return Err(Error::Shape(format!(
            "apply {n}x{n} generator to {}x{} with accumulator {}x{}",
            b.rows(), b.cols(), c.rows(), c.cols()
        )));
    }
    let f = g.field;
    let v = b.cols();
    let low = g.lower.apply(b);
    let reversed = DenseMatrix::from_fn(n, v, f, |i, j| b.get(n - 1 - i, j));
    let up = g.upper.apply(&reversed);
    Ok(DenseMatrix::from_fn(n, v, f, |i, j| {
        let mut acc = f.add(c.get(i, j), f.mul(g.diag[i], b.get(i, j)));
        acc = f.add(acc, low.get(n - 1 - i, j));
        f.add(acc, up.get(i, j))
    }))
}

/// Options for the randomized sparse construction.
#[derive(Clone, Copy, Debug)]
pub struct SparseOptions {
    pub base: usize,
    /// Extra sketch attempts after a detected failure.
    pub retries: usize,
}

impl Default for SparseOptions {
    fn default() -> Self {
        SparseOptions { base: DEFAULT_BASE, retries: 3 }
    }
}

pub fn bruhat_from_sparse(a: &SparseMatrix, rng: &mut SeededRng) -> Result<BruhatGenerator> {
    bruhat_from_sparse_with(a, SparseOptions::default(), rng).map(|(g, _)| g)
}

/// Sparse construction, also reporting how often a sketch had to be redrawn.
pub fn bruhat_from_sparse_with(
    a: &SparseMatrix,
    opts: SparseOptions,
    rng: &mut SeededRng,
) -> Result<(BruhatGenerator, SparseStats)> {
    if a.rows() != a.cols() {
        return Err(Error::Shape(format!("{}x{} is not square", a.rows(), a.cols())));
    }
    let n = a.rows();
    let f = a.field();
    let mut diag = vec![FieldElement::ZERO; n];
    let mut low = Vec::new();
    let mut up = Vec::new();
    for (i, j, v) in a.entries().iter().copied() {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => diag[i] = v,
            std::cmp::Ordering::Greater => low.push((n - 1 - i, j, v)),
            std::cmp::Ordering::Less => up.push((i, n - 1 - j, v)),
        }
    }
    let empty = DenseMatrix::zeros(n, 0, f);
    let mut lower_oracle = SparseOracle::new(n, f, low, opts.retries, rng.split(1));
    let lower = lbruhat_gen(&mut lower_oracle, &empty, &empty, opts.base)?;
    let mut upper_oracle = SparseOracle::new(n, f, up, opts.retries, rng.split(2));
    let upper = lbruhat_gen(&mut upper_oracle, &empty, &empty, opts.base)?;
    let stats = lower_oracle.stats().merge(upper_oracle.stats());
    Ok((BruhatGenerator::new(diag, lower, upper)?, stats))
}

/// Sum of two generators; the result fits the sum's own quasiseparable order.
pub fn bruhat_add(a: &BruhatGenerator, b: &BruhatGenerator) -> Result<BruhatGenerator> {
    if a.n != b.n || a.field != b.field {
        return Err(Error::Shape(format!("sum of generators of size {} and {}", a.n, b.n)));
    }
    let n = a.n;
    let f = a.field;
    let empty = DenseMatrix::zeros(n, 0, f);
    let lower = lbruhat_gen(&mut SumOracle::new(&a.lower, &b.lower), &empty, &empty, DEFAULT_BASE)?;
    let upper = lbruhat_gen(&mut SumOracle::new(&a.upper, &b.upper), &empty, &empty, DEFAULT_BASE)?;
    let diag = a.diag.iter().zip(&b.diag).map(|(&x, &y)| f.add(x, y)).collect();
    BruhatGenerator::new(diag, lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::matmul_acc;
    use crate::qsgen::{random_qs, random_qs_ranks, Density};

    fn k() -> PrimeField {
        PrimeField::default()
    }

    fn instance(n: usize, s: usize, seed: u64) -> DenseMatrix {
        random_qs(k(), n, s, Density::Dense, &mut SeededRng::new(seed)).unwrap().matrix.to_dense()
    }

    #[test]
    fn left_part_examples() {
        let f = k();
        let a = DenseMatrix::from_rows(f, &[[1i64, 2], [3, 4]]);
        assert_eq!(left_part(&a), DenseMatrix::from_rows(f, &[[1i64, 0], [0, 0]]));
        assert!(left_part(&DenseMatrix::from_rows(f, &[[5i64]])).is_zero());
        let r = DenseMatrix::random(9, 9, f, &mut SeededRng::new(1));
        assert_eq!(left_part(&left_part(&r)), left_part(&r));
        // Row reversal of the left part is strictly lower triangular.
        let lp = left_part(&r);
        for i in 0..9 {
            for j in i..9 {
                assert!(lp.get(8 - i, j).is_zero());
            }
        }
    }

    #[test]
    fn diagonal_only() {
        let f = k();
        let a = DenseMatrix::from_fn(6, 6, f, |i, j| if i == j { f.elem(i as u64 + 3) } else { FieldElement::ZERO });
        let g = bruhat_from_dense(&a).unwrap();
        assert_eq!((g.lower.rank(), g.upper.rank()), (0, 0));
        assert_eq!(bruhat_expand(&g), a);
    }

    #[test]
    fn roundtrip_storage_overlap() {
        for (n, s, base) in [(200, 8, 32), (128, 4, 8), (64, 3, 2), (33, 5, 4), (256, 8, 32)] {
            let a = instance(n, s, n as u64 + s as u64);
            let g = bruhat_from_dense_with(&a, base).unwrap();
            assert_eq!(bruhat_expand(&g), a, "n={n} s={s} base={base}");
            assert!(g.storage() <= 4 * n * s + n, "storage {} for n={n} s={s}", g.storage());
            assert!(g.lower.is_t_overlapping(s) && g.upper.is_t_overlapping(s));
        }
    }

    #[test]
    fn factors_roundtrip_through_dense_form() {
        let a = instance(40, 3, 5);
        let g = bruhat_from_dense(&a).unwrap();
        let t = &g.lower;
        let back = BruhatTriple::from_factors(&t.c_matrix(), &t.perm(), &t.e_matrix()).unwrap();
        assert_eq!(&back, t);
        assert!(crate::dense::is_column_echelon(&t.c_matrix()));
        assert!(crate::dense::is_row_echelon(&t.e_matrix()));
    }

    #[test]
    fn negation_flips_expansion() {
        let a = instance(30, 2, 6);
        let g = bruhat_from_dense(&a).unwrap();
        assert_eq!(bruhat_expand(&g.neg()), a.neg());
    }

    #[test]
    fn apply_matches_dense() {
        let f = k();
        let a = instance(200, 8, 7);
        let g = bruhat_from_dense(&a).unwrap();
        let mut rng = SeededRng::new(8);
        let b = DenseMatrix::random(200, 5, f, &mut rng);
        let c = DenseMatrix::random(200, 5, f, &mut rng);
        assert_eq!(bruhat_apply(&g, &b, &c).unwrap(), matmul_acc(c.clone(), &a, &b).unwrap());
        let e1 = DenseMatrix::identity(200, f).submatrix(0..200, 0..1);
        assert_eq!(bruhat_apply(&g, &e1, &DenseMatrix::zeros(200, 1, f)).unwrap(), a.submatrix(0..200, 0..1));
    }

    #[test]
    fn add_mixed_orders() {
        let f = k();
        let a = random_qs_ranks(f, 256, 4, 4, Density::Dense, &mut SeededRng::new(9)).unwrap().matrix.to_dense();
        let b = random_qs_ranks(f, 256, 6, 6, Density::Dense, &mut SeededRng::new(10)).unwrap().matrix.to_dense();
        let ga = bruhat_from_dense(&a).unwrap();
        let gb = bruhat_from_dense(&b).unwrap();
        let sum = bruhat_add(&ga, &gb).unwrap();
        assert_eq!(bruhat_expand(&sum), a.add(&b).unwrap());
        assert!(sum.overlap() <= 10);
        let zero = bruhat_add(&ga, &ga.neg()).unwrap();
        assert_eq!((zero.lower.rank(), zero.upper.rank()), (0, 0));
        assert!(bruhat_expand(&zero).is_zero());
    }

    #[test]
    fn sparse_matches_dense() {
        let f = k();
        let inst = random_qs(f, 256, 8, Density::Fraction(0.02), &mut SeededRng::new(11)).unwrap();
        let crate::qsgen::QsMatrix::Sparse(sp) = &inst.matrix else { panic!() };
        let (g, stats) = bruhat_from_sparse_with(sp, SparseOptions::default(), &mut SeededRng::new(12)).unwrap();
        let dense = sp.densify();
        assert_eq!(bruhat_expand(&g), dense);
        assert_eq!(bruhat_expand(&g), bruhat_expand(&bruhat_from_dense(&dense).unwrap()));
        assert_eq!(stats.failures, 0);
    }
}
