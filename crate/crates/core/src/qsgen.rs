//! Quasiseparable test instances, the exact order oracle and a coordinate
//! sparse matrix.

use std::collections::BTreeMap;

use crate::dense::{rank, DenseMatrix};
use crate::error::{Error, Result};
use crate::ffield::{FieldElement, PrimeField, SeededRng};

/// Coordinate-list matrix. Entries are kept sorted by (row, column) with no
/// duplicates and no stored zeros.
///
/// The public constructors and [`SparseMatrix::triples`] use 1-based indices;
/// the in-crate accessors are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    field: PrimeField,
    entries: Vec<(usize, usize, FieldElement)>,
}

impl SparseMatrix {
    pub fn empty(rows: usize, cols: usize, field: PrimeField) -> Self {
        SparseMatrix { rows, cols, field, entries: Vec::new() }
    }

    /// Validate and sort 1-based `(row, col, value)` triples.
    pub fn from_triples(
        rows: usize,
        cols: usize,
        field: PrimeField,
        triples: impl IntoIterator<Item = (usize, usize, FieldElement)>,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, j, v) in triples {
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(Error::Param(format!("entry ({i}, {j}) outside {rows}x{cols}")));
            }
            if v.is_zero() {
                return Err(Error::Param(format!("explicit zero at ({i}, {j})")));
            }
            if v.value() >= field.modulus() {
                return Err(Error::Param(format!("value {v} at ({i}, {j}) not reduced")));
            }
            entries.push((i - 1, j - 1, v));
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::Param(format!("duplicate entry ({}, {})", w[0].0 + 1, w[0].1 + 1)));
        }
        Ok(SparseMatrix { rows, cols, field, entries })
    }

    /// Drop the zeros of a dense matrix.
    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if !v.is_zero() {
                    entries.push((i, j, v));
                }
            }
        }
        SparseMatrix { rows: a.rows(), cols: a.cols(), field: a.field(), entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// 1-based triples in (row, col) order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, FieldElement)> + '_ {
        self.entries.iter().map(|&(i, j, v)| (i + 1, j + 1, v))
    }

    pub(crate) fn entries(&self) -> &[(usize, usize, FieldElement)] {
        &self.entries
    }

    pub fn densify(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols, self.field);
        for &(i, j, v) in &self.entries {
            out.set(i, j, v);
        }
        out
    }
}

pub fn densify(a: &SparseMatrix) -> DenseMatrix {
    a.densify()
}

/// Largest ranks of the strictly lower and strictly upper off-diagonal
/// blocks `A[k.., ..k]` and `A[..k, k..]`.
pub fn qs_orders(a: &DenseMatrix) -> Result<(usize, usize)> {
    if !a.is_square() {
        return Err(Error::Shape(format!("qs_order of a {}x{} matrix", a.rows(), a.cols())));
    }
    let n = a.rows();
    let (mut lower, mut upper) = (0, 0);
    for k in 1..n {
        // Blocks of width min(k, n-k) cannot beat the current maximum otherwise.
        if k.min(n - k) > lower {
            lower = lower.max(rank(&a.submatrix(k..n, 0..k)));
        }
        if k.min(n - k) > upper {
            upper = upper.max(rank(&a.submatrix(0..k, k..n)));
        }
    }
    Ok((lower, upper))
}

/// Smallest `s` bounding every off-diagonal block rank.
pub fn qs_order(a: &DenseMatrix) -> Result<usize> {
    let (lower, upper) = qs_orders(a)?;
    Ok(lower.max(upper))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    Dense,
    /// Target fraction of nonzero entries.
    Fraction(f64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QsMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl QsMatrix {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            QsMatrix::Dense(a) => a.clone(),
            QsMatrix::Sparse(a) => a.densify(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            QsMatrix::Dense(a) => a.rows(),
            QsMatrix::Sparse(a) => a.rows(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QsInstance {
    pub matrix: QsMatrix,
    /// Declared order; the true order never exceeds it.
    pub order: usize,
    pub lower_rank: usize,
    pub upper_rank: usize,
    pub seed: u64,
}

/// `D + strictlower(X·Yᵀ) + strictupper(U·Vᵀ)` with rank-`s` factors, or a
/// sparse instance of the same order with roughly the requested fill.
pub fn random_qs(
    field: PrimeField,
    n: usize,
    s: usize,
    density: Density,
    rng: &mut SeededRng,
) -> Result<QsInstance> {
    random_qs_ranks(field, n, s, s, density, rng)
}

/// Like [`random_qs`] with distinct ranks for the two triangles.
pub fn random_qs_ranks(
    field: PrimeField,
    n: usize,
    lower: usize,
    upper: usize,
    density: Density,
    rng: &mut SeededRng,
) -> Result<QsInstance> {
    if lower > n || upper > n {
        return Err(Error::Param(format!("order {} exceeds dimension {n}", lower.max(upper))));
    }
    let seed = rng.seed();
    let matrix = match density {
        Density::Dense => QsMatrix::Dense(dense_instance(field, n, lower, upper, rng)),
        Density::Fraction(f) => {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Param(format!("density {f} outside [0, 1]")));
            }
            QsMatrix::Sparse(sparse_instance(field, n, lower, upper, f, rng))
        }
    };
    Ok(QsInstance { matrix, order: lower.max(upper), lower_rank: lower, upper_rank: upper, seed })
}

fn dense_instance(
    field: PrimeField,
    n: usize,
    lower: usize,
    upper: usize,
    rng: &mut SeededRng,
) -> DenseMatrix {
    let x = DenseMatrix::random(n, lower, field, rng);
    let y = DenseMatrix::random(lower, n, field, rng);
    let u = DenseMatrix::random(n, upper, field, rng);
    let v = DenseMatrix::random(upper, n, field, rng);
    let low = x.mul(&y).expect("conformal");
    let up = u.mul(&v).expect("conformal");
    let diag = rng.uniform(&field, n);
    DenseMatrix::from_fn(n, n, field, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => low.get(i, j),
        std::cmp::Ordering::Less => up.get(i, j),
        std::cmp::Ordering::Equal => diag[i],
    })
}

/// Nonzero diagonal plus, per triangle, `rank` rank-one terms `x·yᵀ` whose
/// row support lies strictly after a random split and column support at or
/// before it, so every product entry stays inside its triangle.
fn sparse_instance(
    field: PrimeField,
    n: usize,
    lower: usize,
    upper: usize,
    density: f64,
    rng: &mut SeededRng,
) -> SparseMatrix {
    let target = density * (n * n) as f64;
    if n < 2 || (lower == 0 && upper == 0) {
        return sparse_diagonal(field, n, rng);
    }
    // Overlapping supports lose a few entries; rescale the budget toward the
    // target and keep the closest attempt.
    let mut scale = 1.0;
    let mut best: Option<SparseMatrix> = None;
    for attempt in 0..6u64 {
        let mut sub = rng.split(attempt + 1);
        let m = sparse_attempt(field, n, lower, upper, target * scale, &mut sub);
        let got = m.nnz() as f64;
        let better = best
            .as_ref()
            .map_or(true, |b| (got - target).abs() < (b.nnz() as f64 - target).abs());
        if better {
            best = Some(m);
        }
        if (got - target).abs() <= 0.03 * target || got == 0.0 {
            break;
        }
        scale *= target / got;
    }
    best.expect("at least one attempt")
}

fn sparse_diagonal(field: PrimeField, n: usize, rng: &mut SeededRng) -> SparseMatrix {
    let entries = (0..n).map(|i| (i, i, rng.nonzero(&field))).collect();
    SparseMatrix { rows: n, cols: n, field, entries }
}

fn sparse_attempt(
    field: PrimeField,
    n: usize,
    lower: usize,
    upper: usize,
    target: f64,
    rng: &mut SeededRng,
) -> SparseMatrix {
    let mut cells: BTreeMap<(usize, usize), FieldElement> = BTreeMap::new();
    for i in 0..n {
        cells.insert((i, i), rng.nonzero(&field));
    }
    let per_triangle = ((target - n as f64) / 2.0).max(0.0);
    for (rank, is_lower) in [(lower, true), (upper, false)] {
        if rank == 0 {
            continue;
        }
        let budget = (per_triangle / rank as f64).max(1.0);
        let side = (n / 2).max(1);
        let cols_per = (budget.sqrt().floor() as usize).clamp(1, side);
        let rows_per = ((budget / cols_per as f64).round() as usize).clamp(1, n - cols_per);
        for _ in 0..rank {
            // Split q: columns drawn from [0, q), rows from [q, n).
            let lo = cols_per;
            let hi = n - rows_per;
            let q = if hi > lo { lo + rng.index(hi - lo + 1) } else { lo.min(n - 1) };
            let tail = rng.subset(n - q, rows_per.min(n - q));
            let head = rng.subset(q, cols_per.min(q));
            let xs: Vec<FieldElement> = tail.iter().map(|_| rng.nonzero(&field)).collect();
            let ys: Vec<FieldElement> = head.iter().map(|_| rng.nonzero(&field)).collect();
            for (&r, &xv) in tail.iter().zip(&xs) {
                for (&c, &yv) in head.iter().zip(&ys) {
                    let (i, j) = if is_lower { (q + r, c) } else { (c, q + r) };
                    let prod = field.mul(xv, yv);
                    let cell = cells.entry((i, j)).or_insert(FieldElement::ZERO);
                    *cell = field.add(*cell, prod);
                }
            }
        }
    }
    let entries = cells.into_iter().filter(|(_, v)| !v.is_zero()).map(|((i, j), v)| (i, j, v)).collect();
    SparseMatrix { rows: n, cols: n, field, entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> PrimeField {
        PrimeField::default()
    }

    #[test]
    fn order_of_diagonal_and_tridiagonal() {
        let f = k();
        let d = DenseMatrix::from_fn(6, 6, f, |i, j| if i == j { f.elem(i as u64 + 1) } else { FieldElement::ZERO });
        assert_eq!(qs_order(&d).unwrap(), 0);
        let t = DenseMatrix::from_fn(5, 5, f, |i, j| {
            if i.abs_diff(j) <= 1 { f.elem((3 * i + j + 1) as u64) } else { FieldElement::ZERO }
        });
        assert_eq!(qs_order(&t).unwrap(), 1);
        assert!(matches!(qs_order(&DenseMatrix::zeros(2, 3, f)), Err(Error::Shape(_))));
    }

    #[test]
    fn dense_instance_has_planted_order() {
        let f = k();
        let mut rng = SeededRng::new(11);
        let inst = random_qs(f, 64, 4, Density::Dense, &mut rng).unwrap();
        assert_eq!(qs_orders(&inst.matrix.to_dense()).unwrap(), (4, 4));
        let zero = random_qs(f, 10, 0, Density::Dense, &mut SeededRng::new(1)).unwrap();
        assert_eq!(qs_order(&zero.matrix.to_dense()).unwrap(), 0);
        assert!(random_qs(f, 3, 4, Density::Dense, &mut rng).is_err());
    }

    #[test]
    fn instances_are_deterministic() {
        let f = k();
        let a = random_qs(f, 40, 3, Density::Fraction(0.1), &mut SeededRng::new(5)).unwrap();
        let b = random_qs(f, 40, 3, Density::Fraction(0.1), &mut SeededRng::new(5)).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn sparse_instance_order_and_fill() {
        let f = k();
        for (seed, density) in [(1u64, 0.02), (2, 0.05), (3, 0.1)] {
            let inst = random_qs(f, 256, 8, Density::Fraction(density), &mut SeededRng::new(seed)).unwrap();
            let QsMatrix::Sparse(sp) = &inst.matrix else { panic!("expected sparse") };
            let target = density * 256.0 * 256.0;
            let rel = (sp.nnz() as f64 - target).abs() / target;
            assert!(rel <= 0.1, "density {density}: nnz {} vs {target}", sp.nnz());
            assert!(qs_order(&sp.densify()).unwrap() <= 8);
        }
    }

    #[test]
    fn sparse_validation_and_roundtrip() {
        let f = k();
        let one = SparseMatrix::from_triples(3, 4, f, [(2, 3, f.elem(7))]).unwrap();
        let d = one.densify();
        assert_eq!(d.get(1, 2), f.elem(7));
        assert_eq!(d.data().iter().filter(|v| !v.is_zero()).count(), 1);
        assert!(SparseMatrix::empty(2, 2, f).densify().is_zero());
        assert!(SparseMatrix::from_triples(2, 2, f, [(0, 1, f.elem(1))]).is_err());
        assert!(SparseMatrix::from_triples(2, 2, f, [(1, 1, FieldElement::ZERO)]).is_err());
        assert!(SparseMatrix::from_triples(2, 2, f, [(1, 1, f.elem(1)), (1, 1, f.elem(2))]).is_err());
        let inst = random_qs(f, 30, 2, Density::Fraction(0.2), &mut SeededRng::new(9)).unwrap();
        let QsMatrix::Sparse(sp) = inst.matrix else { panic!() };
        assert_eq!(SparseMatrix::from_dense(&sp.densify()), sp);
    }
}
