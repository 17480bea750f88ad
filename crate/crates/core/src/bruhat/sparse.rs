//! Sketched rank profiles and CRE of `A - G·Hᵀ` for sparse `A`.

use crate::dense::{cre, is_column_echelon, is_row_echelon, rank_profiles, trsm_lower, trsm_right_upper};
use crate::dense::{Cre, DenseMatrix, RankProfile};
use crate::error::{Error, Result};
use crate::ffield::{FieldElement, PrimeField, SeededRng};
use crate::qsgen::SparseMatrix;

/// Counters from a sparse construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SparseStats {
    pub sketched_blocks: usize,
    pub dense_blocks: usize,
    /// Sketches widened because their rank filled the width.
    pub widenings: usize,
    /// Detected sketch failures, each followed by a fresh draw.
    pub failures: usize,
}

impl SparseStats {
    pub fn merge(self, other: SparseStats) -> SparseStats {
        SparseStats {
            sketched_blocks: self.sketched_blocks + other.sketched_blocks,
            dense_blocks: self.dense_blocks + other.dense_blocks,
            widenings: self.widenings + other.widenings,
            failures: self.failures + other.failures,
        }
    }
}

/// Uniform random Toeplitz matrix, stored by its `rows + cols - 1` diagonals.
#[derive(Clone, Debug)]
pub struct ToeplitzSketch {
    rows: usize,
    cols: usize,
    /// `diagonals[i - j + cols - 1]` is the value at `(i, j)`.
    diagonals: Vec<FieldElement>,
}

impl ToeplitzSketch {
    pub fn random(rows: usize, cols: usize, field: &PrimeField, rng: &mut SeededRng) -> Self {
        let len = (rows + cols).saturating_sub(1);
        ToeplitzSketch { rows, cols, diagonals: rng.uniform(field, len) }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.diagonals[i + self.cols - 1 - j]
    }

    pub fn to_dense(&self, field: PrimeField) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, field, |i, j| self.get(i, j))
    }
}

pub(crate) enum Sketched {
    Done(Cre),
    /// The sketch rank reached its width; the true rank may be larger.
    Saturated,
}

/// Row profile of `A·T₁ - G·(Hᵀ·T₁)` and column profile of `T₂·A - (T₂·G)·Hᵀ`.
fn sketch_profiles(
    field: PrimeField,
    (m, w): (usize, usize),
    entries: &[(usize, usize, FieldElement)],
    g: &DenseMatrix,
    h: &DenseMatrix,
    width: usize,
    rng: &mut SeededRng,
) -> Result<(RankProfile, RankProfile)> {
    let t1 = ToeplitzSketch::random(w, width, &field, rng);
    let t2 = ToeplitzSketch::random(width, m, &field, rng);
    let mut p = DenseMatrix::zeros(m, width, field);
    let mut q = DenseMatrix::zeros(width, w, field);
    for &(i, j, v) in entries {
        for c in 0..width {
            p.set(i, c, field.add(p.get(i, c), field.mul(v, t1.get(j, c))));
            q.set(c, j, field.add(q.get(c, j), field.mul(t2.get(c, i), v)));
        }
    }
    if g.cols() > 0 {
        let ht1 = h.transpose().mul(&t1.to_dense(field))?;
        crate::dense::gemm_sub(&mut p, g, &ht1)?;
        let t2g = t2.to_dense(field).mul(g)?;
        crate::dense::gemm_sub(&mut q, &t2g, &h.transpose())?;
    }
    Ok((rank_profiles(&p).0, rank_profiles(&q).1))
}

fn check_inputs(m: usize, w: usize, g: &DenseMatrix, h: &DenseMatrix) -> Result<()> {
    if g.rows() != m || h.rows() != w || g.cols() != h.cols() {
        return Err(Error::Shape(format!(
            "correction {}x{} and {}x{} for a {m}x{w} block",
            g.rows(), g.cols(), h.rows(), h.cols()
        )));
    }
    Ok(())
}

/// Sketch-driven CRE of an `m x w` block given by sorted coordinate entries.
///
/// Selected rows `I` and columns `J` of the residual `M = A - G·Hᵀ` give
/// `M = M[:, J]·M[I, J]⁻¹·M[I, :]`; with `M[I, J] = C₁R₁E₁` the factors are
/// `C = M[:, J]·E₁⁻¹·R₁ᵀ` and `E = R₁ᵀ·C₁⁻¹·M[I, :]`. Wrong profiles are
/// caught by the echelon shape of the result and a random projection check.
pub(crate) fn sketch_cre(
    m: usize,
    w: usize,
    entries: &[(usize, usize, FieldElement)],
    g: &DenseMatrix,
    h: &DenseMatrix,
    width: usize,
    rng: &mut SeededRng,
) -> Result<Sketched> {
    check_inputs(m, w, g, h)?;
    let field = g.field();
    let (rows, cols) = sketch_profiles(field, (m, w), entries, g, h, width, rng)?;
    if rows.len() != cols.len() {
        return Err(Error::ProfileMismatch);
    }
    let r = rows.len();
    if r == width {
        return Ok(Sketched::Saturated);
    }
    let rows = rows.0;
    let cols = cols.0;

    // M[I, :] and M[:, J]
    let mut row_pos = vec![usize::MAX; m];
    rows.iter().enumerate().for_each(|(k, &i)| row_pos[i] = k);
    let mut col_pos = vec![usize::MAX; w];
    cols.iter().enumerate().for_each(|(k, &j)| col_pos[j] = k);
    let mut top = DenseMatrix::zeros(r, w, field);
    let mut left = DenseMatrix::zeros(m, r, field);
    for &(i, j, v) in entries {
        if row_pos[i] != usize::MAX {
            top.set(row_pos[i], j, v);
        }
        if col_pos[j] != usize::MAX {
            left.set(i, col_pos[j], v);
        }
    }
    if g.cols() > 0 {
        let hs = h.transpose();
        crate::dense::gemm_sub(&mut top, &g.select_rows(&rows), &hs)?;
        crate::dense::gemm_sub(&mut left, g, &hs.select_cols(&cols))?;
    }
    let pivot_block = top.select_cols(&cols);
    let inner = cre(&pivot_block);
    if inner.rank() != r {
        return Err(Error::ProfileMismatch);
    }
    let z = trsm_right_upper(&left, &inner.e)?;
    let y = trsm_lower(&inner.c, &top)?;
    let mut c = DenseMatrix::zeros(m, r, field);
    let mut e = DenseMatrix::zeros(r, w, field);
    for (k, &l) in inner.perm.iter().enumerate() {
        for i in 0..m {
            c.set(i, k, z.get(i, l));
        }
        e.row_mut(l).copy_from_slice(y.row(k));
    }
    let result = Cre { c, perm: inner.perm, e, pivot_rows: rows, pivot_cols: cols };
    if !pivots_match(&result) || !projection_check(&result, entries, g, h, rng) {
        return Err(Error::ProfileMismatch);
    }
    Ok(Sketched::Done(result))
}

/// Echelon shape with leading entries exactly at the claimed profiles.
fn pivots_match(f: &Cre) -> bool {
    if !is_column_echelon(&f.c) || !is_row_echelon(&f.e) {
        return false;
    }
    let lead_c = (0..f.rank()).all(|k| {
        let col = f.c.column(k);
        col.iter().position(|v| !v.is_zero()) == Some(f.pivot_rows[k]) && col[f.pivot_rows[k]].value() == 1
    });
    let lead_e = (0..f.rank()).all(|l| f.e.row(l).iter().position(|v| !v.is_zero()) == Some(f.pivot_cols[l]));
    lead_c && lead_e
}

/// Compare `M·x` with `C·R·E·x` for one random `x`.
fn projection_check(
    f: &Cre,
    entries: &[(usize, usize, FieldElement)],
    g: &DenseMatrix,
    h: &DenseMatrix,
    rng: &mut SeededRng,
) -> bool {
    let field = g.field();
    let (m, w) = (f.c.rows(), f.e.cols());
    let x = DenseMatrix::from_vec(w, 1, field, rng.uniform(&field, w));
    let mut mx = DenseMatrix::zeros(m, 1, field);
    for &(i, j, v) in entries {
        mx.set(i, 0, field.add(mx.get(i, 0), field.mul(v, x.get(j, 0))));
    }
    let htx = h.transpose().mul(&x).expect("conformal");
    crate::dense::gemm_sub(&mut mx, g, &htx).expect("conformal");
    let ex = f.e.mul(&x).expect("conformal");
    let rex = DenseMatrix::from_fn(f.rank(), 1, field, |k, _| ex.get(f.perm[k], 0));
    f.c.mul(&rex).expect("conformal") == mx
}

fn sparse_parts(a: &SparseMatrix) -> Vec<(usize, usize, FieldElement)> {
    a.entries().to_vec()
}

/// Monte Carlo row and column rank profiles of `A - G·Hᵀ`, assuming its rank
/// is at most `s + t` for `t` correction columns.
pub fn sparse_rank_profiles(
    a: &SparseMatrix,
    g: &DenseMatrix,
    h: &DenseMatrix,
    s: usize,
    rng: &mut SeededRng,
) -> Result<(RankProfile, RankProfile)> {
    check_inputs(a.rows(), a.cols(), g, h)?;
    let width = s + g.cols();
    sketch_profiles(a.field(), (a.rows(), a.cols()), &sparse_parts(a), g, h, width, rng)
}

/// CRE of `A - G·Hᵀ` for a rank at most `s + t`; a failed sketch is reported
/// as [`Error::ProfileMismatch`] so the caller can redraw.
pub fn sparse_cre(
    a: &SparseMatrix,
    g: &DenseMatrix,
    h: &DenseMatrix,
    s: usize,
    rng: &mut SeededRng,
) -> Result<Cre> {
    // One spare column keeps a full-rank residual from reading as saturated.
    let width = s + g.cols() + 1;
    match sketch_cre(a.rows(), a.cols(), &sparse_parts(a), g, h, width, rng)? {
        Sketched::Done(f) => Ok(f),
        Sketched::Saturated => Err(Error::ProfileMismatch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::rank_profiles;

    fn k() -> PrimeField {
        PrimeField::default()
    }

    fn sparse_low_rank(n: usize, r: usize, seed: u64) -> SparseMatrix {
        let f = k();
        let mut rng = SeededRng::new(seed);
        let mut d = DenseMatrix::zeros(n, n, f);
        for _ in 0..r {
            let rows = rng.subset(n, 4);
            let cols = rng.subset(n, 5);
            let ys: Vec<_> = cols.iter().map(|_| rng.nonzero(&f)).collect();
            for &i in &rows {
                let x = rng.nonzero(&f);
                for (&j, &y) in cols.iter().zip(&ys) {
                    d.set(i, j, f.add(d.get(i, j), f.mul(x, y)));
                }
            }
        }
        SparseMatrix::from_dense(&d)
    }

    #[test]
    fn toeplitz_is_constant_on_diagonals() {
        let t = ToeplitzSketch::random(5, 3, &k(), &mut SeededRng::new(1));
        for i in 1..5 {
            for j in 1..3 {
                assert_eq!(t.get(i, j), t.get(i - 1, j - 1));
            }
        }
    }

    #[test]
    fn identity_profiles() {
        let f = k();
        let id = SparseMatrix::from_dense(&DenseMatrix::identity(6, f));
        let e = DenseMatrix::zeros(6, 0, f);
        let (r, c) = sparse_rank_profiles(&id, &e, &e, 6, &mut SeededRng::new(2)).unwrap();
        assert_eq!(r.one_based(), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(c.one_based(), vec![1, 2, 3, 4, 5, 6]);
        let f_id = sparse_cre(&id, &e, &e, 6, &mut SeededRng::new(3)).unwrap();
        assert_eq!(f_id.c, DenseMatrix::identity(6, f));
        assert_eq!(f_id.e, DenseMatrix::identity(6, f));
    }

    #[test]
    fn zero_matrix_with_correction() {
        let f = k();
        let mut rng = SeededRng::new(4);
        let g = DenseMatrix::random(20, 2, f, &mut rng);
        let h = DenseMatrix::random(20, 2, f, &mut rng);
        let zero = SparseMatrix::empty(20, 20, f);
        let got = sparse_rank_profiles(&zero, &g, &h, 0, &mut rng).unwrap();
        assert_eq!(got, rank_profiles(&g.mul(&h.transpose()).unwrap().neg()));
        let e = DenseMatrix::zeros(20, 0, f);
        assert_eq!(sparse_cre(&zero, &e, &e, 0, &mut rng).unwrap().rank(), 0);
    }

    #[test]
    fn low_rank_reconstruction_and_profiles() {
        let f = k();
        let mut agree = 0;
        for seed in 0..100u64 {
            let a = sparse_low_rank(64, 3, seed);
            let mut rng = SeededRng::new(1000 + seed);
            let g = DenseMatrix::random(64, 1, f, &mut rng);
            let h = DenseMatrix::random(64, 1, f, &mut rng);
            let target = a.densify().sub(&g.mul(&h.transpose()).unwrap()).unwrap();
            if sparse_rank_profiles(&a, &g, &h, 3, &mut rng).unwrap() == rank_profiles(&target) {
                agree += 1;
            }
            let got = sparse_cre(&a, &g, &h, 3, &mut rng).unwrap();
            assert_eq!(got.reconstruct(), target);
            assert_eq!(got.pivot_rows, cre(&target).pivot_rows);
        }
        assert!(agree >= 99, "{agree}");
    }
}
