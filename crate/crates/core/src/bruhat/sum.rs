use crate::dense::{cre, Cre, DenseMatrix};
use crate::error::{Error, Result};

/// CRE of `left · right` from three small eliminations.
///
/// With `right = C_R R_R E_R` and `left = C_L R_L E_L`, the middle product
/// `X = R_L E_L C_R R_R` is only `rank_L x rank_R`; its own CRE
/// `C_X R_X E_X` gives `left · right = (C_L C_X) R_X (E_X E_R)`. Both outer
/// products keep their echelon shape, so the pivots still reveal the rank
/// profile matrix of the product.
pub(crate) fn product_cre(left: &DenseMatrix, right: &DenseMatrix) -> Result<Cre> {
    if left.cols() != right.rows() {
        return Err(Error::Shape(format!(
            "{}x{} times {}x{}",
            left.rows(), left.cols(), right.rows(), right.cols()
        )));
    }
    let fr = cre(right);
    let fl = cre(left);
    // C_R R_R puts column k of C_R at position perm[k].
    let mut cr_r = DenseMatrix::zeros(fr.c.rows(), fr.rank(), right.field());
    for (k, &l) in fr.perm.iter().enumerate() {
        for i in 0..fr.c.rows() {
            cr_r.set(i, l, fr.c.get(i, k));
        }
    }
    let middle = fl.right_factor().mul(&cr_r)?;
    let fx = cre(&middle);
    let c = fl.c.mul(&fx.c)?;
    let e = fx.e.mul(&fr.e)?;
    let pivot_rows = fx.pivot_rows.iter().map(|&k| fl.pivot_rows[k]).collect();
    let pivot_cols = fx.pivot_cols.iter().map(|&l| fr.pivot_cols[l]).collect();
    Ok(Cre { c, perm: fx.perm, e, pivot_rows, pivot_cols })
}

/// CRE of `A + B - g·hᵀ` for `A` and `B` given by CRE factors, without
/// forming either matrix.
pub fn bruhat_sum_cre(a: &Cre, b: &Cre, g: &DenseMatrix, h: &DenseMatrix) -> Result<Cre> {
    let (m, n) = (a.c.rows(), a.e.cols());
    if b.c.rows() != m || b.e.cols() != n || g.rows() != m || h.rows() != n || g.cols() != h.cols() {
        return Err(Error::Shape("operands of a sum CRE disagree in shape".into()));
    }
    let left = DenseMatrix::hstack(&[&a.c, &b.c, g])?;
    let right = DenseMatrix::vstack(&[&a.right_factor(), &b.right_factor(), &h.transpose().neg()])?;
    product_cre(&left, &right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{is_column_echelon, is_row_echelon};
    use crate::ffield::{PrimeField, SeededRng};

    fn low_rank(m: usize, n: usize, r: usize, rng: &mut SeededRng) -> DenseMatrix {
        let f = PrimeField::default();
        DenseMatrix::random(m, r, f, rng).mul(&DenseMatrix::random(r, n, f, rng)).unwrap()
    }

    #[test]
    fn matches_dense_elimination() {
        let f = PrimeField::default();
        let mut rng = SeededRng::new(1);
        for _ in 0..20 {
            let a = low_rank(14, 11, 3, &mut rng);
            let mut b = low_rank(14, 11, 2, &mut rng);
            // Cancel a corner so the rank profile matrix of the sum is not generic.
            for i in 0..5 {
                for j in 0..4 {
                    b.set(i, j, f.neg(a.get(i, j)));
                }
            }
            let g = DenseMatrix::random(14, 2, f, &mut rng);
            let h = DenseMatrix::random(11, 2, f, &mut rng);
            let got = bruhat_sum_cre(&cre(&a), &cre(&b), &g, &h).unwrap();
            let target = a.add(&b).unwrap().sub(&g.mul(&h.transpose()).unwrap()).unwrap();
            let want = cre(&target);
            assert_eq!(got.reconstruct(), target);
            assert_eq!(got.pivot_rows, want.pivot_rows);
            assert_eq!(got.pivot_cols, want.pivot_cols);
            assert_eq!(got.perm, want.perm);
            assert!(is_column_echelon(&got.c) && is_row_echelon(&got.e));
        }
    }

    #[test]
    fn trivial_cases() {
        let f = PrimeField::default();
        let mut rng = SeededRng::new(2);
        let a = low_rank(8, 9, 3, &mut rng);
        let fa = cre(&a);
        let empty_g = DenseMatrix::zeros(8, 0, f);
        let empty_h = DenseMatrix::zeros(9, 0, f);
        let zero = Cre::empty(8, 9, f);
        let got = bruhat_sum_cre(&fa, &zero, &empty_g, &empty_h).unwrap();
        assert_eq!(got.reconstruct(), a);
        let neg = cre(&a.neg());
        assert_eq!(bruhat_sum_cre(&fa, &neg, &empty_g, &empty_h).unwrap().rank(), 0);
    }
}
