use super::oracle::LeftTriangularOracle;
use super::{in_left, BruhatTriple, Pivot};
use crate::dense::{trsm_lower, trsm_right_upper, DenseMatrix};
use crate::error::{Error, Result};
use crate::ffield::FieldElement;

/// Bruhat triple of `Left(operand - g·hᵀ)`.
///
/// The top-left block `A11` of the triangle is eliminated directly; its
/// pivots are then extended into `A21` (below) and `A12` (right), and the
/// two Schur-type remainders are handled recursively as smaller triangles.
/// Blocks of size at most `base` are eliminated in one call to the oracle.
pub fn lbruhat_gen<O: LeftTriangularOracle + ?Sized>(
    oracle: &mut O,
    g: &DenseMatrix,
    h: &DenseMatrix,
    base: usize,
) -> Result<BruhatTriple> {
    let n = oracle.dim();
    if g.rows() != n || h.rows() != n || g.cols() != h.cols() {
        return Err(Error::Shape(format!(
            "correction {}x{} and {}x{} for an operand of size {n}",
            g.rows(), g.cols(), h.rows(), h.cols()
        )));
    }
    let pivots = recurse(oracle, 0, 0, n, g, h, base.max(1))?;
    Ok(BruhatTriple::from_pivots(n, oracle.field(), pivots))
}

fn first_nonzero(col: &[FieldElement]) -> Option<usize> {
    col.iter().position(|v| !v.is_zero())
}

/// Keep only correction terms whose outer product reaches the triangle.
fn prune(g: &DenseMatrix, h: &DenseMatrix, m: usize) -> (DenseMatrix, DenseMatrix) {
    let keep: Vec<usize> = (0..g.cols())
        .filter(|&k| match (first_nonzero(&g.column(k)), first_nonzero(&h.column(k))) {
            (Some(i), Some(j)) => in_left(i, j, m),
            _ => false,
        })
        .collect();
    if keep.len() == g.cols() {
        (g.clone(), h.clone())
    } else {
        (g.select_cols(&keep), h.select_cols(&keep))
    }
}

/// Pivots of the triangle with corner `(ro, co)` and size `m`, in local
/// coordinates.
fn recurse<O: LeftTriangularOracle + ?Sized>(
    oracle: &mut O,
    ro: usize,
    co: usize,
    m: usize,
    g: &DenseMatrix,
    h: &DenseMatrix,
    base: usize,
) -> Result<Vec<Pivot>> {
    if m <= 1 {
        return Ok(Vec::new());
    }
    let (g, h) = prune(g, h, m);
    if m <= base {
        let f = oracle.bbcre(ro..ro + m, co..co + m, &g, &h)?;
        let mut out = Vec::new();
        for (k, &l) in f.perm.iter().enumerate() {
            let (i, j) = (f.pivot_rows[k], f.pivot_cols[l]);
            if in_left(i, j, m) {
                let c = (i..m).map(|x| f.c.get(x, k)).collect();
                let e = f.e.row(l)[j..].to_vec();
                out.push(Pivot { row: i, col: j, c, e }.clip(m));
            }
        }
        return Ok(out);
    }

    let hh = m / 2;
    let w = m - hh;
    let (g1, g2) = (g.submatrix(0..hh, 0..g.cols()), g.submatrix(hh..m, 0..g.cols()));
    let (h1, h2) = (h.submatrix(0..w, 0..h.cols()), h.submatrix(w..m, 0..h.cols()));
    let f0 = oracle.bbcre(ro..ro + hh, co..co + w, &g1, &h1)?;
    let rows0 = &f0.pivot_rows;
    let cols0 = &f0.pivot_cols;
    let r = f0.rank();
    let field = oracle.field();

    // Extend the A11 pivots to the right: L·B12 = A12[rows0, :] - g1[rows0]·h2ᵀ.
    let mut b12 = DenseMatrix::zeros(r, hh, field);
    let mut b21 = DenseMatrix::zeros(w, r, field);
    if r > 0 {
        let lower = f0.c.select_rows(rows0);
        let ro_rows: Vec<usize> = rows0.iter().map(|&i| ro + i).collect();
        let mut x = oracle.expand_rows(&ro_rows, co + w..co + m);
        if g1.cols() > 0 {
            crate::dense::gemm_sub(&mut x, &g1.select_rows(rows0), &h2.transpose())?;
        }
        b12 = trsm_lower(&lower, &x)?;
        for (k, &i) in rows0.iter().enumerate() {
            for y in 0..hh {
                if !in_left(i, w + y, m) {
                    b12.set(k, y, FieldElement::ZERO);
                }
            }
        }

        // And downwards: B21·U = A21[:, cols0] - g2·h1[cols0]ᵀ.
        let upper = f0.e.select_cols(cols0);
        let co_cols: Vec<usize> = cols0.iter().map(|&j| co + j).collect();
        let mut y = oracle.expand_cols(ro + hh..ro + m, &co_cols);
        if g2.cols() > 0 {
            crate::dense::gemm_sub(&mut y, &g2, &h1.select_rows(cols0).transpose())?;
        }
        b21 = trsm_right_upper(&y, &upper)?;
        for x in 0..w {
            for (l, &j) in cols0.iter().enumerate() {
                if !in_left(hh + x, j, m) {
                    b21.set(x, l, FieldElement::ZERO);
                }
            }
        }
    }

    let mut pivots = Vec::new();
    // Remainder below A11.
    {
        let gs = DenseMatrix::hstack(&[&g2, &b21])?;
        let hs = DenseMatrix::hstack(&[&h1, &f0.e.transpose()])?;
        for mut p in recurse(oracle, ro + hh, co, w, &gs, &hs, base)? {
            p.row += hh;
            pivots.push(p);
        }
    }
    // Remainder right of A11.
    {
        let gs = DenseMatrix::hstack(&[&g1, &f0.c])?;
        let hs = DenseMatrix::hstack(&[&h2, &b12.transpose()])?;
        for mut p in recurse(oracle, ro, co + w, hh, &gs, &hs, base)? {
            p.col += w;
            pivots.push(p);
        }
    }
    for (k, &l) in f0.perm.iter().enumerate() {
        let (i, j) = (rows0[k], cols0[l]);
        let c = (i..hh).map(|x| f0.c.get(x, k)).chain(b21.column(l)).collect();
        let e = f0.e.row(l)[j..].iter().copied().chain(b12.row(k).iter().copied()).collect();
        pivots.push(Pivot { row: i, col: j, c, e }.clip(m));
    }

    pivots.sort_by_key(|p| p.row);
    debug_assert!(pivots.windows(2).all(|w| w[0].row < w[1].row), "pivot rows repeat");
    debug_assert!(
        {
            let mut cols: Vec<usize> = pivots.iter().map(|p| p.col).collect();
            cols.sort_unstable();
            cols.windows(2).all(|w| w[0] < w[1])
        },
        "pivot columns repeat"
    );
    Ok(pivots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bruhat::{left_part, DenseOracle};
    use crate::ffield::{PrimeField, SeededRng};

    fn f() -> PrimeField {
        PrimeField::default()
    }

    fn low_rank(n: usize, s: usize, seed: u64) -> DenseMatrix {
        let mut rng = SeededRng::new(seed);
        DenseMatrix::random(n, s, f(), &mut rng).mul(&DenseMatrix::random(s, n, f(), &mut rng)).unwrap()
    }

    fn run(a: &DenseMatrix, base: usize) -> BruhatTriple {
        let empty = DenseMatrix::zeros(a.rows(), 0, f());
        lbruhat_gen(&mut DenseOracle::new(a.clone()), &empty, &empty, base).unwrap()
    }

    #[test]
    fn zero_operand_has_no_pivots() {
        assert_eq!(run(&DenseMatrix::zeros(40, 40, f()), 4).rank(), 0);
    }

    #[test]
    fn small_operand_is_one_elimination() {
        let a = low_rank(6, 2, 3);
        let t = run(&a, 32);
        assert_eq!(left_part(&t.expand()), left_part(&a));
    }

    #[test]
    fn recursive_matches_operand() {
        for (n, s, base) in [(128, 4, 8), (57, 3, 1), (90, 6, 16)] {
            let a = low_rank(n, s, n as u64);
            let t = run(&a, base);
            assert_eq!(t.expand(), left_part(&a), "n={n} base={base}");
            // Same pivots whatever the cutoff.
            let whole = run(&a, n);
            let rows: Vec<_> = t.pivots().iter().map(|p| (p.row, p.col)).collect();
            let want: Vec<_> = whole.pivots().iter().map(|p| (p.row, p.col)).collect();
            assert_eq!(rows, want);
        }
    }

    #[test]
    fn correction_terms_are_applied() {
        let n = 48;
        let mut rng = SeededRng::new(9);
        let a = low_rank(n, 3, 5);
        let g = DenseMatrix::random(n, 2, f(), &mut rng);
        let h = DenseMatrix::random(n, 2, f(), &mut rng);
        let t = lbruhat_gen(&mut DenseOracle::new(a.clone()), &g, &h, 6).unwrap();
        let want = left_part(&a.sub(&g.mul(&h.transpose()).unwrap()).unwrap());
        assert_eq!(t.expand(), want);
    }
}
