use qsmat::bruhat::{
    bruhat_add, bruhat_apply, bruhat_expand, bruhat_from_dense, bruhat_from_sparse, bruhat_sum_cre, lbruhat_gen,
    left_part, sparse_cre, DenseOracle, SumOracle,
};
use qsmat::dense::{cre, matmul_acc, DenseMatrix};
use qsmat::error::Error;
use qsmat::ffield::{PrimeField, SeededRng};
use qsmat::hss::{hss_expand, hss_from_dense};
use qsmat::io::{read_generator, read_matrix, write_matrix, Generator};
use qsmat::qsgen::{qs_order, random_qs, Density, QsMatrix};
use qsmat::sss::{sss_add, sss_expand, sss_from_dense, sss_mul};

fn field() -> PrimeField {
    PrimeField::default()
}

fn instance(n: usize, s: usize, seed: u64) -> DenseMatrix {
    random_qs(field(), n, s, Density::Dense, &mut SeededRng::new(seed)).unwrap().matrix.to_dense()
}

#[test]
fn three_formats_agree_on_products() {
    let f = field();
    let a = instance(150, 5, 1);
    let b = DenseMatrix::random(150, 7, f, &mut SeededRng::new(2));
    let c = DenseMatrix::random(150, 7, f, &mut SeededRng::new(3));
    let want = matmul_acc(c.clone(), &a, &b).unwrap();
    let gens = [
        Generator::Sss(sss_from_dense(&a, 5).unwrap()),
        Generator::Hss(hss_from_dense(&a, 10).unwrap()),
        Generator::Bruhat(bruhat_from_dense(&a).unwrap()),
    ];
    for g in &gens {
        assert_eq!(g.apply(&b, &c).unwrap(), want);
    }
}

#[test]
fn sum_oracle_matches_dense_oracle() {
    let n = 96;
    let a = bruhat_from_dense(&instance(n, 3, 4)).unwrap();
    let b = bruhat_from_dense(&instance(n, 6, 5)).unwrap();
    let empty = DenseMatrix::zeros(n, 0, field());
    let via_sum = lbruhat_gen(&mut SumOracle::new(&a.lower, &b.lower), &empty, &empty, 8).unwrap();
    let dense = left_part(&a.lower.expand().add(&b.lower.expand()).unwrap());
    let via_dense = lbruhat_gen(&mut DenseOracle::new(dense.clone()), &empty, &empty, 8).unwrap();
    assert_eq!(via_sum.expand(), dense);
    assert_eq!(via_sum.pivots(), via_dense.pivots());
}

#[test]
fn sum_and_product_chains() {
    let (a, b, c) = (instance(64, 2, 6), instance(64, 3, 7), instance(64, 1, 8));
    let g = |m: &DenseMatrix, t: usize| sss_from_dense(m, t).unwrap();
    // Results live on blocks of twice the size, so the third operand joins there.
    let ab = sss_mul(&g(&a, 3), &g(&b, 3)).unwrap();
    assert_eq!(ab.block_size(), 6);
    let abc = sss_mul(&ab, &g(&c, 6)).unwrap();
    assert_eq!(sss_expand(&abc), a.mul(&b).unwrap().mul(&c).unwrap());
    let total = sss_add(&sss_add(&g(&a, 3), &g(&b, 3)).unwrap(), &g(&c, 6)).unwrap();
    assert_eq!(sss_expand(&total), a.add(&b).unwrap().add(&c).unwrap());
    // A + (-A) collapses to the diagonal-free zero.
    let ba = bruhat_from_dense(&a).unwrap();
    let zero = bruhat_add(&ba, &ba.neg()).unwrap();
    assert_eq!(zero.lower.rank() + zero.upper.rank(), 0);
    assert!(bruhat_expand(&zero).is_zero());
}

#[test]
fn sum_cre_of_low_rank_factors() {
    let f = field();
    let mut rng = SeededRng::new(9);
    let x = DenseMatrix::random(30, 2, f, &mut rng).mul(&DenseMatrix::random(2, 25, f, &mut rng)).unwrap();
    let y = DenseMatrix::random(30, 3, f, &mut rng).mul(&DenseMatrix::random(3, 25, f, &mut rng)).unwrap();
    let g = DenseMatrix::random(30, 1, f, &mut rng);
    let h = DenseMatrix::random(25, 1, f, &mut rng);
    let got = bruhat_sum_cre(&cre(&x), &cre(&y), &g, &h).unwrap();
    let want = x.add(&y).unwrap().sub(&g.mul(&h.transpose()).unwrap()).unwrap();
    assert_eq!(got.reconstruct(), want);
    assert_eq!(got.pivot_rows, cre(&want).pivot_rows);
}

#[test]
fn sparse_builds_and_factorizations() {
    let inst = random_qs(field(), 200, 6, Density::Fraction(0.03), &mut SeededRng::new(10)).unwrap();
    let QsMatrix::Sparse(sp) = &inst.matrix else { panic!("expected a sparse instance") };
    let dense = sp.densify();
    assert!(qs_order(&dense).unwrap() <= 6);
    let g = bruhat_from_sparse(sp, &mut SeededRng::new(11)).unwrap();
    assert_eq!(bruhat_expand(&g), dense);
    let b = DenseMatrix::random(200, 3, field(), &mut SeededRng::new(12));
    let zero = DenseMatrix::zeros(200, 3, field());
    assert_eq!(bruhat_apply(&g, &b, &zero).unwrap(), dense.mul(&b).unwrap());

    // CRE of an off-diagonal block through the sketch; its rank is at most the order.
    let block = qsmat::qsgen::SparseMatrix::from_dense(&dense.submatrix(100..200, 0..100));
    let empty = DenseMatrix::zeros(100, 0, field());
    let f = sparse_cre(&block, &empty, &empty, 6, &mut SeededRng::new(13)).unwrap();
    assert_eq!(f.reconstruct(), block.densify());
}

#[test]
fn files_roundtrip_through_text() {
    let inst = random_qs(field(), 80, 3, Density::Fraction(0.05), &mut SeededRng::new(14)).unwrap();
    let text = write_matrix(&inst.matrix);
    assert_eq!(read_matrix(&text).unwrap(), inst.matrix);
    let a = inst.matrix.to_dense();
    let dense_text = write_matrix(&QsMatrix::Dense(a.clone()));
    assert_eq!(read_matrix(&dense_text).unwrap().to_dense(), a);
    for g in [
        Generator::Sss(sss_from_dense(&a, 4).unwrap()),
        Generator::Hss(hss_from_dense(&a, 6).unwrap()),
        Generator::Bruhat(bruhat_from_dense(&a).unwrap()),
    ] {
        let back = read_generator(&g.to_text()).unwrap();
        assert_eq!(back.expand(), a);
        assert_eq!(back.storage(), g.storage());
    }
}

#[test]
fn error_paths() {
    let a = instance(48, 4, 15);
    assert!(matches!(sss_from_dense(&a, 3), Err(Error::OrderExceeded { rank: 4, block: 3, .. })));
    assert!(matches!(hss_from_dense(&a, 5), Err(Error::OrderExceeded { .. })));
    let (g4, g6) = (sss_from_dense(&a, 4).unwrap(), sss_from_dense(&a, 6).unwrap());
    assert!(matches!(sss_add(&g4, &g6), Err(Error::Grid(_))));
    assert!(matches!(sss_mul(&g4, &g6), Err(Error::Grid(_))));
    let rect = DenseMatrix::zeros(4, 5, field());
    assert!(matches!(bruhat_from_dense(&rect), Err(Error::Shape(_))));
    assert!(matches!(sss_from_dense(&rect, 2), Err(Error::Shape(_))));
    let small = bruhat_from_dense(&instance(10, 1, 1)).unwrap();
    assert!(bruhat_add(&small, &bruhat_from_dense(&a).unwrap()).is_err());
    let b = DenseMatrix::zeros(47, 2, field());
    assert!(qsmat::sss::sss_apply(&g4, &b, &DenseMatrix::zeros(48, 2, field())).is_err());
    assert_eq!(hss_expand(&hss_from_dense(&a, 8).unwrap()), a);
}
