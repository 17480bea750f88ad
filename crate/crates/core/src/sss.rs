//! Sequentially semiseparable generators.
//!
//! Blocks are numbered `0..N` on a uniform grid of size `t` (the last block
//! may be shorter). With `P_i R_{i-1}···R_{j+1} Q_j` below the diagonal and
//! `U_i W_{i+1}···W_{j-1} V_j` above it, block `(i, j)` of the matrix is
//! recovered exactly.
//!
//! Every family is stored for all `N` blocks. `lower_ranks[k]` and
//! `upper_ranks[k]` are the inner dimensions across the boundary in front of
//! block `k`, so both vectors have `N + 1` entries and vanish at the ends;
//! the edge blocks (`P_0`, `Q_{N-1}`, `V_0`, `U_{N-1}`, ...) are
//! zero-dimensional.

use crate::dense::{cre, gemm_add, DenseMatrix};
use crate::error::{Error, Result};
use crate::ffield::PrimeField;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SssGenerator {
    n: usize,
    block: usize,
    field: PrimeField,
    lower_ranks: Vec<usize>,
    upper_ranks: Vec<usize>,
    pub(crate) d: Vec<DenseMatrix>,
    pub(crate) p: Vec<DenseMatrix>,
    pub(crate) r: Vec<DenseMatrix>,
    pub(crate) q: Vec<DenseMatrix>,
    pub(crate) u: Vec<DenseMatrix>,
    pub(crate) w: Vec<DenseMatrix>,
    pub(crate) v: Vec<DenseMatrix>,
}

/// Matrix of `n x n` on blocks of `t`: sizes of each block.
fn grid(n: usize, t: usize) -> Vec<usize> {
    (0..n.div_ceil(t)).map(|i| t.min(n - i * t)).collect()
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &s in sizes {
        acc += s;
        out.push(acc);
    }
    out
}

fn stack2(a: &DenseMatrix, b: &DenseMatrix, horizontal: bool) -> DenseMatrix {
    if horizontal {
        DenseMatrix::hstack(&[a, b]).expect("conformal blocks")
    } else {
        DenseMatrix::vstack(&[a, b]).expect("conformal blocks")
    }
}

fn mul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    a.mul(b).expect("conformal blocks")
}

fn mul_add(c: &DenseMatrix, a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = c.clone();
    gemm_add(&mut out, a, b).expect("conformal blocks");
    out
}

impl SssGenerator {
    /// All off-diagonal families empty, diagonal blocks given.
    pub fn block_diagonal(n: usize, t: usize, d: Vec<DenseMatrix>) -> Result<Self> {
        if t == 0 || n == 0 {
            return Err(Error::Param("block size and dimension must be positive".into()));
        }
        let sizes = grid(n, t);
        if d.len() != sizes.len() || d.iter().zip(&sizes).any(|(b, &s)| b.shape() != (s, s)) {
            return Err(Error::Shape("diagonal blocks do not match the grid".into()));
        }
        let field = d[0].field();
        let nb = sizes.len();
        let ranks = vec![0; nb + 1];
        let lower = |rows: &dyn Fn(usize) -> usize, cols: &dyn Fn(usize) -> usize| -> Vec<DenseMatrix> {
            (0..nb).map(|i| DenseMatrix::zeros(rows(i), cols(i), field)).collect()
        };
        let size = |i: usize| sizes[i];
        let none = |_: usize| 0;
        Ok(SssGenerator {
            n,
            block: t,
            field,
            lower_ranks: ranks.clone(),
            upper_ranks: ranks,
            p: lower(&size, &none),
            r: lower(&none, &none),
            q: lower(&none, &size),
            u: lower(&size, &none),
            w: lower(&none, &none),
            v: lower(&none, &size),
            d,
        })
    }

    pub fn zero(n: usize, t: usize, field: PrimeField) -> Result<Self> {
        let d = grid(n, t.max(1)).into_iter().map(|s| DenseMatrix::zeros(s, s, field)).collect();
        Self::block_diagonal(n, t, d)
    }

    pub fn identity(n: usize, t: usize, field: PrimeField) -> Result<Self> {
        let d = grid(n, t.max(1)).into_iter().map(|s| DenseMatrix::identity(s, field)).collect();
        Self::block_diagonal(n, t, d)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn num_blocks(&self) -> usize {
        self.d.len()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Inner ranks across each boundary, `N + 1` entries with zero ends.
    pub fn lower_ranks(&self) -> &[usize] {
        &self.lower_ranks
    }

    pub fn upper_ranks(&self) -> &[usize] {
        &self.upper_ranks
    }

    pub fn max_inner_rank(&self) -> usize {
        self.lower_ranks.iter().chain(&self.upper_ranks).copied().max().unwrap_or(0)
    }

    fn block_sizes(&self) -> Vec<usize> {
        self.d.iter().map(|b| b.rows()).collect()
    }

    /// Number of stored field elements.
    pub fn storage(&self) -> usize {
        [&self.d, &self.p, &self.r, &self.q, &self.u, &self.w, &self.v]
            .iter()
            .flat_map(|fam| fam.iter())
            .map(DenseMatrix::storage)
            .sum()
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        out.d.iter_mut().for_each(|b| *b = b.neg());
        out.p.iter_mut().for_each(|b| *b = b.neg());
        out.u.iter_mut().for_each(|b| *b = b.neg());
        out
    }

    /// Rebuild the rank vectors from the block shapes and check chaining.
    pub(crate) fn from_parts(n: usize, block: usize, field: PrimeField, parts: [Vec<DenseMatrix>; 7]) -> Result<Self> {
        let [d, p, r, q, u, w, v] = parts;
        let nb = d.len();
        if nb == 0 || [&p, &r, &q, &u, &w, &v].iter().any(|f| f.len() != nb) {
            return Err(Error::Shape("generator families of unequal length".into()));
        }
        let sizes: Vec<usize> = d.iter().map(|b| b.rows()).collect();
        if sizes != grid(n, block) {
            return Err(Error::Shape("diagonal blocks do not match the grid".into()));
        }
        let mut lower_ranks = vec![0; nb + 1];
        let mut upper_ranks = vec![0; nb + 1];
        for i in 0..nb {
            lower_ranks[i + 1] = r[i].rows();
            upper_ranks[i + 1] = w[i].cols();
        }
        let bad = |what: &str, i: usize| Err(Error::Shape(format!("{what} block {i} breaks the chain")));
        for i in 0..nb {
            let b = sizes[i];
            let (l0, l1, u0, u1) = (lower_ranks[i], lower_ranks[i + 1], upper_ranks[i], upper_ranks[i + 1]);
            if d[i].shape() != (b, b) {
                return bad("D", i);
            }
            if p[i].shape() != (b, l0) || r[i].shape() != (l1, l0) || q[i].shape() != (l1, b) {
                return bad("lower", i);
            }
            if u[i].shape() != (b, u1) || w[i].shape() != (u0, u1) || v[i].shape() != (u0, b) {
                return bad("upper", i);
            }
        }
        if lower_ranks[nb] != 0 || upper_ranks[nb] != 0 {
            return Err(Error::Shape("nonzero rank after the last block".into()));
        }
        Ok(SssGenerator { n, block, field, lower_ranks, upper_ranks, d, p, r, q, u, w, v })
    }

    pub(crate) fn families(&self) -> [&Vec<DenseMatrix>; 7] {
        [&self.d, &self.p, &self.r, &self.q, &self.u, &self.w, &self.v]
    }
}

/// Compress a dense matrix block row by block row.
///
/// Each step factors the residual of the previous step stacked with the next
/// off-diagonal chunk; a rank above `t` means the matrix is not `t`-quasiseparable.
pub fn sss_from_dense(a: &DenseMatrix, t: usize) -> Result<SssGenerator> {
    if !a.is_square() {
        return Err(Error::Shape(format!("{}x{} is not square", a.rows(), a.cols())));
    }
    let n = a.rows();
    let field = a.field();
    let mut g = SssGenerator::zero(n, t, field)?;
    let sizes = g.block_sizes();
    let off = offsets(&sizes);
    let nb = sizes.len();
    for i in 0..nb {
        g.d[i] = a.submatrix(off[i]..off[i + 1], off[i]..off[i + 1]);
    }
    let exceeded = |step: usize, rank: usize| Error::OrderExceeded { level: step + 1, index: 0, rank, block: t };

    // Upper: rows so far, expressed through the current right factor.
    let mut residual = DenseMatrix::zeros(0, n - off[1.min(nb)], field);
    for i in 0..nb.saturating_sub(1) {
        let chunk = a.submatrix(off[i]..off[i + 1], off[i + 1]..n);
        let stacked = stack2(&residual, &chunk, false);
        let f = cre(&stacked);
        if f.rank() > t {
            return Err(exceeded(i, f.rank()));
        }
        let left = &f.c;
        let right = f.right_factor();
        let top = residual.rows();
        g.w[i] = left.submatrix(0..top, 0..f.rank());
        g.u[i] = left.submatrix(top..left.rows(), 0..f.rank());
        let next = sizes[i + 1];
        g.v[i + 1] = right.submatrix(0..f.rank(), 0..next);
        residual = right.submatrix(0..f.rank(), next..right.cols());
        g.upper_ranks[i + 1] = f.rank();
    }
    g.w[nb - 1] = DenseMatrix::zeros(g.upper_ranks[nb - 1], 0, field);

    // Lower: the transpose of the same sweep, on block columns.
    let mut residual = DenseMatrix::zeros(n - off[1.min(nb)], 0, field);
    for i in 0..nb.saturating_sub(1) {
        let chunk = a.submatrix(off[i + 1]..n, off[i]..off[i + 1]);
        let stacked = stack2(&residual, &chunk, true);
        let f = cre(&stacked);
        if f.rank() > t {
            return Err(exceeded(i, f.rank()));
        }
        let right = f.right_factor();
        let prev = residual.cols();
        g.r[i] = right.submatrix(0..f.rank(), 0..prev);
        g.q[i] = right.submatrix(0..f.rank(), prev..right.cols());
        let next = sizes[i + 1];
        g.p[i + 1] = f.c.submatrix(0..next, 0..f.rank());
        residual = f.c.submatrix(next..f.c.rows(), 0..f.rank());
        g.lower_ranks[i + 1] = f.rank();
    }
    g.r[nb - 1] = DenseMatrix::zeros(0, g.lower_ranks[nb - 1], field);
    Ok(g)
}

pub fn sss_expand(g: &SssGenerator) -> DenseMatrix {
    let sizes = g.block_sizes();
    let off = offsets(&sizes);
    let nb = sizes.len();
    let mut out = DenseMatrix::zeros(g.n, g.n, g.field);
    for i in 0..nb {
        out.set_block(off[i], off[i], &g.d[i]);
    }
    for j in 0..nb {
        // Lower: walk down block column j carrying R_{i-1}···R_{j+1} Q_j.
        let mut chain = g.q[j].clone();
        for i in j + 1..nb {
            out.set_block(off[i], off[j], &mul(&g.p[i], &chain));
            chain = mul(&g.r[i], &chain);
        }
        // Upper: walk right along block row j carrying U_j W_{j+1}···W_{i-1}.
        let mut chain = g.u[j].clone();
        for i in j + 1..nb {
            out.set_block(off[j], off[i], &mul(&chain, &g.v[i]));
            chain = mul(&chain, &g.w[i]);
        }
    }
    out
}

/// `c + expand(g)·b` through one forward and one backward sweep.
pub fn sss_apply(g: &SssGenerator, b: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    if b.rows() != g.n || c.shape() != (g.n, b.cols()) {
        return Err(Error::Shape(format!(
            "apply {}x{} generator to {}x{} with accumulator {}x{}",
            g.n, g.n, b.rows(), b.cols(), c.rows(), c.cols()
        )));
    }
    let sizes = g.block_sizes();
    let off = offsets(&sizes);
    let nb = sizes.len();
    let v = b.cols();
    let mut out = c.clone();
    let panel = g.block.max(1);
    for c0 in (0..v).step_by(panel) {
        let cols = c0..(c0 + panel).min(v);
        let bi: Vec<DenseMatrix> =
            (0..nb).map(|i| b.submatrix(off[i]..off[i + 1], cols.clone())).collect();
        let mut ci: Vec<DenseMatrix> = (0..nb).map(|i| g.d[i].mul(&bi[i]).expect("conformal")).collect();
        let w = cols.len();

        let mut h = DenseMatrix::zeros(0, w, g.field);
        for i in 0..nb {
            gemm_add(&mut ci[i], &g.p[i], &h)?;
            h = mul_add(&mul(&g.q[i], &bi[i]), &g.r[i], &h);
        }
        let mut acc = DenseMatrix::zeros(0, w, g.field);
        for i in (0..nb).rev() {
            gemm_add(&mut ci[i], &g.u[i], &acc)?;
            acc = mul_add(&mul(&g.v[i], &bi[i]), &g.w[i], &acc);
        }
        for i in 0..nb {
            let mut tile = out.submatrix(off[i]..off[i + 1], cols.clone());
            tile.add_assign(&ci[i])?;
            out.set_block(off[i], c0, &tile);
        }
    }
    Ok(out)
}

fn check_grid(a: &SssGenerator, b: &SssGenerator) -> Result<()> {
    if a.n != b.n || a.block != b.block {
        return Err(Error::Grid(format!(
            "n={} t={} vs n={} t={}",
            a.n, a.block, b.n, b.block
        )));
    }
    if a.field != b.field {
        return Err(Error::Grid("generators over different fields".into()));
    }
    Ok(())
}

/// Concatenated generator of the sum, inner ranks up to `2t`.
pub fn sss_concat(a: &SssGenerator, b: &SssGenerator) -> Result<SssGenerator> {
    check_grid(a, b)?;
    let nb = a.num_blocks();
    let mut parts: [Vec<DenseMatrix>; 7] = Default::default();
    for i in 0..nb {
        parts[0].push(a.d[i].add(&b.d[i])?);
        parts[1].push(stack2(&a.p[i], &b.p[i], true));
        parts[2].push(DenseMatrix::block_diag(&a.r[i], &b.r[i]));
        parts[3].push(stack2(&a.q[i], &b.q[i], false));
        parts[4].push(stack2(&a.u[i], &b.u[i], true));
        parts[5].push(DenseMatrix::block_diag(&a.w[i], &b.w[i]));
        parts[6].push(stack2(&a.v[i], &b.v[i], false));
    }
    SssGenerator::from_parts(a.n, a.block, a.field, parts)
}

/// Merge consecutive pairs of blocks: a generator on the grid of size `2t`.
pub fn sss_compress(g: &SssGenerator) -> Result<SssGenerator> {
    let nb = g.num_blocks();
    let field = g.field;
    let mut parts: [Vec<DenseMatrix>; 7] = Default::default();
    for pair in 0..nb.div_ceil(2) {
        let a = 2 * pair;
        let b = a + 1;
        if b >= nb {
            parts[0].push(g.d[a].clone());
            parts[1].push(g.p[a].clone());
            parts[2].push(g.r[a].clone());
            parts[3].push(g.q[a].clone());
            parts[4].push(g.u[a].clone());
            parts[5].push(g.w[a].clone());
            parts[6].push(g.v[a].clone());
            continue;
        }
        let (sa, sb) = (g.d[a].rows(), g.d[b].rows());
        let mut d = DenseMatrix::zeros(sa + sb, sa + sb, field);
        d.set_block(0, 0, &g.d[a]);
        d.set_block(0, sa, &mul(&g.u[a], &g.v[b]));
        d.set_block(sa, 0, &mul(&g.p[b], &g.q[a]));
        d.set_block(sa, sa, &g.d[b]);
        parts[0].push(d);
        parts[1].push(stack2(&g.p[a], &mul(&g.p[b], &g.r[a]), false));
        parts[2].push(mul(&g.r[b], &g.r[a]));
        parts[3].push(stack2(&mul(&g.r[b], &g.q[a]), &g.q[b], true));
        parts[4].push(stack2(&mul(&g.u[a], &g.w[b]), &g.u[b], false));
        parts[5].push(mul(&g.w[a], &g.w[b]));
        parts[6].push(stack2(&g.v[a], &mul(&g.w[a], &g.v[b]), true));
    }
    SssGenerator::from_parts(g.n, 2 * g.block, field, parts)
}

/// Sum of two generators on the same grid; the result lives on blocks of `2t`.
pub fn sss_add(a: &SssGenerator, b: &SssGenerator) -> Result<SssGenerator> {
    sss_compress(&sss_concat(a, b)?)
}

/// Product of two generators on the same grid, on blocks of `2t`.
///
/// A forward sweep accumulates the lower-times-upper interactions, a
/// backward sweep the upper-times-lower ones; each is cached once per step.
pub fn sss_mul(a: &SssGenerator, b: &SssGenerator) -> Result<SssGenerator> {
    check_grid(a, b)?;
    let nb = a.num_blocks();
    let field = a.field;
    let mut parts: [Vec<DenseMatrix>; 7] = Default::default();
    let [dd, pp, rr, qq, uu, ww, vv] = &mut parts;
    // Placeholders for the backward pass.
    dd.resize(nb, DenseMatrix::zeros(0, 0, field));
    pp.resize(nb, DenseMatrix::zeros(0, 0, field));
    vv.resize(nb, DenseMatrix::zeros(0, 0, field));
    let mut s_cache = Vec::with_capacity(nb);

    let mut acc = DenseMatrix::zeros(a.lower_ranks[0], b.upper_ranks[0], field);
    for i in 0..nb {
        let t_fwd = mul(&a.r[i], &acc);
        let s = mul(&a.p[i], &acc);
        qq.push(stack2(&b.q[i], &mul_add(&mul(&a.q[i], &b.d[i]), &t_fwd, &b.v[i]), false));
        let mut r = DenseMatrix::zeros(b.r[i].rows() + a.r[i].rows(), b.r[i].cols() + a.r[i].cols(), field);
        r.set_block(0, 0, &b.r[i]);
        r.set_block(b.r[i].rows(), 0, &mul(&a.q[i], &b.p[i]));
        r.set_block(b.r[i].rows(), b.r[i].cols(), &a.r[i]);
        rr.push(r);
        uu.push(stack2(&a.u[i], &mul_add(&mul(&a.d[i], &b.u[i]), &s, &b.w[i]), true));
        let mut w = DenseMatrix::zeros(a.w[i].rows() + b.w[i].rows(), a.w[i].cols() + b.w[i].cols(), field);
        w.set_block(0, 0, &a.w[i]);
        w.set_block(0, a.w[i].cols(), &mul(&a.v[i], &b.u[i]));
        w.set_block(a.w[i].rows(), a.w[i].cols(), &b.w[i]);
        ww.push(w);
        s_cache.push(s);
        acc = mul_add(&mul(&a.q[i], &b.u[i]), &t_fwd, &b.w[i]);
    }

    let mut acc = DenseMatrix::zeros(a.upper_ranks[nb], b.lower_ranks[nb], field);
    for i in (0..nb).rev() {
        let t_bwd = mul(&a.u[i], &acc);
        let mut d = mul_add(&mul(&a.d[i], &b.d[i]), &s_cache[i], &b.v[i]);
        gemm_add(&mut d, &t_bwd, &b.q[i])?;
        dd[i] = d;
        pp[i] = stack2(&mul_add(&mul(&a.d[i], &b.p[i]), &t_bwd, &b.r[i]), &a.p[i], true);
        let t_up = mul(&a.w[i], &acc);
        vv[i] = stack2(&mul_add(&mul(&a.v[i], &b.d[i]), &t_up, &b.q[i]), &b.v[i], false);
        acc = mul_add(&mul(&a.v[i], &b.p[i]), &t_up, &b.r[i]);
    }
    let wide = SssGenerator::from_parts(a.n, a.block, field, parts)?;
    sss_compress(&wide)
}
