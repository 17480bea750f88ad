//! Hierarchically semiseparable generators on a uniform binary tree.
//!
//! Level `k` of the tree has `2^k` nodes of `t·2^(K-k)` rows each; the leaves
//! (level `K`) are `t x t`. Inputs are zero-padded to `t·2^K` rows and the
//! expansion is truncated back.
//!
//! For a node `(k, i)` with row basis `U_{k;i}` and column basis `V_{k;i}`:
//! `U_{k-1;p} = [U_{k;2p} R_{k;2p}; U_{k;2p+1} R_{k;2p+1}]`,
//! `V_{k-1;p} = [W_{k;2p} V_{k;2p}, W_{k;2p+1} V_{k;2p+1}]`,
//! and sibling blocks are `U_{k;a} B_{k;a} V_{k;b}`.

use std::collections::HashMap;

use crate::dense::{cre, gemm_add, DenseMatrix};
use crate::error::{Error, Result};
use crate::ffield::PrimeField;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HssGenerator {
    n: usize,
    block: usize,
    depth: usize,
    field: PrimeField,
    pub(crate) d: Vec<DenseMatrix>,
    pub(crate) leaf_u: Vec<DenseMatrix>,
    pub(crate) leaf_v: Vec<DenseMatrix>,
    /// `r[k][i]` for `k = 2..=K`; entries below level 2 are empty.
    pub(crate) r: Vec<Vec<DenseMatrix>>,
    pub(crate) w: Vec<Vec<DenseMatrix>>,
    /// `b[k][i]` for `k = 1..=K`; `b[0]` is empty.
    pub(crate) b: Vec<Vec<DenseMatrix>>,
}

/// Depth used for an `n x n` matrix on leaves of `t`.
pub fn hss_depth(n: usize, t: usize) -> usize {
    let leaves = n.div_ceil(t).max(2);
    leaves.next_power_of_two().trailing_zeros() as usize
}

impl HssGenerator {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn padded_dim(&self) -> usize {
        self.block << self.depth
    }

    /// Row rank of every node per level, `1..=K` (index 0 is the empty root level).
    pub fn row_ranks(&self) -> Vec<Vec<usize>> {
        (0..=self.depth)
            .map(|k| if k == 0 { Vec::new() } else { self.b[k].iter().map(|m| m.rows()).collect() })
            .collect()
    }

    /// Column rank of every node per level.
    pub fn col_ranks(&self) -> Vec<Vec<usize>> {
        (0..=self.depth)
            .map(|k| {
                if k == 0 {
                    return Vec::new();
                }
                // B_{k;a} spans the columns of the sibling of a.
                (0..1usize << k).map(|i| self.b[k][i ^ 1].cols()).collect()
            })
            .collect()
    }

    pub fn max_inner_rank(&self) -> usize {
        self.row_ranks().iter().chain(self.col_ranks().iter()).flatten().copied().max().unwrap_or(0)
    }

    pub fn storage(&self) -> usize {
        let leaves: usize = [&self.d, &self.leaf_u, &self.leaf_v]
            .iter()
            .flat_map(|f| f.iter())
            .map(DenseMatrix::storage)
            .sum();
        let tree: usize = [&self.r, &self.w, &self.b]
            .iter()
            .flat_map(|f| f.iter().flatten())
            .map(DenseMatrix::storage)
            .sum();
        leaves + tree
    }

    /// Assemble from stored blocks, checking every shape against the tree.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        n: usize,
        block: usize,
        depth: usize,
        field: PrimeField,
        d: Vec<DenseMatrix>,
        leaf_u: Vec<DenseMatrix>,
        leaf_v: Vec<DenseMatrix>,
        r: Vec<Vec<DenseMatrix>>,
        w: Vec<Vec<DenseMatrix>>,
        b: Vec<Vec<DenseMatrix>>,
    ) -> Result<Self> {
        let bad = |what: &str| Err(Error::Shape(format!("HSS {what} inconsistent with the tree")));
        if block == 0 || depth == 0 || block << depth < n {
            return bad("grid");
        }
        let leaves = 1usize << depth;
        if d.len() != leaves || leaf_u.len() != leaves || leaf_v.len() != leaves {
            return bad("leaf count");
        }
        if r.len() != depth + 1 || w.len() != depth + 1 || b.len() != depth + 1 {
            return bad("level count");
        }
        for i in 0..leaves {
            if d[i].shape() != (block, block) || leaf_u[i].rows() != block || leaf_v[i].cols() != block {
                return bad("leaf block");
            }
        }
        // Node ranks per level, read from the B couplings.
        for k in 1..=depth {
            if b[k].len() != 1 << k {
                return bad("coupling count");
            }
        }
        let rows_at = |k: usize, i: usize| b[k][i].rows();
        let cols_at = |k: usize, i: usize| b[k][i ^ 1].cols();
        for i in 0..leaves {
            if leaf_u[i].cols() != rows_at(depth, i) || leaf_v[i].rows() != cols_at(depth, i) {
                return bad("leaf basis");
            }
        }
        for k in 0..=depth {
            let expect = if k >= 2 { 1 << k } else { 0 };
            if r[k].len() != expect || w[k].len() != expect {
                return bad("transition count");
            }
            for i in 0..expect {
                if r[k][i].shape() != (rows_at(k, i), rows_at(k - 1, i / 2)) {
                    return bad("R transition");
                }
                if w[k][i].shape() != (cols_at(k - 1, i / 2), cols_at(k, i)) {
                    return bad("W transition");
                }
            }
        }
        Ok(HssGenerator { n, block, depth, field, d, leaf_u, leaf_v, r, w, b })
    }

    /// Row basis `U_{k;i}` and column basis `V_{k;i}` of every node, explicit.
    fn bases(&self) -> (Vec<Vec<DenseMatrix>>, Vec<Vec<DenseMatrix>>) {
        let depth = self.depth;
        let mut us = vec![Vec::new(); depth + 1];
        let mut vs = vec![Vec::new(); depth + 1];
        us[depth] = self.leaf_u.clone();
        vs[depth] = self.leaf_v.clone();
        for k in (1..depth).rev() {
            for p in 0..1usize << k {
                let (a, b) = (2 * p, 2 * p + 1);
                let ua = us[k + 1][a].mul(&self.r[k + 1][a]).expect("conformal");
                let ub = us[k + 1][b].mul(&self.r[k + 1][b]).expect("conformal");
                us[k].push(DenseMatrix::vstack(&[&ua, &ub]).expect("conformal"));
                let va = self.w[k + 1][a].mul(&vs[k + 1][a]).expect("conformal");
                let vb = self.w[k + 1][b].mul(&vs[k + 1][b]).expect("conformal");
                vs[k].push(DenseMatrix::hstack(&[&va, &vb]).expect("conformal"));
            }
        }
        (us, vs)
    }
}

/// Bottom-up compression: at every level, each node's off-diagonal block row
/// then block column is factored; ranks above `t` are reported.
pub fn hss_from_dense(a: &DenseMatrix, t: usize) -> Result<HssGenerator> {
    if !a.is_square() {
        return Err(Error::Shape(format!("{}x{} is not square", a.rows(), a.cols())));
    }
    if t == 0 || a.rows() == 0 {
        return Err(Error::Param("block size and dimension must be positive".into()));
    }
    let n = a.rows();
    let field = a.field();
    let depth = hss_depth(n, t);
    let leaves = 1usize << depth;
    let n_pad = t * leaves;
    let mut padded = DenseMatrix::zeros(n_pad, n_pad, field);
    padded.set_block(0, 0, a);

    let d = (0..leaves).map(|i| padded.submatrix(i * t..(i + 1) * t, i * t..(i + 1) * t)).collect();
    // h[(i, j)] expresses block (i, j) of the current level in the node bases.
    let mut h: HashMap<(usize, usize), DenseMatrix> = HashMap::new();
    for i in 0..leaves {
        for j in 0..leaves {
            if i != j {
                h.insert((i, j), padded.submatrix(i * t..(i + 1) * t, j * t..(j + 1) * t));
            }
        }
    }
    // Ranks of the nodes one level below the current one.
    let mut child_rows: Vec<usize> = Vec::new();
    let mut child_cols: Vec<usize> = Vec::new();
    let mut r = vec![Vec::new(); depth + 1];
    let mut w = vec![Vec::new(); depth + 1];
    let mut b = vec![Vec::new(); depth + 1];
    let mut leaf_u = Vec::new();
    let mut leaf_v = Vec::new();

    for k in (1..=depth).rev() {
        let nodes = 1usize << k;
        let dims = |children: &[usize]| -> Vec<usize> {
            if k == depth { vec![t; nodes] } else { (0..nodes).map(|i| children[2 * i] + children[2 * i + 1]).collect() }
        };
        let col_dims = dims(&child_cols);
        let exceeded = |i: usize, rank: usize| Error::OrderExceeded { level: k, index: i + 1, rank, block: t };
        let mut row_factors = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let parts: Vec<&DenseMatrix> = (0..nodes).filter(|&j| j != i).map(|j| &h[&(i, j)]).collect();
            let f = cre(&DenseMatrix::hstack(&parts)?);
            if f.rank() > t {
                return Err(exceeded(i, f.rank()));
            }
            let right = f.right_factor();
            let mut c0 = 0;
            for j in (0..nodes).filter(|&j| j != i) {
                h.insert((i, j), right.submatrix(0..f.rank(), c0..c0 + col_dims[j]));
                c0 += col_dims[j];
            }
            row_factors.push(f.c);
        }
        let new_rows: Vec<usize> = row_factors.iter().map(|c| c.cols()).collect();
        let mut col_factors = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let parts: Vec<&DenseMatrix> = (0..nodes).filter(|&i| i != j).map(|i| &h[&(i, j)]).collect();
            let f = cre(&DenseMatrix::vstack(&parts)?);
            if f.rank() > t {
                return Err(exceeded(j, f.rank()));
            }
            let mut r0 = 0;
            for i in (0..nodes).filter(|&i| i != j) {
                h.insert((i, j), f.c.submatrix(r0..r0 + new_rows[i], 0..f.rank()));
                r0 += new_rows[i];
            }
            col_factors.push(f.right_factor());
        }
        let new_cols: Vec<usize> = col_factors.iter().map(|e| e.rows()).collect();

        if k == depth {
            leaf_u = row_factors;
            leaf_v = col_factors;
        } else {
            // Split each factor between the two children at level k + 1.
            let mut rk = Vec::with_capacity(2 * nodes);
            let mut wk = Vec::with_capacity(2 * nodes);
            for i in 0..nodes {
                let split_r = child_rows[2 * i];
                let c = &row_factors[i];
                rk.push(c.submatrix(0..split_r, 0..c.cols()));
                rk.push(c.submatrix(split_r..c.rows(), 0..c.cols()));
                let split_c = child_cols[2 * i];
                let e = &col_factors[i];
                wk.push(e.submatrix(0..e.rows(), 0..split_c));
                wk.push(e.submatrix(0..e.rows(), split_c..e.cols()));
            }
            r[k + 1] = rk;
            w[k + 1] = wk;
        }
        b[k] = (0..nodes).map(|i| h[&(i, i ^ 1)].clone()).collect();

        // Regroup into the parent level.
        let parents = nodes / 2;
        let mut next = HashMap::new();
        for p in 0..parents {
            for q in (0..parents).filter(|&q| q != p) {
                let top = DenseMatrix::hstack(&[&h[&(2 * p, 2 * q)], &h[&(2 * p, 2 * q + 1)]])?;
                let bottom = DenseMatrix::hstack(&[&h[&(2 * p + 1, 2 * q)], &h[&(2 * p + 1, 2 * q + 1)]])?;
                next.insert((p, q), DenseMatrix::vstack(&[&top, &bottom])?);
            }
        }
        h = next;
        child_rows = new_rows;
        child_cols = new_cols;
    }
    HssGenerator::from_parts(n, t, depth, field, d, leaf_u, leaf_v, r, w, b)
}

pub fn hss_expand(g: &HssGenerator) -> DenseMatrix {
    let t = g.block;
    let n_pad = g.padded_dim();
    let mut out = DenseMatrix::zeros(n_pad, n_pad, g.field);
    for (i, di) in g.d.iter().enumerate() {
        out.set_block(i * t, i * t, di);
    }
    let (us, vs) = g.bases();
    for k in 1..=g.depth {
        let size = n_pad >> k;
        for a in 0..1usize << k {
            let sib = a ^ 1;
            let block = us[k][a].mul(&g.b[k][a]).and_then(|m| m.mul(&vs[k][sib])).expect("conformal");
            out.set_block(a * size, sib * size, &block);
        }
    }
    out.submatrix(0..g.n, 0..g.n)
}

/// `c + expand(g)·b`: up-sweep through `W`, sibling coupling, down-sweep
/// through `R`, then the leaves.
pub fn hss_apply(g: &HssGenerator, b: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    if b.rows() != g.n || c.shape() != (g.n, b.cols()) {
        return Err(Error::Shape(format!(
            "apply {}x{} generator to {}x{} with accumulator {}x{}",
            g.n, g.n, b.rows(), b.cols(), c.rows(), c.cols()
        )));
    }
    let t = g.block;
    let depth = g.depth;
    let leaves = 1usize << depth;
    let v = b.cols();
    let mut bp = DenseMatrix::zeros(g.padded_dim(), v, g.field);
    bp.set_block(0, 0, b);
    let leaf_b: Vec<DenseMatrix> = (0..leaves).map(|i| bp.submatrix(i * t..(i + 1) * t, 0..v)).collect();

    let mut x = vec![Vec::new(); depth + 1];
    x[depth] = (0..leaves).map(|i| g.leaf_v[i].mul(&leaf_b[i])).collect::<Result<Vec<_>>>()?;
    for k in (1..depth).rev() {
        for p in 0..1usize << k {
            let mut acc = g.w[k + 1][2 * p].mul(&x[k + 1][2 * p])?;
            gemm_add(&mut acc, &g.w[k + 1][2 * p + 1], &x[k + 1][2 * p + 1])?;
            x[k].push(acc);
        }
    }
    let mut z: Vec<DenseMatrix> = Vec::new();
    for k in 1..=depth {
        let mut level = Vec::with_capacity(1 << k);
        for a in 0..1usize << k {
            let mut y = g.b[k][a].mul(&x[k][a ^ 1])?;
            if k >= 2 {
                gemm_add(&mut y, &g.r[k][a], &z[a / 2])?;
            }
            level.push(y);
        }
        z = level;
    }
    let mut out = bp;
    for i in 0..leaves {
        let mut ci = g.d[i].mul(&leaf_b[i])?;
        gemm_add(&mut ci, &g.leaf_u[i], &z[i])?;
        out.set_block(i * t, 0, &ci);
    }
    let mut result = out.submatrix(0..g.n, 0..v);
    result.add_assign(c)?;
    Ok(result)
}
