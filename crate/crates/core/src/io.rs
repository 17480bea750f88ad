//! Text formats for matrices and generators.
//!
//! Dense: `m n p`, then `m` lines of `n` residues. Sparse: `m n p nnz`, then
//! `i j v` lines (1-based, sorted). Generators start with a tag line
//! (`SSS`, `HSS`, `BRU`) and list their blocks as `rows cols` followed by
//! one line per row; blocks with no entries have no residue lines.
//! Readers only split on whitespace, writers emit the canonical layout.

use std::fmt::Write as _;

use crate::bruhat::{BruhatGenerator, BruhatTriple};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::ffield::{FieldElement, PrimeField};
use crate::hss::HssGenerator;
use crate::qsgen::{QsMatrix, SparseMatrix};
use crate::sss::SssGenerator;

/// A generator of any of the three formats.
#[derive(Clone, Debug)]
pub enum Generator {
    Sss(SssGenerator),
    Hss(HssGenerator),
    Bruhat(BruhatGenerator),
}

impl Generator {
    pub fn dim(&self) -> usize {
        match self {
            Generator::Sss(g) => g.dim(),
            Generator::Hss(g) => g.dim(),
            Generator::Bruhat(g) => g.dim(),
        }
    }

    pub fn field(&self) -> PrimeField {
        match self {
            Generator::Sss(g) => g.field(),
            Generator::Hss(g) => g.field(),
            Generator::Bruhat(g) => g.field(),
        }
    }

    pub fn storage(&self) -> usize {
        match self {
            Generator::Sss(g) => g.storage(),
            Generator::Hss(g) => g.storage(),
            Generator::Bruhat(g) => g.storage(),
        }
    }

    pub fn expand(&self) -> DenseMatrix {
        match self {
            Generator::Sss(g) => crate::sss::sss_expand(g),
            Generator::Hss(g) => crate::hss::hss_expand(g),
            Generator::Bruhat(g) => crate::bruhat::bruhat_expand(g),
        }
    }

    /// `c + expand(self)·b`.
    pub fn apply(&self, b: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Generator::Sss(g) => crate::sss::sss_apply(g, b, c),
            Generator::Hss(g) => crate::hss::hss_apply(g, b, c),
            Generator::Bruhat(g) => crate::bruhat::bruhat_apply(g, b, c),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Generator::Sss(g) => write_sss(g),
            Generator::Hss(g) => write_hss(g),
            Generator::Bruhat(g) => write_bruhat(g),
        }
    }
}

struct Tokens<'a> {
    inner: std::str::SplitAsciiWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens { inner: text.split_ascii_whitespace() }
    }

    fn word(&mut self, what: &str) -> Result<&'a str> {
        self.inner.next().ok_or_else(|| Error::Parse(format!("missing {what}")))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let w = self.word(what)?;
        w.parse().map_err(|_| Error::Parse(format!("bad {what}: {w:?}")))
    }

    fn field(&mut self) -> Result<PrimeField> {
        let p = self.number("modulus")?;
        let p = u32::try_from(p).map_err(|_| Error::Parse(format!("modulus {p} too large")))?;
        PrimeField::new(p).map_err(|e| Error::Parse(e.to_string()))
    }

    fn residue(&mut self, field: &PrimeField) -> Result<FieldElement> {
        let w = self.word("residue")?;
        let v: u64 = w.parse().map_err(|_| Error::Parse(format!("bad residue {w:?}")))?;
        field.checked(v).map_err(|_| Error::Parse(format!("residue {v} not below {}", field.modulus())))
    }

    fn tag(&mut self, want: &str) -> Result<()> {
        let w = self.word("format tag")?;
        if w != want {
            return Err(Error::Parse(format!("expected {want}, found {w:?}")));
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        match self.inner.next() {
            Some(w) => Err(Error::Parse(format!("trailing data starting at {w:?}"))),
            None => Ok(()),
        }
    }

    /// `rows cols` followed by row-major residues.
    fn block(&mut self, field: &PrimeField) -> Result<DenseMatrix> {
        let rows = self.number("block rows")?;
        let cols = self.number("block cols")?;
        let data = (0..rows * cols).map(|_| self.residue(field)).collect::<Result<Vec<_>>>()?;
        Ok(DenseMatrix::from_vec(rows, cols, *field, data))
    }

    fn block_of(&mut self, field: &PrimeField, shape: (usize, usize), what: &str) -> Result<DenseMatrix> {
        let b = self.block(field)?;
        if b.shape() != shape {
            return Err(Error::Parse(format!("{what} is {:?}, expected {shape:?}", b.shape())));
        }
        Ok(b)
    }
}

fn push_row(out: &mut String, vals: impl IntoIterator<Item = impl std::fmt::Display>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

fn push_rows(out: &mut String, a: &DenseMatrix) {
    if a.cols() == 0 {
        return;
    }
    for i in 0..a.rows() {
        push_row(out, a.row(i));
    }
}

fn push_block(out: &mut String, a: &DenseMatrix) {
    let _ = writeln!(out, "{} {}", a.rows(), a.cols());
    push_rows(out, a);
}

pub fn write_dense(a: &DenseMatrix) -> String {
    let mut out = format!("{} {} {}\n", a.rows(), a.cols(), a.field().modulus());
    push_rows(&mut out, a);
    out
}

pub fn read_dense(text: &str) -> Result<DenseMatrix> {
    let mut tok = Tokens::new(text);
    let rows = tok.number("row count")?;
    let cols = tok.number("column count")?;
    let field = tok.field()?;
    let data = (0..rows * cols).map(|_| tok.residue(&field)).collect::<Result<Vec<_>>>()?;
    tok.finish()?;
    Ok(DenseMatrix::from_vec(rows, cols, field, data))
}

pub fn write_sparse(a: &SparseMatrix) -> String {
    let mut out = format!("{} {} {} {}\n", a.rows(), a.cols(), a.field().modulus(), a.nnz());
    for (i, j, v) in a.triples() {
        let _ = writeln!(out, "{i} {j} {v}");
    }
    out
}

pub fn read_sparse(text: &str) -> Result<SparseMatrix> {
    let mut tok = Tokens::new(text);
    let rows = tok.number("row count")?;
    let cols = tok.number("column count")?;
    let field = tok.field()?;
    let nnz = tok.number("entry count")?;
    let mut triples = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let i = tok.number("row index")?;
        let j = tok.number("column index")?;
        triples.push((i, j, tok.residue(&field)?));
    }
    tok.finish()?;
    if triples.windows(2).any(|w| (w[0].0, w[0].1) >= (w[1].0, w[1].1)) {
        return Err(Error::Parse("entries not sorted by (row, column)".into()));
    }
    SparseMatrix::from_triples(rows, cols, field, triples).map_err(|e| Error::Parse(e.to_string()))
}

/// Dense or sparse, told apart by the length of the header line.
pub fn read_matrix(text: &str) -> Result<QsMatrix> {
    let header = text.lines().next().ok_or_else(|| Error::Parse("empty input".into()))?;
    match header.split_ascii_whitespace().count() {
        3 => read_dense(text).map(QsMatrix::Dense),
        4 => read_sparse(text).map(QsMatrix::Sparse),
        k => Err(Error::Parse(format!("header has {k} fields"))),
    }
}

pub fn write_matrix(a: &QsMatrix) -> String {
    match a {
        QsMatrix::Dense(d) => write_dense(d),
        QsMatrix::Sparse(s) => write_sparse(s),
    }
}

pub fn write_sss(g: &SssGenerator) -> String {
    let nb = g.num_blocks();
    let mut out = format!("SSS {} {} {} {}\n", g.dim(), g.block_size(), g.field().modulus(), nb);
    for i in 1..nb {
        let _ = writeln!(out, "{} {}", g.lower_ranks()[i], g.upper_ranks()[i]);
    }
    let [d, p, r, q, u, w, v] = g.families();
    let inner = 1..nb.saturating_sub(1).max(1);
    for b in d.iter().chain(&p[1..]).chain(&r[inner.clone()]).chain(&q[..nb - 1]) {
        push_block(&mut out, b);
    }
    for b in u[..nb - 1].iter().chain(&w[inner]).chain(&v[1..]) {
        push_block(&mut out, b);
    }
    out
}

pub fn read_sss(text: &str) -> Result<SssGenerator> {
    let mut tok = Tokens::new(text);
    tok.tag("SSS")?;
    let n = tok.number("dimension")?;
    let t = tok.number("block size")?;
    let field = tok.field()?;
    let nb = tok.number("block count")?;
    if t == 0 || nb == 0 || nb != n.div_ceil(t) {
        return Err(Error::Parse(format!("{nb} blocks of {t} for dimension {n}")));
    }
    let sizes: Vec<usize> = (0..nb).map(|i| t.min(n - i * t)).collect();
    let mut lr = vec![0; nb + 1];
    let mut ur = vec![0; nb + 1];
    for i in 1..nb {
        lr[i] = tok.number("lower rank")?;
        ur[i] = tok.number("upper rank")?;
    }
    let zero = |r, c| DenseMatrix::zeros(r, c, field);
    let mut d = Vec::with_capacity(nb);
    for (i, &b) in sizes.iter().enumerate() {
        d.push(tok.block_of(&field, (b, b), &format!("D block {}", i + 1))?);
    }
    let mut p = vec![zero(sizes[0], 0)];
    for i in 1..nb {
        p.push(tok.block_of(&field, (sizes[i], lr[i]), "P block")?);
    }
    let mut r = vec![zero(lr[1], 0)];
    for i in 1..nb.saturating_sub(1) {
        r.push(tok.block_of(&field, (lr[i + 1], lr[i]), "R block")?);
    }
    if nb > 1 {
        r.push(zero(0, lr[nb - 1]));
    }
    let mut q = Vec::with_capacity(nb);
    for i in 0..nb - 1 {
        q.push(tok.block_of(&field, (lr[i + 1], sizes[i]), "Q block")?);
    }
    q.push(zero(0, sizes[nb - 1]));
    let mut u = Vec::with_capacity(nb);
    for i in 0..nb - 1 {
        u.push(tok.block_of(&field, (sizes[i], ur[i + 1]), "U block")?);
    }
    u.push(zero(sizes[nb - 1], 0));
    let mut w = vec![zero(0, ur[1])];
    for i in 1..nb.saturating_sub(1) {
        w.push(tok.block_of(&field, (ur[i], ur[i + 1]), "W block")?);
    }
    if nb > 1 {
        w.push(zero(ur[nb - 1], 0));
    }
    let mut v = vec![zero(0, sizes[0])];
    for i in 1..nb {
        v.push(tok.block_of(&field, (ur[i], sizes[i]), "V block")?);
    }
    tok.finish()?;
    SssGenerator::from_parts(n, t, field, [d, p, r, q, u, w, v]).map_err(|e| Error::Parse(e.to_string()))
}

/// Levels `1..=K`: one line per level with `row col` ranks of every node.
pub fn write_hss(g: &HssGenerator) -> String {
    let depth = g.depth();
    let mut out = format!("HSS {} {} {} {}\n", g.dim(), g.block_size(), g.field().modulus(), depth);
    let (rows, cols) = (g.row_ranks(), g.col_ranks());
    for k in 1..=depth {
        push_row(&mut out, rows[k].iter().zip(&cols[k]).flat_map(|(a, b)| [a, b]));
    }
    for b in g.d.iter().chain(&g.leaf_u).chain(&g.leaf_v) {
        push_block(&mut out, b);
    }
    for k in 2..=depth {
        for b in g.r[k].iter().chain(&g.w[k]) {
            push_block(&mut out, b);
        }
    }
    for k in 1..=depth {
        for b in &g.b[k] {
            push_block(&mut out, b);
        }
    }
    out
}

pub fn read_hss(text: &str) -> Result<HssGenerator> {
    let mut tok = Tokens::new(text);
    tok.tag("HSS")?;
    let n = tok.number("dimension")?;
    let t = tok.number("block size")?;
    let field = tok.field()?;
    let depth = tok.number("depth")?;
    if t == 0 || depth == 0 || depth > 30 || t << depth < n {
        return Err(Error::Parse(format!("depth {depth} with leaves of {t} cannot hold {n}")));
    }
    let mut rows = vec![Vec::new(); depth + 1];
    let mut cols = vec![Vec::new(); depth + 1];
    for k in 1..=depth {
        for _ in 0..1usize << k {
            rows[k].push(tok.number("row rank")?);
            cols[k].push(tok.number("column rank")?);
        }
    }
    let leaves = 1usize << depth;
    let blocks = |count: usize, tok: &mut Tokens| (0..count).map(|_| tok.block(&field)).collect::<Result<Vec<_>>>();
    let d = blocks(leaves, &mut tok)?;
    let leaf_u = blocks(leaves, &mut tok)?;
    let leaf_v = blocks(leaves, &mut tok)?;
    let mut r = vec![Vec::new(); depth + 1];
    let mut w = vec![Vec::new(); depth + 1];
    for k in 2..=depth {
        r[k] = blocks(1 << k, &mut tok)?;
        w[k] = blocks(1 << k, &mut tok)?;
    }
    let mut b = vec![Vec::new(); depth + 1];
    for (k, level) in b.iter_mut().enumerate().skip(1) {
        *level = blocks(1 << k, &mut tok)?;
    }
    tok.finish()?;
    let g = HssGenerator::from_parts(n, t, depth, field, d, leaf_u, leaf_v, r, w, b)
        .map_err(|e| Error::Parse(e.to_string()))?;
    if g.row_ranks() != rows || g.col_ranks() != cols {
        return Err(Error::Parse("rank lines disagree with the blocks".into()));
    }
    Ok(g)
}

fn push_triple(out: &mut String, t: &BruhatTriple) {
    push_block(out, &t.c_matrix());
    let u = t.rank();
    let _ = writeln!(out, "{u} {u}");
    if u > 0 {
        push_row(out, t.perm().iter().map(|l| l + 1));
    }
    push_block(out, &t.e_matrix());
}

/// Echelon factors are written in full; `R` as the 1-based index of the `E`
/// row paired with each column of `C`.
pub fn write_bruhat(g: &BruhatGenerator) -> String {
    let n = g.dim();
    let mut out = format!(
        "BRU {n} {} {} {} {}\n",
        g.lower.rank(),
        g.upper.rank(),
        g.field().modulus(),
        g.overlap()
    );
    push_row(&mut out, &g.diag);
    push_triple(&mut out, &g.lower);
    push_triple(&mut out, &g.upper);
    out
}

fn read_triple(tok: &mut Tokens, field: &PrimeField, n: usize, u: usize) -> Result<BruhatTriple> {
    let c = tok.block_of(field, (n, u), "C factor")?;
    if (tok.number("permutation size")?, tok.number("permutation size")?) != (u, u) {
        return Err(Error::Parse(format!("permutation is not {u}x{u}")));
    }
    let mut perm = Vec::with_capacity(u);
    for _ in 0..u {
        let l = tok.number("permutation index")?;
        perm.push(l.checked_sub(1).ok_or_else(|| Error::Parse("permutation index 0".into()))?);
    }
    let e = tok.block_of(field, (u, n), "E factor")?;
    BruhatTriple::from_factors(&c, &perm, &e).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_bruhat(text: &str) -> Result<BruhatGenerator> {
    let mut tok = Tokens::new(text);
    tok.tag("BRU")?;
    let n = tok.number("dimension")?;
    let lower = tok.number("lower rank")?;
    let upper = tok.number("upper rank")?;
    let field = tok.field()?;
    let overlap = tok.number("overlap")?;
    let diag = (0..n).map(|_| tok.residue(&field)).collect::<Result<Vec<_>>>()?;
    let lo = read_triple(&mut tok, &field, n, lower)?;
    let up = read_triple(&mut tok, &field, n, upper)?;
    tok.finish()?;
    let g = BruhatGenerator::new(diag, lo, up).map_err(|e| Error::Parse(e.to_string()))?;
    if g.overlap() != overlap {
        return Err(Error::Parse(format!("header overlap {overlap}, factors give {}", g.overlap())));
    }
    Ok(g)
}

/// Any generator, dispatched on its tag.
pub fn read_generator(text: &str) -> Result<Generator> {
    match text.split_ascii_whitespace().next() {
        Some("SSS") => read_sss(text).map(Generator::Sss),
        Some("HSS") => read_hss(text).map(Generator::Hss),
        Some("BRU") => read_bruhat(text).map(Generator::Bruhat),
        Some(w) => Err(Error::Parse(format!("unknown generator tag {w:?}"))),
        None => Err(Error::Parse("empty input".into())),
    }
}
