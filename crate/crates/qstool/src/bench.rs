//! Benchmark sweep: one timed kernel call per (op, format, s, rep).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use qsmat::bruhat::{bruhat_add, bruhat_from_dense, bruhat_from_sparse};
use qsmat::dense::DenseMatrix;
use qsmat::ffield::{PrimeField, SeededRng};
use qsmat::hss::hss_from_dense;
use qsmat::io::Generator;
use qsmat::qsgen::{random_qs, Density, QsMatrix};
use qsmat::sss::{sss_add, sss_from_dense, sss_mul};

use crate::{write_text, CliResult, Failure, Format};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Op {
    Build,
    Apply,
    Add,
    Mul,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::Build => "build",
            Op::Apply => "apply",
            Op::Add => "add",
            Op::Mul => "mul",
        }
    }

    fn supports(self, format: Format) -> bool {
        match self {
            Op::Build | Op::Apply => true,
            Op::Add => format != Format::Hss,
            Op::Mul => format == Format::Sss,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// n = 1024, s in {8, 16, 32}, 5 reps, v = 32.
    Desk,
    /// n = 3000, s in {50, 100, 200, 400}, 50 reps, v = 500.
    Large,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Profile::Desk)]
    profile: Profile,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<usize>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    ops: Option<Vec<Op>>,
    #[arg(long)]
    reps: Option<usize>,
    /// Columns of the block vector used by apply.
    #[arg(long)]
    v: Option<usize>,
    /// Sparse instances (Bruhat builds through the sparse path).
    #[arg(long)]
    density: Option<f64>,
    #[arg(long, default_value_t = 131071)]
    field_p: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

struct Plan {
    n: usize,
    orders: Vec<usize>,
    formats: Vec<Format>,
    ops: Vec<Op>,
    reps: usize,
    v: usize,
}

impl BenchArgs {
    fn plan(&self) -> Plan {
        let (n, orders, formats, reps, v) = match self.profile {
            Profile::Desk => (1024, vec![8, 16, 32], vec![Format::Sss, Format::Hss, Format::Bruhat], 5, 32),
            Profile::Large => (3000, vec![50, 100, 200, 400], vec![Format::Sss, Format::Bruhat], 50, 500),
        };
        Plan {
            n: self.n.unwrap_or(n),
            orders: self.s.clone().unwrap_or(orders),
            formats: self.format.clone().unwrap_or(formats),
            ops: self.ops.clone().unwrap_or_else(|| vec![Op::Build, Op::Apply]),
            reps: self.reps.unwrap_or(reps),
            v: self.v.unwrap_or(v),
        }
    }
}

/// Seconds around one call, kept strictly positive.
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64().max(1e-9))
}

fn build_timed(format: Format, a: &QsMatrix, s: usize, seed: u64) -> CliResult<(Generator, f64)> {
    let (g, secs) = match (format, a) {
        (Format::Sss, m) => {
            let d = m.to_dense();
            let (g, t) = timed(|| sss_from_dense(&d, s.max(1)));
            (Generator::Sss(g?), t)
        }
        (Format::Hss, m) => {
            let d = m.to_dense();
            let (g, t) = timed(|| hss_from_dense(&d, (2 * s).max(1)));
            (Generator::Hss(g?), t)
        }
        (Format::Bruhat, QsMatrix::Dense(d)) => {
            let (g, t) = timed(|| bruhat_from_dense(d));
            (Generator::Bruhat(g?), t)
        }
        (Format::Bruhat, QsMatrix::Sparse(sp)) => {
            let mut rng = SeededRng::new(seed);
            let (g, t) = timed(|| bruhat_from_sparse(sp, &mut rng));
            (Generator::Bruhat(g?), t)
        }
    };
    Ok((g, secs))
}

/// Block size reported in the `t` column.
fn block_of(g: &Generator) -> usize {
    match g {
        Generator::Sss(g) => g.block_size(),
        Generator::Hss(g) => g.block_size(),
        Generator::Bruhat(g) => g.overlap(),
    }
}

fn run_cell(op: Op, format: Format, plan: &Plan, field: PrimeField, density: Density, s: usize, seed: u64)
    -> CliResult<(f64, usize, usize)> {
    let mut rng = SeededRng::new(seed);
    let a = random_qs(field, plan.n, s, density, &mut rng)?.matrix;
    let (g, build_secs) = build_timed(format, &a, s, seed)?;
    Ok(match op {
        Op::Build => (build_secs, block_of(&g), g.storage()),
        Op::Apply => {
            let b = DenseMatrix::random(plan.n, plan.v, field, &mut rng);
            let c = DenseMatrix::zeros(plan.n, plan.v, field);
            let (out, secs) = timed(|| g.apply(&b, &c));
            out?;
            (secs, block_of(&g), g.storage())
        }
        Op::Add | Op::Mul => {
            let other = random_qs(field, plan.n, s, density, &mut rng)?.matrix;
            let (h, _) = build_timed(format, &other, s, seed.wrapping_add(1))?;
            let (out, secs) = match (&g, &h) {
                (Generator::Sss(x), Generator::Sss(y)) if op == Op::Add => {
                    let (r, t) = timed(|| sss_add(x, y));
                    (Generator::Sss(r?), t)
                }
                (Generator::Sss(x), Generator::Sss(y)) => {
                    let (r, t) = timed(|| sss_mul(x, y));
                    (Generator::Sss(r?), t)
                }
                (Generator::Bruhat(x), Generator::Bruhat(y)) => {
                    let (r, t) = timed(|| bruhat_add(x, y));
                    (Generator::Bruhat(r?), t)
                }
                _ => unreachable!("unsupported cells are rejected up front"),
            };
            (secs, block_of(&out), out.storage())
        }
    })
}

pub fn run(args: BenchArgs) -> CliResult<()> {
    let plan = args.plan();
    let field = PrimeField::new(args.field_p).map_err(|e| Failure::usage(e.to_string()))?;
    if plan.n == 0 || plan.reps == 0 || plan.orders.is_empty() || plan.orders.iter().any(|&s| s == 0 || s > plan.n) {
        return Err(Failure::usage("bench needs n > 0, reps > 0 and orders in 1..=n"));
    }
    if let Some((op, f)) = plan.ops.iter().flat_map(|&op| plan.formats.iter().map(move |&f| (op, f))).find(|(op, f)| !op.supports(*f)) {
        return Err(Failure::usage(format!("{} is not available for {}", op.name(), f.name())));
    }
    let density = match args.density {
        None => Density::Dense,
        Some(d) => Density::Fraction(d),
    };

    let mut csv = String::from("op,format,n,s,t,rep,seconds,storage_elems\n");
    for &op in &plan.ops {
        for &format in &plan.formats {
            for &s in &plan.orders {
                for rep in 0..plan.reps {
                    let seed = args.seed.wrapping_add(rep as u64);
                    let (secs, t, storage) = run_cell(op, format, &plan, field, density, s, seed)?;
                    let _ = writeln!(csv, "{},{},{},{s},{t},{rep},{secs:.9},{storage}", op.name(), format.name(), plan.n);
                }
            }
        }
    }
    write_text(args.csv.as_deref(), &csv)
}
