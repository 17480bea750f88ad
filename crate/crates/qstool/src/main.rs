//! `qstool`: generate, compress, apply and benchmark quasiseparable matrices.

mod bench;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsmat::bruhat::{bruhat_add, bruhat_from_dense, bruhat_from_sparse};
use qsmat::dense::DenseMatrix;
use qsmat::error::Error;
use qsmat::ffield::{PrimeField, SeededRng};
use qsmat::hss::hss_from_dense;
use qsmat::io::{self, Generator};
use qsmat::qsgen::{qs_order, random_qs, Density, QsMatrix};
use qsmat::sss::{sss_add, sss_from_dense, sss_mul};

#[derive(Parser)]
#[command(name = "qstool", version, about = "Exact quasiseparable matrix formats over GF(p)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Sss,
    Hss,
    Bruhat,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Sss => "sss",
            Format::Hss => "hss",
            Format::Bruhat => "bruhat",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Random matrix of a given quasiseparable order (sparse with --density).
    Gen(GenArgs),
    /// Compress a matrix file into a generator.
    Build(BuildArgs),
    /// Write the dense matrix of a generator.
    Expand(InOut),
    /// Multiply a generator by a dense block vector.
    Apply(BinaryArgs),
    /// Sum of two SSS or two Bruhat generators.
    Add(BinaryArgs),
    /// Product of two SSS generators on the same grid.
    Mul(BinaryArgs),
    /// Print the quasiseparable order of a matrix file.
    Order(InOnly),
    /// Check a generator (or fresh builds) against a matrix exactly.
    Verify(VerifyArgs),
    /// Time construction and products, writing one CSV row per run.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
    /// Fraction of nonzero entries; omitted means a dense instance.
    #[arg(long)]
    density: Option<f64>,
    #[arg(long, default_value_t = 131071)]
    field_p: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long = "in")]
    input: PathBuf,
    /// Block size; defaults to the measured order (twice that for HSS).
    #[arg(long)]
    block: Option<usize>,
    /// Seed of the sparse Bruhat sketches.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InOut {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InOnly {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct BinaryArgs {
    /// Generator file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Second operand: a dense block vector for apply, a generator otherwise.
    #[arg(long)]
    rhs: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Matrix file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Generator to compare with; without it every --format is built and checked.
    #[arg(long)]
    rhs: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Sss, Format::Hss, Format::Bruhat])]
    format: Vec<Format>,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure with its exit status.
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn mismatch(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) => 3,
            Error::OrderExceeded { .. } => 4,
            Error::MonteCarloFailure(_) => 5,
            Error::Param(_) | Error::Shape(_) | Error::Grid(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure { code: 3, message: format!("{}: {e}", path.display()) })
}

pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_matrix(path: &Path) -> CliResult<QsMatrix> {
    Ok(io::read_matrix(&read_text(path)?)?)
}

fn read_generator(path: &Path) -> CliResult<Generator> {
    Ok(io::read_generator(&read_text(path)?)?)
}

fn field(p: u32) -> CliResult<PrimeField> {
    PrimeField::new(p).map_err(|e| Failure::usage(e.to_string()))
}

/// Build `format` from a matrix; `block` defaults to the measured order.
pub fn build(format: Format, a: &QsMatrix, block: Option<usize>, seed: u64) -> CliResult<Generator> {
    let block_for = |dense: &DenseMatrix, factor: usize| -> CliResult<usize> {
        Ok(match block {
            Some(0) => return Err(Failure::usage("--block must be positive")),
            Some(t) => t,
            None => (factor * qs_order(dense)?).max(1),
        })
    };
    Ok(match (format, a) {
        (Format::Bruhat, QsMatrix::Sparse(s)) => Generator::Bruhat(bruhat_from_sparse(s, &mut SeededRng::new(seed))?),
        (Format::Bruhat, QsMatrix::Dense(d)) => Generator::Bruhat(bruhat_from_dense(d)?),
        (Format::Sss, m) => {
            let d = m.to_dense();
            Generator::Sss(sss_from_dense(&d, block_for(&d, 1)?)?)
        }
        (Format::Hss, m) => {
            let d = m.to_dense();
            Generator::Hss(hss_from_dense(&d, block_for(&d, 2)?)?)
        }
    })
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(args) => {
            let f = field(args.field_p)?;
            let density = match args.density {
                None => Density::Dense,
                Some(d) => Density::Fraction(d),
            };
            let inst = random_qs(f, args.n, args.s, density, &mut SeededRng::new(args.seed))?;
            write_text(args.out.as_deref(), &io::write_matrix(&inst.matrix))
        }
        Command::Build(args) => {
            let a = read_matrix(&args.input)?;
            let g = build(args.format, &a, args.block, args.seed)?;
            write_text(args.out.as_deref(), &g.to_text())
        }
        Command::Expand(args) => {
            let g = read_generator(&args.input)?;
            write_text(args.out.as_deref(), &io::write_dense(&g.expand()))
        }
        Command::Apply(args) => {
            let g = read_generator(&args.input)?;
            let b = match read_matrix(&args.rhs)? {
                QsMatrix::Dense(b) => b,
                QsMatrix::Sparse(b) => b.densify(),
            };
            if b.field() != g.field() {
                return Err(Failure::usage("operands over different fields"));
            }
            let c = DenseMatrix::zeros(g.dim(), b.cols(), g.field());
            write_text(args.out.as_deref(), &io::write_dense(&g.apply(&b, &c)?))
        }
        Command::Add(args) => {
            let out = match (read_generator(&args.input)?, read_generator(&args.rhs)?) {
                (Generator::Sss(a), Generator::Sss(b)) => Generator::Sss(sss_add(&a, &b)?),
                (Generator::Bruhat(a), Generator::Bruhat(b)) => Generator::Bruhat(bruhat_add(&a, &b)?),
                _ => return Err(Failure::usage("add takes two SSS or two Bruhat generators")),
            };
            write_text(args.out.as_deref(), &out.to_text())
        }
        Command::Mul(args) => {
            let out = match (read_generator(&args.input)?, read_generator(&args.rhs)?) {
                (Generator::Sss(a), Generator::Sss(b)) => Generator::Sss(sss_mul(&a, &b)?),
                _ => return Err(Failure::usage("mul takes two SSS generators")),
            };
            write_text(args.out.as_deref(), &out.to_text())
        }
        Command::Order(args) => {
            let a = read_matrix(&args.input)?.to_dense();
            println!("{}", qs_order(&a)?);
            Ok(())
        }
        Command::Verify(args) => verify(args),
        Command::Bench(args) => bench::run(args),
    }
}

fn verify(args: VerifyArgs) -> CliResult<()> {
    let a = read_matrix(&args.input)?;
    let dense = a.to_dense();
    let mut checks = Vec::new();
    if let Some(path) = &args.rhs {
        checks.push(("generator".to_string(), read_generator(path)?));
    } else {
        for &format in &args.format {
            checks.push((format.name().to_string(), build(format, &a, args.block, args.seed)?));
        }
    }
    let mut failed = Vec::new();
    for (name, g) in &checks {
        let ok = g.dim() == dense.rows() && g.field() == dense.field() && g.expand() == dense;
        println!("{name}: {}", if ok { "exact" } else { "MISMATCH" });
        if !ok {
            failed.push(name.as_str());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::mismatch(format!("expansion differs for {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qstool: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let code = |e: Error| Failure::from(e).code;
        assert_eq!(code(Error::Parse("x".into())), 3);
        assert_eq!(code(Error::OrderExceeded { level: 1, index: 0, rank: 3, block: 2 }), 4);
        assert_eq!(code(Error::MonteCarloFailure(4)), 5);
        assert_eq!(code(Error::Shape("x".into())), 2);
        assert_eq!(code(Error::ProfileMismatch), 1);
    }
}
