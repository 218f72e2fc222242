use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tetsuper::analysis::{convergence_study, Problem, StudyOptions};
use tetsuper::fem::{MIN_ERROR_DEGREE, MIN_LOAD_DEGREE};
use tetsuper::lift::LiftStencil;
use tetsuper::orthogonality::verify_all_lemmas;
use tetsuper::report::{render_convergence, render_lemmas, Format, View};
use tetsuper::system::{LoadModel, DEFAULT_CG_TOL};

/// P2 finite elements on uniform Kuhn meshes: exact local orthogonality
/// checks, superconvergence studies and cubic lifting.
#[derive(Parser)]
#[command(name = "tetsuper", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TETSUPER_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the 80 cubic orthogonality identities in exact arithmetic.
    VerifyLemmas(OutputArgs),
    /// Solve a manufactured problem over a range of grid levels.
    Convergence {
        #[command(flatten)]
        study: StudyArgs,
        /// Skip the cubic lift (third error block).
        #[arg(long)]
        no_lift: bool,
    },
    /// Like `convergence`, reporting only the lifted-solution errors.
    LiftStudy {
        #[command(flatten)]
        study: StudyArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,

    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long, value_enum, default_value_t = ProblemArg::Poly1)]
    problem: ProblemArg,

    /// Grid levels `first:last`; level g has 2^(g-1) cubes per axis.
    #[arg(long, default_value = "2:5", value_parser = parse_levels)]
    levels: (usize, usize),

    /// Relative residual at which CG stops.
    #[arg(long, default_value_t = DEFAULT_CG_TOL, value_parser = parse_tolerance)]
    cg_tol: f64,

    /// CG iteration cap (default: 10 x unknowns + 100).
    #[arg(long)]
    max_iter: Option<usize>,

    /// Quadrature degree for the load vector.
    #[arg(long, default_value_t = MIN_LOAD_DEGREE as u32, value_parser = clap::value_parser!(u32).range(MIN_LOAD_DEGREE as i64..=40))]
    load_degree: u32,

    /// Quadrature degree for error norms.
    #[arg(long, default_value_t = MIN_ERROR_DEGREE as u32, value_parser = clap::value_parser!(u32).range(MIN_ERROR_DEGREE as i64..=40))]
    error_degree: u32,

    /// Right-hand side: `interpolated` uses (I_h f, v), `quadrature` uses (f, v).
    #[arg(long, value_enum, default_value_t = LoadArg::Interpolated)]
    load: LoadArg,

    /// Node set of the per-cube cubic lift.
    #[arg(long, value_enum, default_value_t = StencilArg::Kuhn)]
    stencil: StencilArg,

    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Poly1,
    Trig,
    Poly2,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoadArg {
    Interpolated,
    Quadrature,
}

#[derive(Clone, Copy, ValueEnum)]
enum StencilArg {
    Kuhn,
    Corner,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => Format::Table,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Poly1 => Problem::Poly1,
            ProblemArg::Trig => Problem::Trig,
            ProblemArg::Poly2 => Problem::Poly2,
        }
    }
}

fn parse_levels(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected `first:last`, e.g. 2:5")?;
    let first: usize = a.trim().parse().map_err(|_| format!("bad level `{a}`"))?;
    let last: usize = b.trim().parse().map_err(|_| format!("bad level `{b}`"))?;
    if first == 0 {
        return Err("levels start at 1".into());
    }
    if first > last {
        return Err(format!("level range must ascend, got {first}:{last}"));
    }
    if last > 10 {
        return Err(format!("level {last} exceeds the largest supported level 10"));
    }
    Ok((first, last))
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("bad tolerance `{s}`"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("tolerance must be positive and finite, got {s}"))
    }
}

fn emit(out: &OutputArgs, text: &str) -> io::Result<()> {
    match &out.output {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn study(args: &StudyArgs, lift: bool, view: View) -> Result<bool, Box<dyn std::error::Error>> {
    let options = StudyOptions {
        cg_tol: args.cg_tol,
        max_iter: args.max_iter,
        load_degree: args.load_degree as usize,
        error_degree: args.error_degree as usize,
        load: match args.load {
            LoadArg::Interpolated => LoadModel::Interpolated,
            LoadArg::Quadrature => LoadModel::Quadrature,
        },
        lift,
        stencil: match args.stencil {
            StencilArg::Kuhn => LiftStencil::Kuhn,
            StencilArg::Corner => LiftStencil::Corner,
        },
    };
    let (first, last) = args.levels;
    let report = convergence_study(args.problem.into(), first, last, &options)?;
    emit(&args.out, &render_convergence(&report, args.out.format.into(), view))?;
    for l in report.levels.iter().filter(|l| l.failure.is_some()) {
        eprintln!("level {}: {}", l.level, l.failure.as_deref().unwrap_or_default());
    }
    Ok(report.succeeded())
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::VerifyLemmas(out) => {
            let report = verify_all_lemmas();
            emit(&out, &render_lemmas(&report, out.format.into()))?;
            let bad: Vec<_> = report.nonzero().collect();
            for r in &bad {
                eprintln!("nonzero defect: {} {}", r.kind.name(), tetsuper::exactmath::monomial_name(r.monomial));
            }
            Ok(bad.is_empty())
        }
        Command::Convergence { study: s, no_lift } => study(&s, !no_lift, View::All),
        Command::LiftStudy { study: s } => study(&s, true, View::LiftOnly),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
