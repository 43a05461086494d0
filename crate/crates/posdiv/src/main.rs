use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use posdiv_core::dyadic::PrecisionPolicy;
use posdiv_core::fields::quadratic_field;
use posdiv_core::pipeline::{AnalysisOptions, K2Data};

use posdiv::batch::{run_batch, run_field};
use posdiv::filter::Filter;
use posdiv::ingest::load_field;
use posdiv::report::{exit, AnalysisReport, Format, Renderer, RunError};

#[derive(Parser)]
#[command(name = "posdiv", version, about = "Positive divisor classes and wild kernel 2-ranks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse one field.
    Analyze(AnalyzeArgs),
    /// Analyse every quadratic field in a range of fundamental discriminants.
    Batch(BatchArgs),
}

#[derive(Args)]
struct Common {
    /// Initial working precision in bits.
    #[arg(long, env = "POSDIV_PRECISION", value_name = "BITS")]
    precision: Option<u32>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Fundamental discriminant of a quadratic field.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "field", required_unless_present = "field")]
    disc: Option<i64>,
    /// Field file in posdiv-field/1 format.
    #[arg(long, value_name = "PATH")]
    field: Option<PathBuf>,
    /// Check the field data and the sign and degree identities first.
    #[arg(long)]
    verify: bool,
    /// Invariant factors of K2 O_F, e.g. "2,12".
    #[arg(long, value_name = "LIST", requires = "index")]
    k2: Option<String>,
    /// Index of the wild kernel in K2 O_F.
    #[arg(long, value_name = "N", requires = "k2")]
    index: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    range: Vec<i64>,
    /// Comparisons on p, pe, rk2, e.g. "pe>=1".
    #[arg(long, value_name = "EXPR")]
    filter: Option<Filter>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    common: Common,
}

fn options(common: &Common) -> Result<AnalysisOptions, String> {
    let mut policy = PrecisionPolicy::default();
    if let Some(bits) = common.precision {
        policy = PrecisionPolicy::new(bits, policy.step, policy.stable).map_err(|e| e.to_string())?;
    }
    Ok(AnalysisOptions { policy, ..Default::default() })
}

fn parse_k2(list: &str) -> Result<Vec<u64>, String> {
    list.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u64>().ok().filter(|&x| x > 0).ok_or_else(|| format!("bad K2 order {s:?}")))
        .collect()
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("posdiv: {msg}");
    ExitCode::from(exit::USAGE as u8)
}

fn analyze(args: AnalyzeArgs) -> ExitCode {
    let mut opts = match options(&args.common) {
        Ok(o) => o,
        Err(e) => return usage(&e),
    };
    if let (Some(list), Some(index)) = (&args.k2, args.index) {
        match parse_k2(list) {
            Ok(orders) => opts.k2 = Some(K2Data { orders, index }),
            Err(e) => return usage(&e),
        }
    }
    let (label, field) = match (&args.disc, &args.field) {
        (Some(d), _) => (d.to_string(), quadratic_field(*d).map_err(RunError::from)),
        (None, Some(path)) => (path.display().to_string(), load_field(path).map_err(RunError::from)),
        (None, None) => return usage("one of --disc or --field is required"),
    };
    let report = field
        .and_then(|f| run_field(&f, &opts, args.verify, true))
        .unwrap_or_else(|e| AnalysisReport::from_error(label, &e));
    print!("{}", Renderer::new(args.common.format).render(&report));
    if let Some(e) = &report.error {
        eprintln!("posdiv: {}", e.message);
    }
    ExitCode::from(report.exit_code() as u8)
}

fn batch(args: BatchArgs) -> ExitCode {
    let opts = match options(&args.common) {
        Ok(o) => o,
        Err(e) => return usage(&e),
    };
    let (lo, hi) = (args.range[0], args.range[1]);
    if lo > hi {
        return usage("empty range");
    }
    let mut renderer = Renderer::new(args.common.format);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut broken = false;
    let result = run_batch(lo, hi, args.filter.as_ref(), args.jobs, &opts, |r| {
        if !broken && out.write_all(renderer.render(r).as_bytes()).and_then(|_| out.flush()).is_err() {
            broken = true;
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => usage(&e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { 0 });
        }
    };
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Batch(b) => batch(b),
    }
}
