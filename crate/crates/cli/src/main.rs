use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use periodpoly_core::bounds::Parity;
use periodpoly_core::period::DEFAULT_CIRCLE_TOLERANCE;
use periodpoly_core::rootfind::DEFAULT_FINDER;
use periodpoly_lmfdb::LmfdbClient;

use periodpoly_cli::commands::{self, BatchArgs, FetchArgs, TextFormat, VerifyArgs};
use periodpoly_cli::record::Format;
use periodpoly_cli::{exit_code_help, CliError, Exit, Resolver, VerifyOptions};

/// Critical L-values, period polynomials and circle-of-symmetry checks for newforms.
///
/// Sources are a coefficient file (*.json), a label from the built-in catalogue
/// or LMFDB, or `synthetic:cosine:K`.
/// Environment: LMFDB_BASE_URL (API root), PERIODPOLY_CACHE (cache directory).
#[derive(Parser)]
#[command(name = "periodpoly", version, after_help = exit_code_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

impl From<ReportFormat> for Format {
    fn from(f: ReportFormat) -> Self {
        match f {
            ReportFormat::Json => Format::Json,
            ReportFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Json,
    Csv,
}

impl From<OutFormat> for TextFormat {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Text => TextFormat::Text,
            OutFormat::Json => TextFormat::Json,
            OutFormat::Csv => TextFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParityArg {
    Even,
    Odd,
    Both,
}

#[derive(clap::Args)]
struct SourceOpts {
    /// Never touch the network; labels must be cached or built in.
    #[arg(long)]
    offline: bool,
    /// Number of coefficients to fetch or build (default: what the error budget needs).
    #[arg(long = "coeffs")]
    coeffs: Option<usize>,
    /// Embedding "c.e" for forms with non-rational coefficients.
    #[arg(long)]
    embedding: Option<String>,
}

#[derive(clap::Args)]
struct CheckOpts {
    /// Allowed |sqrt(N)|rho| - 1|.
    #[arg(long, default_value_t = DEFAULT_CIRCLE_TOLERANCE)]
    tolerance: f64,
    /// Root finder: aberth, durand-kerner or companion.
    #[arg(long, default_value = DEFAULT_FINDER)]
    finder: String,
}

impl CheckOpts {
    fn options(&self) -> VerifyOptions {
        VerifyOptions {
            tolerance: self.tolerance,
            finder: self.finder.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Download a newform from LMFDB into the cache.
    Fetch {
        label: String,
        #[command(flatten)]
        source: SourceOpts,
        /// Also write the coefficient file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline on one form; exit 0 when every root is on the circle.
    Verify {
        source: String,
        #[command(flatten)]
        check: CheckOpts,
        #[command(flatten)]
        opts: SourceOpts,
        /// Machine-readable report path.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
    },
    /// Exceptional-level tables N(m).
    Bounds {
        #[arg(long, value_enum, default_value = "both")]
        parity: ParityArg,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
    },
    /// Root arguments against the predicted angles.
    Equi {
        source: String,
        #[command(flatten)]
        opts: SourceOpts,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
    },
    /// Verify every source listed in a manifest (one per line, # comments).
    Batch {
        manifest: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        check: CheckOpts,
        #[command(flatten)]
        opts: SourceOpts,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
    },
    /// List the built-in catalogue, or write it as coefficient files.
    Corpus {
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Remove cache entries older than the given number of days.
    Purge {
        #[arg(long, default_value_t = 30.0)]
        older_than_days: f64,
    },
}

fn client() -> Result<LmfdbClient, CliError> {
    Ok(LmfdbClient::from_env()?)
}

fn run(cli: Cli) -> Result<Exit, CliError> {
    let mut stdout = std::io::stdout().lock();
    let out: &mut dyn std::io::Write = &mut stdout;
    match cli.command {
        Command::Fetch { label, source, out: path } => {
            let args = FetchArgs {
                label,
                coefficients: source.coeffs,
                offline: source.offline,
                embedding: source.embedding,
                out: path,
            };
            commands::fetch(&client()?, &args, out)
        }
        Command::Verify {
            source,
            check,
            opts,
            report,
            format,
        } => {
            let c = client()?;
            let resolver = resolver(&c, opts);
            let args = VerifyArgs {
                source,
                options: check.options(),
                report,
                format: format.into(),
            };
            commands::verify_cmd(&resolver, &args, out)
        }
        Command::Bounds { parity, format } => {
            let parities: &[Parity] = match parity {
                ParityArg::Even => &[Parity::Even],
                ParityArg::Odd => &[Parity::Odd],
                ParityArg::Both => &[Parity::Even, Parity::Odd],
            };
            commands::bounds_cmd(parities, format.into(), out)
        }
        Command::Equi { source, opts, format } => {
            let c = client()?;
            commands::equi_cmd(&resolver(&c, opts), &source, format.into(), out)
        }
        Command::Batch {
            manifest,
            jobs,
            check,
            opts,
            report,
            format,
        } => {
            let c = client()?;
            let args = BatchArgs {
                manifest,
                jobs,
                options: check.options(),
                report,
                format: format.into(),
            };
            commands::batch(&resolver(&c, opts), &args, out)
        }
        Command::Corpus { write } => commands::corpus(write.as_deref(), out),
        Command::Purge { older_than_days } => {
            if older_than_days.is_nan() || older_than_days < 0.0 {
                return Err(CliError::Usage("--older-than-days must be non-negative".into()));
            }
            let age = Duration::try_from_secs_f64(older_than_days * 86_400.0).unwrap_or(Duration::MAX);
            commands::purge(&client()?, age, out)
        }
    }
}

fn resolver(client: &LmfdbClient, opts: SourceOpts) -> Resolver<'_> {
    Resolver {
        client: Some(client),
        offline: opts.offline,
        coefficients: opts.coeffs,
        embedding: opts.embedding,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Exit::Usage.code()),
            };
        }
    };
    match run(cli) {
        Ok(exit) => ExitCode::from(exit.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit().code())
        }
    }
}
