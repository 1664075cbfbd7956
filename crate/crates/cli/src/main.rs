use std::path::PathBuf;
use std::process::ExitCode;

use advosc_core::analysis::{self, AnalysisConfig, AnalysisError, CriteriaSelection};
use clap::{Parser, Subcommand};

/// Environment variable holding the horizon used when neither the flag nor
/// the config sets one.
const HORIZON_ENV: &str = "ADVOSC_HORIZON";

#[derive(Parser)]
#[command(name = "advosc", version, about = "Oscillation and property-A criteria for third-order advanced equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate criteria for the equation described in a JSON config.
    Analyze(AnalyzeArgs),
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    config: PathBuf,
    /// `all` or a comma-separated list of criterion codes, e.g. `T2_1,T2_11(0.1,0.2)`.
    #[arg(long)]
    criteria: Option<String>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Evaluate closed forms and numerics side by side where both apply.
    #[arg(long)]
    cross_check: bool,
    /// Report path; without one the report is printed as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Plot data path: one row per (criterion, t).
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Splits on commas outside parentheses.
fn split_codes(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    out.into_iter().map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect()
}

fn load(args: &AnalyzeArgs) -> Result<AnalysisConfig, AnalysisError> {
    let mut cfg = AnalysisConfig::from_path(&args.config)?;
    if let Some(c) = &args.criteria {
        cfg.criteria = if c.trim() == "all" {
            CriteriaSelection::default()
        } else {
            CriteriaSelection::List(split_codes(c))
        };
    }
    if args.horizon.is_some() {
        cfg.horizon = args.horizon;
    } else if cfg.horizon.is_none() {
        if let Ok(v) = std::env::var(HORIZON_ENV) {
            let h = v
                .trim()
                .parse::<f64>()
                .map_err(|_| AnalysisError::Config(format!("{HORIZON_ENV}={v:?} is not a number")))?;
            cfg.horizon = Some(h);
        }
    }
    if let Some(t) = args.tol {
        cfg.tolerance = t;
    }
    cfg.cross_check |= args.cross_check;
    if args.report.is_some() {
        cfg.output.report = args.report.clone();
    }
    if args.csv.is_some() {
        cfg.output.csv = args.csv.clone();
    }
    cfg.check()?;
    Ok(cfg)
}

fn analyze(args: &AnalyzeArgs) -> Result<i32, AnalysisError> {
    let cfg = load(args)?;
    let out = analysis::run(&cfg, cfg.output.csv.is_some())?;
    match &cfg.output.report {
        Some(path) => {
            out.report.write_json(path)?;
            println!("{}", out.report);
        }
        None => println!("{}", out.report.to_json()),
    }
    if let Some(path) = &cfg.output.csv {
        analysis::write_csv(&out.series, path)?;
    }
    let code = out.report.exit_code();
    if let Some(e) = &out.report.error {
        eprintln!("error: {e}");
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Analyze(args) => analyze(args).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            e.exit_code()
        }),
    };
    ExitCode::from(code as u8)
}
