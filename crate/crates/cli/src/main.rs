use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use toric_quant_cli::{
    configure_threads, emit, load_config, normalize_command, parse_ints, parse_list, parse_matrix,
    run, CliError, Format, Overrides,
};

/// Toric Kähler quantization experiments.
///
/// Commands: validate, lattice, weights, potential-validate,
/// legendre-roundtrip, flow-check, polarization-limit, sections-norms,
/// concentrate, full-suite; or the two-word forms `polytope validate|lattice|weights`,
/// `potential validate`, `legendre roundtrip|flow-check`, `polarization limit`,
/// `sections norms`.
#[derive(Parser, Debug)]
#[command(name = "toric-quant", version)]
struct Args {
    /// Command (one or two words) followed by the config file.
    #[arg(required = true, num_args = 2..=3, value_name = "COMMAND... CONFIG")]
    words: Vec<String>,

    /// Comma-separated t values.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,

    /// Lattice point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,

    /// Weight expression in x1..xn, e.g. "x2" or "1 + x1^2".
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,

    /// Quadrature points per axis (at least 8).
    #[arg(long)]
    resolution: Option<usize>,

    /// Number of sample points for polarization-limit.
    #[arg(long)]
    points: Option<usize>,

    /// Projection rows, e.g. "1,0" or "1,0,0;0,1,0".
    #[arg(long, allow_hyphen_values = true)]
    proj: Option<String>,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, default_value = "json", value_parser = ["json", "csv", "svg"])]
    format: String,

    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match real_main(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}

fn real_main(args: &Args) -> Result<bool, CliError> {
    configure_threads()?;
    let (command, used) = normalize_command(&args.words)?;
    if args.words.len() != used + 1 {
        return Err(CliError::new(
            "E_USAGE",
            "expected exactly one config path after the command",
        ));
    }
    let path = PathBuf::from(&args.words[used]);
    let format: Format = args.format.parse()?;
    let overrides = Overrides {
        t_list: args.t.as_deref().map(parse_list).transpose()?,
        m: args.m.as_deref().map(parse_ints).transpose()?,
        u: args.u.clone(),
        resolution: args.resolution,
        points: args.points,
        proj: args.proj.as_deref().map(parse_matrix).transpose()?,
    };
    let cfg = load_config(&path, &overrides)?;
    if format == Format::Svg && cfg.t_list.is_empty() {
        return Err(CliError::new("E_NOTHING_TO_PLOT", "nothing to plot"));
    }
    let report = run(&cfg, &command, args.timings)?;
    let text = emit(&report, format)?;
    match &args.out {
        Some(p) => std::fs::write(p, &text)
            .map_err(|e| CliError::new("E_IO", format!("{}: {e}", p.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::new("E_IO", e.to_string()))?;
        }
    }
    for c in report.failed_checks() {
        eprintln!(
            "check failed: {} = {} (tolerance {})",
            c.name, c.value, c.tolerance
        );
    }
    Ok(report.pass)
}
