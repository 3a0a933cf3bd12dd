use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mdf_cli::config::parse_pairs;
use mdf_cli::{run_case, RunConfig};

/// Run a mimetic dual-field flow case and write its diagnostics.
#[derive(Debug, Parser)]
#[command(name = "mdf", version)]
struct Args {
    /// conservation, dissipation, convergence, tgv or custom
    #[arg(long)]
    case: Option<String>,
    /// Elements per axis
    #[arg(long = "K")]
    cells: Option<String>,
    /// Polynomial degree
    #[arg(long = "N")]
    degree: Option<String>,
    /// Time step, fractions such as 1/20 allowed
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "t-end")]
    t_end: Option<String>,
    /// Reynolds number (`inf` for inviscid)
    #[arg(long = "re", conflicts_with = "inviscid")]
    reynolds: Option<String>,
    #[arg(long)]
    inviscid: bool,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spectrum samples per axis, 0 to disable
    #[arg(long = "spectrum-n")]
    spectrum_n: Option<String>,
    /// Field dump cadence in steps, 0 to disable
    #[arg(long = "dump-every")]
    dump_every: Option<String>,
    /// Flat `key = value` configuration file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings, e.g. `--set solver=krylov`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn flag_pairs(args: &Args) -> Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    let mut put = |k: &str, v: &Option<String>| {
        if let Some(v) = v {
            pairs.push((k.to_string(), v.clone()));
        }
    };
    put("case", &args.case);
    put("K", &args.cells);
    put("N", &args.degree);
    put("dt", &args.dt);
    put("t_end", &args.t_end);
    put("Re", &args.reynolds);
    put("spectrum_n", &args.spectrum_n);
    put("dump_every", &args.dump_every);
    put("out", &args.out.as_ref().map(|p| p.display().to_string()));
    if args.inviscid {
        pairs.push(("inviscid".into(), "true".into()));
    }
    for s in &args.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let file = match &args.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(text) => match parse_pairs(&text) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            },
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => Vec::new(),
    };
    let flags = match flag_pairs(&args) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cfg = match RunConfig::resolve(&file, &flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_case(&cfg) {
        Ok(out) => {
            for r in &out.runs {
                let last = r.records.last().expect("at least the initial record");
                println!(
                    "K={} N={}: {} steps to t={}, K2={:.6e}, H1={:.6e}, max div u2={:.2e}",
                    r.cells,
                    r.degree,
                    last.k,
                    last.t,
                    last.k2,
                    last.h1,
                    r.records.iter().map(|x| x.div_u2).fold(0.0, f64::max)
                );
            }
            println!("wrote {}", cfg.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
