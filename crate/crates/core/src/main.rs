use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use trilevel::cli::{parse_config, run, CliError, Command, ConfigError};

/// Collective three-level atoms in a quantized field.
#[derive(Debug, Parser)]
#[command(name = "trilevel", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Photon-number guard band, overriding `guard` from the config.
    #[arg(long)]
    guard: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = &args.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(g) = args.guard {
        if g > cfg.space.n_max() {
            return Err(ConfigError::Key {
                key: "guard".into(),
                message: format!("must be <= n_max = {}", cfg.space.n_max()),
            }
            .into());
        }
        cfg.guard = g;
    }

    let outcome = run(args.command, &cfg)?;
    let s = &outcome.summary;
    let failed: Vec<_> = s.checks.iter().filter(|c| !c.pass).collect();
    println!(
        "{}: {}/{} checks passed",
        s.command,
        s.checks.len() - failed.len(),
        s.checks.len()
    );
    for c in &failed {
        println!("  FAIL {}: {:e} (tolerance {:e})", c.name, c.residual, c.tolerance);
    }
    for note in &s.notes {
        println!("  note: {note}");
    }
    if outcome.truncation_unsafe {
        println!("  truncation unsafe: population reached n_max");
    }
    for f in &outcome.files {
        println!("  wrote {}", f.display());
    }
    println!("  wall time {:.3} s", s.wall_time_s);
    Ok(outcome.exit_code())
}
