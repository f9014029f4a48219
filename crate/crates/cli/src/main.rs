mod commands;
mod config;
mod failure;
mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use commands::{Command, Context};
use failure::Failure;
use output::{hex_digest, Output};

/// Numerical laboratory for constant mean curvature graphs over strips.
#[derive(Debug, Parser)]
#[command(name = "cmc", version)]
struct Cli {
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output root; files go to `<out>/<command>/`. Defaults to
    /// `output.dir` from the config, then `out/<scenario>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent solves.
    #[arg(long)]
    jobs: Option<usize>,
}

fn init_logging() {
    let level = match std::env::var("CMC_LOG").ok().as_deref() {
        None | Some("") => "warn".to_string(),
        Some("quiet") => "off".to_string(),
        Some(other) => other.to_string(),
    };
    env_logger::Builder::new().parse_filters(&level).format_timestamp(None).init();
}

fn load(path: &Path) -> Result<(Context, String), Failure> {
    let bytes =
        std::fs::read(path).map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Failure::Config(format!("config {} is not UTF-8", path.display())))?;
    let config = config::parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((Context { config, base }, hex_digest(&bytes)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    let cmd = cli.command;

    let (ctx, digest) = match load(&cli.config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("cmc {}: {e}", cmd.name());
            return e.exit_code();
        }
    };
    let jobs = cli.jobs.or(ctx.config.jobs);
    if let Some(k) = jobs {
        if k == 0 {
            eprintln!("cmc {}: --jobs must be at least 1", cmd.name());
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let root = cli
        .out
        .or_else(|| ctx.config.output.dir.clone())
        .unwrap_or_else(|| Path::new("out").join(&ctx.config.scenario));
    let mut out = match Output::create(root.join(cmd.name())) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("cmc {}: {e}", cmd.name());
            return e.exit_code();
        }
    };

    let outcome = commands::run(cmd, &ctx, &mut out);
    let dir = out.dir().to_path_buf();
    let failure = outcome.err();
    if let Err(e) = out.finish(&ctx.config.scenario, cmd.name(), &digest, failure.as_ref()) {
        eprintln!("cmc {}: cannot write manifest: {e}", cmd.name());
        return failure.unwrap_or(e).exit_code();
    }
    match failure {
        None => {
            log::info!("outputs in {}", dir.display());
            ExitCode::SUCCESS
        }
        Some(e) => {
            eprintln!("cmc {}: {e}", cmd.name());
            e.exit_code()
        }
    }
}
