use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use publish_core::ast::Target;
use publish_core::config::{load_config, DEFAULT_CONFIG};
use publish_core::diagnostic::Diagnostic;
use publish_core::pipeline::{cmd_build, cmd_check, BuildOptions, BuildReport};

#[derive(Parser)]
#[command(name = "publish", version, about = "Build an HTML book, notebooks and a slide deck from one markdown source")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured targets into the output directory.
    Build {
        #[arg(long, default_value = DEFAULT_CONFIG)]
        config: PathBuf,
        /// Build only this target (repeatable).
        #[arg(long = "target", value_parser = parse_target)]
        targets: Vec<Target>,
        /// Output directory, overriding `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Treat warnings as errors.
        #[arg(long)]
        strict: bool,
    },
    /// Run the whole pipeline and report diagnostics without writing.
    Check {
        #[arg(long, default_value = DEFAULT_CONFIG)]
        config: PathBuf,
        #[arg(long)]
        strict: bool,
    },
}

fn parse_target(s: &str) -> Result<Target, String> {
    s.parse().map_err(|_| format!("unknown target `{s}`; expected book, notebook or slides"))
}

fn print(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn finish(report: &BuildReport) -> ExitCode {
    print(&report.diagnostics);
    ExitCode::from(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config_path = match &cli.command {
        Command::Build { config, .. } | Command::Check { config, .. } => config.clone(),
    };
    let (config, diags) = load_config(&config_path);
    print(&diags);
    let Some(config) = config else {
        return ExitCode::from(2);
    };
    match cli.command {
        Command::Build { targets, out, strict, .. } => {
            let report = cmd_build(&config, &BuildOptions { targets, out_dir: out, strict });
            let code = finish(&report);
            for (target, paths) in &report.emitted {
                println!("{}: {} files", target, paths.len());
            }
            code
        }
        Command::Check { strict, .. } => finish(&cmd_check(&config, strict)),
    }
}
