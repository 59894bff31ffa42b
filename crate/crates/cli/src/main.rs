use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;
use miniform::{run_file, RunOptions};

/// Run a miniform program in batch mode.
#[derive(Parser, Debug)]
#[command(name = "miniform", version)]
struct Args {
    /// Program file, usually with the extension .frm.
    program: PathBuf,
    /// Setup file with `<key> <value>` lines.
    #[arg(long)]
    setup: Option<PathBuf>,
    /// Mirror standard output to <program>.log.
    #[arg(long)]
    log: bool,
    /// Predefine a preprocessor variable, as name=value.
    #[arg(short = 'D', value_name = "NAME=VALUE")]
    define: Vec<String>,
    /// Directory searched for include and procedure files.
    #[arg(short = 'I', long = "include", value_name = "DIR")]
    include: Vec<PathBuf>,
}

fn options(args: &Args) -> anyhow::Result<RunOptions> {
    let mut opts = RunOptions::default();
    if let Some(path) = &args.setup {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading setup file {}", path.display()))?;
        opts.apply_setup(&text).map_err(anyhow::Error::msg).with_context(|| format!("in {}", path.display()))?;
    }
    opts.include_path.extend(args.include.iter().cloned());
    for d in &args.define {
        let (name, value) = match d.split_once('=') {
            Some((n, v)) => (n, v),
            None => (d.as_str(), "1"),
        };
        if name.is_empty() {
            bail!("-D needs a name");
        }
        opts.defines.push((name.to_string(), value.to_string()));
    }
    Ok(opts)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("miniform: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(args: &Args) -> anyhow::Result<ExitCode> {
    let opts = options(args)?;
    let report = run_file(&args.program, &opts)?;
    std::io::stdout().write_all(report.stdout.as_bytes())?;
    std::io::stderr().write_all(report.stderr.as_bytes())?;
    if args.log {
        let log = args.program.with_extension("log");
        let mut text = report.stdout.clone();
        text.push_str(&report.stderr);
        std::fs::write(&log, text).with_context(|| format!("writing {}", log.display()))?;
    }
    Ok(if report.status == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
