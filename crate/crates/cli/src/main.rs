use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sigma_geometry_cli::{execute, Cli, CliError};

const THREADS_VAR: &str = "SIGMA_GEOMETRY_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let output = execute(cli)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &output.text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(output.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => {
            if code != 0 {
                eprintln!("sigma-geometry: points escape every tube up to the dimension cap");
            }
            code
        }
        Err(e) => {
            eprintln!("sigma-geometry: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
