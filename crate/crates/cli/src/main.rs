use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use epsopt_cli::args::Cli;
use epsopt_cli::Io;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut warn = stderr.lock();
    let result = epsopt_cli::run(cli, &mut Io { out: &mut out, warn: &mut warn });
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(warn, "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
