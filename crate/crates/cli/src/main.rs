use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use specrev_cli::{run, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    // clap exits with 2 on usage errors; 2 is reserved for "unsatisfiable".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_INPUT
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
