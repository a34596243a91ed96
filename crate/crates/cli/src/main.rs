use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use markovscope_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(markovscope_cli::EXIT_IO as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("markovscope: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
