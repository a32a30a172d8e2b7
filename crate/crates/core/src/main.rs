use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use modsum::cli::{self, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let out = cli::run(&cli);
    eprint!("{}", out.summary);
    if let Some(path) = &out.out_path {
        if let Err(e) = std::fs::write(path, out.csv.as_bytes()) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_INPUT as u8);
        }
    } else {
        print!("{}", out.csv);
        let _ = std::io::stdout().flush();
    }
    ExitCode::from(out.code as u8)
}
