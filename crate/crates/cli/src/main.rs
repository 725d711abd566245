use std::process::ExitCode;

use clap::Parser;
use fracldp::{run, Cli, Status};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = cli.command.split();
    match run(command, args) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::VerdictFail) => {
            eprintln!("verdict FAIL, see {}", args.out_dir.join("result.json").display());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
