use std::env;
use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(crankep::cli::main_with_args(env::args()) as u8)
}
