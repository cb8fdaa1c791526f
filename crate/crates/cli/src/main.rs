use std::process::ExitCode;

fn main() -> ExitCode {
    fracising_cli::run(std::env::args_os())
}
