use std::process::ExitCode;

fn main() -> ExitCode {
    pumpguard::cli::main_with_args(std::env::args_os())
}
