use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(cuspext::cli::run(std::env::args_os()))
}
