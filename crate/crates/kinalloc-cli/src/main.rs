use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(kinalloc_cli::run(std::env::args_os()))
}
