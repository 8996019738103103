use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(vbsa_cli::run(std::env::args_os()))
}
