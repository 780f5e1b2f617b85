use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qoc_cli::app::run_from_args(std::env::args_os()) as u8)
}
