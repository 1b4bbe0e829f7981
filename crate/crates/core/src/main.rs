use std::process::ExitCode;

fn main() -> ExitCode {
    twinbeam::cli::run(std::env::args_os())
}
