use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(geoflow_cli::run(std::env::args_os()))
}
