use std::process::ExitCode;

fn main() -> ExitCode {
    ehs_sim::cli::main_with_args(std::env::args_os()).into()
}
