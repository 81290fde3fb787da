use std::process::ExitCode;

fn main() -> ExitCode {
    nhrmt::cli::main(std::env::args_os())
}
