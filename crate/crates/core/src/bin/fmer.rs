use std::process::ExitCode;

fn main() -> ExitCode {
    fmer::cli::main()
}
