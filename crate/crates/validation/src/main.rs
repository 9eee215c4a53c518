//! The `cdi` entry point, built inside this package so the acceptance suite
//! can spawn it as a separate process.

fn main() -> std::process::ExitCode {
    cdi_cli::main()
}
