fn main() -> std::process::ExitCode {
    cdi_cli::main()
}
