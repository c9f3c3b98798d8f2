fn main() -> std::process::ExitCode {
    agritrace_service::cli::main()
}
