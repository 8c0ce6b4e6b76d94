fn main() -> std::process::ExitCode {
    intconf::cli::main()
}
