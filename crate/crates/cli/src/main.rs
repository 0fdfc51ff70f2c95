fn main() -> std::process::ExitCode {
    varp_cli::cli::main()
}
