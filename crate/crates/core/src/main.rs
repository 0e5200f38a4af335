fn main() -> std::process::ExitCode {
    loadtune::cli::main()
}
