fn main() -> std::process::ExitCode {
    finsler_lab::cli::main()
}
