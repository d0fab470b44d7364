fn main() -> std::process::ExitCode {
    coverart::cli::main()
}
