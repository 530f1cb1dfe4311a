fn main() -> std::process::ExitCode {
    graphsgan::cli::main()
}
