fn main() -> std::process::ExitCode {
    effaction::cli::main()
}
