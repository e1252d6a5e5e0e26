fn main() -> std::process::ExitCode {
    ocrs::cli::main()
}
