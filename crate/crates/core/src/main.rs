fn main() -> std::process::ExitCode {
    growing_experts::cli::main()
}
