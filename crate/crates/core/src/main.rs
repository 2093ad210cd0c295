fn main() {
    std::process::exit(chainqkd::cli::main_with_args(std::env::args_os()));
}
