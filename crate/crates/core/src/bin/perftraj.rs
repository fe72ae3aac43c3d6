fn main() {
    std::process::exit(perftraj::cli::main_with_args(std::env::args_os()));
}
