fn main() {
    std::process::exit(clairaut::cli::main_with_args(std::env::args_os()));
}
