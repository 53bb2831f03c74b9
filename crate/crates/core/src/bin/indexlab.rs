fn main() {
    std::process::exit(indexlab::cli::main_with_args(std::env::args_os()));
}
