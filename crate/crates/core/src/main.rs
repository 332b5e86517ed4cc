fn main() {
    std::process::exit(ibflow::cli::main_with_args(std::env::args_os()));
}
