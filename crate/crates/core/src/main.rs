fn main() {
    std::process::exit(purification::cli::main_with_args(std::env::args_os()));
}
