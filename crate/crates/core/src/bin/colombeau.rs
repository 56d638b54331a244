fn main() {
    std::process::exit(colombeau::cli::main_with_args(std::env::args_os()));
}
