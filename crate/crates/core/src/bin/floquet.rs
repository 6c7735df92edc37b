fn main() {
    std::process::exit(floquet::cli::main_with_args(std::env::args_os()));
}
