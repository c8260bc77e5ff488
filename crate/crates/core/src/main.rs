fn main() {
    std::process::exit(advectum::cli::main_with_args(std::env::args_os()));
}
