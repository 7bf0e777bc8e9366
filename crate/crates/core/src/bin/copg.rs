fn main() {
    std::process::exit(copg::cli::main_with_args(std::env::args_os()));
}
