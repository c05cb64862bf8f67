fn main() {
    std::process::exit(lsls::cli::main_with_args(std::env::args_os()));
}
