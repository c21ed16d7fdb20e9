fn main() {
    std::process::exit(polcbm_app::cli::main_with_args(std::env::args_os()));
}
