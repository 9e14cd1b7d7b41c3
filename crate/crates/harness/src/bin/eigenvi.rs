fn main() {
    std::process::exit(eigenvi_harness::cli::main_with_args(std::env::args_os()));
}
