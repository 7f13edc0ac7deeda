fn main() {
    std::process::exit(lmoamp_harness::cli::main_with_args(std::env::args_os()));
}
