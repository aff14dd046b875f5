fn main() {
    std::process::exit(pfnts::harness::cli::main_with_args(std::env::args_os()));
}
