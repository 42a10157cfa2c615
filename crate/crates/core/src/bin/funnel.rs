fn main() {
    std::process::exit(funnel_core::cli::main_with_args(std::env::args_os()));
}
