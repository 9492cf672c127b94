fn main() {
    std::process::exit(ensemble_kernel::cli::main_with_args(std::env::args_os()));
}
