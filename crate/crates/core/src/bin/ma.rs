fn main() {
    std::process::exit(ma_core::cli::main_with_args(std::env::args_os()));
}
