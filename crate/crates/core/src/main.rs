fn main() {
    std::process::exit(vbb_core::cli::main_with_args(std::env::args_os()));
}
