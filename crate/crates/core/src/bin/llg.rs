fn main() {
    std::process::exit(llg_core::cli::main_with_args(std::env::args_os()));
}
