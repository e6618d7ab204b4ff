fn main() {
    std::process::exit(repair_core::interface::cli::main_with(std::env::args_os()));
}
