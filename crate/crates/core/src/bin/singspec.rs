fn main() {
    std::process::exit(singspec::cli::main_from_args(std::env::args_os()));
}
