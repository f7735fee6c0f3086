fn main() {
    std::process::exit(splitstab::cli::main_with_args(std::env::args_os()));
}
