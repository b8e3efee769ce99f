fn main() {
    std::process::exit(lowdeg::cli::main_with_args(std::env::args_os()));
}
