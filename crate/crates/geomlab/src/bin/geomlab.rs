fn main() {
    std::process::exit(geomlab::cli::main_with_args(std::env::args_os()));
}
