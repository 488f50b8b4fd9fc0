fn main() {
    let code = frolov::cli::main_with_args(std::env::args().collect());
    std::process::exit(code);
}
