fn main() {
    std::process::exit(oscillab::cli::main_with(std::env::args_os()));
}
