fn main() {
    std::process::exit(potts_qudit::cli::main_with_args(std::env::args_os()));
}
