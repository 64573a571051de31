fn main() {
    std::process::exit(edi::cli::main_with(std::env::args_os()));
}
