fn main() {
    std::process::exit(bpwhile::cli::main_with(std::env::args_os()));
}
