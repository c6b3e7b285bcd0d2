fn main() {
    std::process::exit(gromolab::cli::main_with_args(std::env::args_os()));
}
