fn main() {
    std::process::exit(gpbf::cli::main_with_args(std::env::args_os()));
}
