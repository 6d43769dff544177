fn main() {
    std::process::exit(stackdec::cli::main_with_args(std::env::args_os()));
}
