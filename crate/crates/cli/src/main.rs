fn main() {
    std::process::exit(saddlelab_cli::main_with(std::env::args_os()));
}
