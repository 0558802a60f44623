fn main() {
    std::process::exit(splab_cli::main_with(std::env::args_os()));
}
