fn main() {
    std::process::exit(herdlab_cli::main_with_args(std::env::args_os()));
}
