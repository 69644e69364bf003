fn main() {
    std::process::exit(gsa_relay::cli::main_with_args(std::env::args_os()));
}
