fn main() {
    std::process::exit(retsim_cli::main_with_args(std::env::args_os()));
}
