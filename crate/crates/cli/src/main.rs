fn main() {
    std::process::exit(liberation_cli::run(std::env::args_os().collect()));
}
