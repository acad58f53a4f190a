fn main() {
    std::process::exit(harvest_cli::run(std::env::args_os()));
}
