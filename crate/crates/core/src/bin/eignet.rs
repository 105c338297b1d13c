fn main() {
    std::process::exit(eignet::cli::run(std::env::args_os()));
}
