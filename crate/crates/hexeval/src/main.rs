fn main() {
    std::process::exit(hexeval::cli::run(std::env::args_os()));
}
