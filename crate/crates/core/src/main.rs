fn main() {
    std::process::exit(authid::cli::run(std::env::args_os()));
}
