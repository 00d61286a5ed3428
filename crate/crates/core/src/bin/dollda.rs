fn main() {
    std::process::exit(dollda::cli::run(std::env::args_os()));
}
