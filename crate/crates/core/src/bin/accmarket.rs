fn main() {
    std::process::exit(accmarket::cli::run(std::env::args_os()));
}
