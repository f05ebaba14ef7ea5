fn main() {
    std::process::exit(circdom::harness::cli::run(std::env::args_os()));
}
