fn main() {
    std::process::exit(coalab::cli::run(std::env::args_os()));
}
