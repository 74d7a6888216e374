fn main() {
    std::process::exit(fracouple::cli::run(std::env::args_os()));
}
