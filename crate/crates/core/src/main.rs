fn main() {
    std::process::exit(covertlqr::cli::run(std::env::args_os()));
}
