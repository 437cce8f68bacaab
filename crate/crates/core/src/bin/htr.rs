fn main() {
    std::process::exit(htr::cli::run_from(std::env::args_os()));
}
