fn main() {
    std::process::exit(gstk::cli::run_from(std::env::args_os()));
}
